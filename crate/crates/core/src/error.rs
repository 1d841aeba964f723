use thiserror::Error;

/// Errors produced by the statistics and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),

    /// Zero estimated standard error, so the Studentized statistic is undefined.
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("excessive degeneracy: {discarded} of {total} bootstrap replicates discarded")]
    ExcessiveDegeneracy { discarded: usize, total: usize },

    #[error("enumeration needs {required} kernel evaluations, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("no candidate truncation constant produced a valid bootstrap null")]
    NoValidConstant,

    #[error("replicate {rep} stayed degenerate after {redraws} redraws")]
    RedrawCapExceeded { rep: usize, redraws: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateSample(msg.into())
    }

    /// True for the failure modes a simulation replicate may recover from by redrawing data.
    pub fn is_degeneracy(&self) -> bool {
        matches!(
            self,
            Error::DegenerateSample(_) | Error::ExcessiveDegeneracy { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
