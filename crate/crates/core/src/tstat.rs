//! Two-sample t-statistic, sample moments and the skewness-corrected tail.

use crate::error::{Error, Result};
use crate::normal;
use crate::numeric::{self, Dd};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSummary {
    pub n: usize,
    pub mean: f64,
    /// Divisor n − 1.
    pub var: f64,
    /// Third central moment, divisor n.
    pub gamma3: f64,
}

impl MomentSummary {
    /// Summary carrying population moments for a group of size `n`.
    pub fn population(n: usize, mean: f64, var: f64, gamma3: f64) -> Self {
        MomentSummary {
            n,
            mean,
            var,
            gamma3,
        }
    }
}

pub fn moment_summary(x: &[f64]) -> Result<MomentSummary> {
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid("moments need at least two observations"));
    }
    let mean = numeric::mean(x);
    let (ss, cube) = x.iter().fold((Dd::ZERO, Dd::ZERO), |(ss, cube), &v| {
        let d = Dd::from_f64(v).sub(mean);
        let d2 = d.square();
        (ss.add(d2), cube.add(d2.mul(d)))
    });
    Ok(MomentSummary {
        n,
        mean: mean.value(),
        var: ss.div_f64((n - 1) as f64).value(),
        gamma3: cube.div_f64(n as f64).value(),
    })
}

/// Welch-form (X̄ − Ȳ)/√(σ̂1²/n1 + σ̂2²/n2).
pub fn two_sample_t(x: &[f64], y: &[f64]) -> Result<f64> {
    let (n1, n2) = (x.len(), y.len());
    if n1 < 2 || n2 < 2 {
        return Err(Error::invalid("t-statistic needs at least two observations per group"));
    }
    let v1 = numeric::sum_sq_dev(x).div_f64((n1 - 1) as f64).value();
    let v2 = numeric::sum_sq_dev(y).div_f64((n2 - 1) as f64).value();
    let denom = v1 / n1 as f64 + v2 / n2 as f64;
    if !(denom > 0.0) {
        return Err(Error::degenerate("both groups are constant"));
    }
    let diff = numeric::mean(x).sub(numeric::mean(y)).value();
    Ok(diff / denom.sqrt())
}

/// Standardized third cumulant of X̄ − Ȳ, (γ1/n1² − γ2/n2²)/(σ1²/n1 + σ2²/n2)^{3/2}.
pub fn mean_difference_skewness(m1: &MomentSummary, m2: &MomentSummary) -> Result<f64> {
    if !(m1.var > 0.0 && m2.var > 0.0) {
        return Err(Error::invalid("variances must be positive"));
    }
    let (n1, n2) = (m1.n as f64, m2.n as f64);
    let kappa3 = m1.gamma3 / (n1 * n1) - m2.gamma3 / (n2 * n2);
    let s2 = m1.var / n1 + m2.var / n2;
    Ok(kappa3 / (s2 * s2.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailApprox {
    pub x: f64,
    /// 1 − Φ(x).
    pub base: f64,
    pub correction: f64,
    pub corrected: f64,
}

/// Leading-order approximation of P(T ≥ x) for the two-sample t-statistic,
/// (1 − Φ(x))·exp{−κ x³/3} with κ from [`mean_difference_skewness`].
///
/// The moments are used as given, so pass [`MomentSummary::population`] values
/// for the population form or [`moment_summary`] output for the plug-in form.
pub fn corrected_tail(x: f64, m1: &MomentSummary, m2: &MomentSummary) -> Result<TailApprox> {
    if !(x >= 0.0) {
        return Err(Error::invalid("tail point must be non-negative"));
    }
    let kappa = mean_difference_skewness(m1, m2)?;
    let base = normal::upper_tail(x);
    let correction = (-kappa * x * x * x / 3.0).exp();
    Ok(TailApprox {
        x,
        base,
        correction,
        corrected: base * correction,
    })
}
