//! Benjamini-Hochberg step-up procedure, FDP accounting and the skewness diagnostic.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tstat::{mean_difference_skewness, MomentSummary};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BhOutcome {
    pub m: usize,
    pub k_hat: usize,
    /// Rejected feature indices, ascending.
    pub rejected: Vec<usize>,
    /// p_(k̂), or 0 when nothing is rejected.
    pub threshold: f64,
}

/// Step-up rule: k̂ = max{k : p_(k) ≤ αk/m}; rejects every p ≤ p_(k̂).
pub fn bh_procedure(p: &[f64], alpha: f64) -> Result<BhOutcome> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("α = {alpha} is outside (0, 1)")));
    }
    if let Some(i) = p.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::invalid(format!("p-value {i} is not in [0, 1]")));
    }
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let k_hat = (1..=m)
        .rev()
        .find(|&k| p[order[k - 1]] <= alpha * k as f64 / m as f64)
        .unwrap_or(0);
    if k_hat == 0 {
        return Ok(BhOutcome {
            m,
            k_hat,
            rejected: Vec::new(),
            threshold: 0.0,
        });
    }
    let threshold = p[order[k_hat - 1]];
    let rejected = (0..m).filter(|&i| p[i] <= threshold).collect();
    Ok(BhOutcome {
        m,
        k_hat,
        rejected,
        threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdrReport {
    pub fdp: f64,
    pub correct_rejection_proportion: f64,
    pub v: usize,
    pub r: usize,
    pub m0: usize,
    pub m1: usize,
    /// False when there are no alternatives, in which case the proportion is reported as 0.
    pub power_defined: bool,
}

/// FDP = V/max(1, R) and (R − V)/max(1, m1) against the known null mask.
pub fn fdr_accounting(outcome: &BhOutcome, is_null: &[bool]) -> Result<FdrReport> {
    if is_null.len() != outcome.m {
        return Err(Error::invalid(format!(
            "null mask has {} entries for {} features",
            is_null.len(),
            outcome.m
        )));
    }
    let m0 = is_null.iter().filter(|&&b| b).count();
    let m1 = outcome.m - m0;
    let r = outcome.rejected.len();
    let v = outcome.rejected.iter().filter(|&&i| is_null[i]).count();
    Ok(FdrReport {
        fdp: v as f64 / r.max(1) as f64,
        correct_rejection_proportion: (r - v) as f64 / m1.max(1) as f64,
        v,
        r,
        m0,
        m1,
        power_defined: m1 > 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkewnessDiagnostic {
    pub c0_hat: f64,
}

/// Plug-in skewness parameter (n^{1/2}/m0) Σ_k |γ1k n1⁻² − γ2k n2⁻²| / σ_n̄,k³ over the null set,
/// with n = min(n1, n2).
pub fn skewness_diagnostic(
    moments: &[(MomentSummary, MomentSummary)],
    null_set: &[usize],
) -> Result<SkewnessDiagnostic> {
    if null_set.is_empty() {
        return Err(Error::invalid("null set is empty"));
    }
    let mut total = 0.0;
    for &k in null_set {
        let (m1, m2) = moments
            .get(k)
            .ok_or_else(|| Error::invalid(format!("null index {k} out of range")))?;
        let n = m1.n.min(m2.n) as f64;
        total += n.sqrt() * mean_difference_skewness(m1, m2)?.abs();
    }
    Ok(SkewnessDiagnostic {
        c0_hat: total / null_set.len() as f64,
    })
}
