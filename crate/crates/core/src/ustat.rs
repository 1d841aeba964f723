//! U-statistics, leave-one-out jackknife variances and Studentized statistics.
//!
//! The generic paths enumerate every index combination once, accumulating each
//! kernel value into the overall sum and into the per-observation sums that
//! define the jackknife quantities q_i and p_j. All sums are double-double and
//! rounded once, which is what lets the fast Mann-Whitney path agree with the
//! generic one to the last bit or two.

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, OneSampleKernelSpec};
use crate::numeric::{binomial, sum_sq_around, sum_sq_dev_dd, Combinations, Dd};

/// Default cap on the number of kernel evaluations of a generic enumeration.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct TwoSampleData {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl TwoSampleData {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() || y.is_empty() {
            return Err(Error::invalid("both samples must be nonempty"));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("x[{i}] is not finite")));
        }
        if let Some(j) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("y[{j}] is not finite")));
        }
        Ok(TwoSampleData { x, y })
    }

    pub fn n1(&self) -> usize {
        self.x.len()
    }

    pub fn n2(&self) -> usize {
        self.y.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudentizedResult {
    pub u: f64,
    pub theta0: f64,
    pub sigma1_hat2: f64,
    pub sigma2_hat2: f64,
    /// s1²σ̂1²/n1 + s2²σ̂2²/n2 (one-sample: s²σ̂²/n).
    pub sigma_nbar_hat2: f64,
    pub statistic: f64,
}

fn assemble(
    u: f64,
    centred: f64,
    theta0: f64,
    parts: &[(usize, usize, f64)],
) -> Result<StudentizedResult> {
    let sigma_nbar_hat2: f64 = parts
        .iter()
        .map(|&(s, n, v)| (s * s) as f64 * v / n as f64)
        .sum();
    if !(sigma_nbar_hat2 > 0.0) {
        return Err(Error::degenerate("jackknife variance is zero"));
    }
    Ok(StudentizedResult {
        u,
        theta0,
        sigma1_hat2: parts[0].2,
        sigma2_hat2: parts.get(1).map_or(0.0, |p| p.2),
        sigma_nbar_hat2,
        statistic: centred / sigma_nbar_hat2.sqrt(),
    })
}

fn count_or_budget(counts: &[Option<u128>], budget: u128) -> Result<u128> {
    let mut total: u128 = 1;
    for c in counts {
        total = c
            .and_then(|c| total.checked_mul(c))
            .ok_or(Error::BudgetExceeded {
                required: u128::MAX,
                budget,
            })?;
    }
    if total > budget {
        return Err(Error::BudgetExceeded {
            required: total,
            budget,
        });
    }
    Ok(total)
}

fn dd_from_u128(v: u128) -> Dd {
    let hi = v as f64;
    // hi is within half an ulp of v, so the residual fits in an i128 and rounds once.
    let lo = (v as i128 - hi as i128) as f64;
    Dd { hi, lo }
}

fn all_equal(values: &[Dd]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

struct TwoSampleSums {
    total: Dd,
    s1: Vec<Dd>,
    s2: Vec<Dd>,
    count: u128,
}

fn enumerate_two_sample(
    kernel: &KernelSpec,
    data: &TwoSampleData,
    budget: u128,
    per_observation: bool,
) -> Result<TwoSampleSums> {
    let (s1, s2) = kernel.order;
    let (n1, n2) = (data.n1(), data.n2());
    if n1 < s1 || n2 < s2 {
        return Err(Error::invalid(format!(
            "samples of sizes ({n1}, {n2}) are smaller than kernel order ({s1}, {s2})"
        )));
    }
    let count = count_or_budget(&[binomial(n1, s1), binomial(n2, s2)], budget)?;
    let mut total = Dd::ZERO;
    let mut sums1 = vec![Dd::ZERO; if per_observation { n1 } else { 0 }];
    let mut sums2 = vec![Dd::ZERO; if per_observation { n2 } else { 0 }];
    let mut xb = vec![0.0; s1];
    let mut yb = vec![0.0; s2];
    let mut xc = Combinations::new(n1, s1);
    while let Some(xi) = xc.next_combo() {
        for (slot, &i) in xb.iter_mut().zip(xi) {
            *slot = data.x[i];
        }
        let mut yc = Combinations::new(n2, s2);
        while let Some(yj) = yc.next_combo() {
            for (slot, &j) in yb.iter_mut().zip(yj) {
                *slot = data.y[j];
            }
            let h = kernel.evaluate(&xb, &yb);
            total = total.add_f64(h);
            if per_observation {
                for &i in xi {
                    sums1[i] = sums1[i].add_f64(h);
                }
                for &j in yj {
                    sums2[j] = sums2[j].add_f64(h);
                }
            }
        }
    }
    Ok(TwoSampleSums {
        total,
        s1: sums1,
        s2: sums2,
        count,
    })
}

/// Two-sample U-statistic, the exact average over all index combinations.
pub fn u_two_sample(kernel: &KernelSpec, data: &TwoSampleData) -> Result<f64> {
    u_two_sample_with_budget(kernel, data, DEFAULT_BUDGET)
}

pub fn u_two_sample_with_budget(
    kernel: &KernelSpec,
    data: &TwoSampleData,
    budget: u128,
) -> Result<f64> {
    let sums = enumerate_two_sample(kernel, data, budget, false)?;
    Ok(sums.total.div(dd_from_u128(sums.count)).value())
}

/// Jackknife-Studentized two-sample U-statistic by full enumeration.
pub fn jackknife_two_sample(kernel: &KernelSpec, data: &TwoSampleData) -> Result<StudentizedResult> {
    jackknife_two_sample_with_budget(kernel, data, DEFAULT_BUDGET)
}

pub fn jackknife_two_sample_with_budget(
    kernel: &KernelSpec,
    data: &TwoSampleData,
    budget: u128,
) -> Result<StudentizedResult> {
    let theta0 = kernel.theta_null.ok_or_else(|| {
        Error::UnsupportedKernel(format!("kernel `{}` has no null value θ", kernel.name))
    })?;
    let (s1, s2) = kernel.order;
    let (n1, n2) = (data.n1(), data.n2());
    if n1 < s1 + 1 || n2 < s2 + 1 {
        return Err(Error::invalid(format!(
            "jackknife needs n1 > {s1} and n2 > {s2}, got ({n1}, {n2})"
        )));
    }
    let sums = enumerate_two_sample(kernel, data, budget, true)?;
    let count = dd_from_u128(sums.count);
    let u = sums.total.div(count);
    let centred = sums.total.sub(count.mul(Dd::from_f64(theta0))).div(count);

    // Each x_i appears in C(n1−1, s1−1)·C(n2, s2) combinations.
    let k1 = dd_from_u128(binomial(n1 - 1, s1 - 1).unwrap() * binomial(n2, s2).unwrap());
    let k2 = dd_from_u128(binomial(n1, s1).unwrap() * binomial(n2 - 1, s2 - 1).unwrap());
    let q: Vec<Dd> = sums.s1.iter().map(|s| s.div(k1)).collect();
    let p: Vec<Dd> = sums.s2.iter().map(|s| s.div(k2)).collect();
    let v1 = if all_equal(&q) {
        0.0
    } else {
        sum_sq_dev_dd(&q).div_f64((n1 - 1) as f64).value()
    };
    let v2 = if all_equal(&p) {
        0.0
    } else {
        sum_sq_dev_dd(&p).div_f64((n2 - 1) as f64).value()
    };
    assemble(
        u.value(),
        centred.value(),
        theta0,
        &[(s1, n1, v1), (s2, n2, v2)],
    )
}

/// (n Σa² − (Σa)²) / (n (n−1) d²), the sample variance of a_i/d, from exact integer sums.
fn count_variance(counts: &[u64], d: usize) -> f64 {
    let n = counts.len() as u128;
    let s: u128 = counts.iter().map(|&a| a as u128).sum();
    let ss: u128 = counts.iter().map(|&a| (a as u128) * (a as u128)).sum();
    let num = n * ss - s * s;
    if num == 0 {
        return 0.0;
    }
    let den = n * (n - 1) * (d as u128) * (d as u128);
    dd_from_u128(num).div(dd_from_u128(den)).value()
}

/// Studentized Mann-Whitney statistic in O((n1 + n2) log(n1 + n2)).
///
/// U = (n1 n2)⁻¹ Σ I{X_i ≤ Y_j}, centred at 1/2, with q_i = n2⁻¹ Σ_j I{Y_j < X_i}
/// and p_j = n1⁻¹ Σ_i I{X_i ≤ Y_j}.
pub fn mann_whitney_fast(data: &TwoSampleData) -> Result<StudentizedResult> {
    let (n1, n2) = (data.n1(), data.n2());
    if n1 < 2 || n2 < 2 {
        return Err(Error::invalid("Mann-Whitney needs at least two observations per group"));
    }
    let mut xs = data.x.clone();
    let mut ys = data.y.clone();
    xs.sort_unstable_by(f64::total_cmp);
    ys.sort_unstable_by(f64::total_cmp);
    mann_whitney_sorted(&xs, &ys)
}

/// Exact Mann-Whitney count c = Σ I{X_i ≤ Y_j} with the two jackknife variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct MwParts {
    pub c: u128,
    pub v1: f64,
    pub v2: f64,
}

/// Counts from a pair of ascending samples.
pub(crate) fn mw_parts_sorted(x_sorted: &[f64], y_sorted: &[f64]) -> MwParts {
    let (n1, n2) = (x_sorted.len(), y_sorted.len());
    let a: Vec<u64> = x_sorted
        .iter()
        .map(|&xi| y_sorted.partition_point(|&v| v < xi) as u64)
        .collect();
    let b: Vec<u64> = y_sorted
        .iter()
        .map(|&yj| x_sorted.partition_point(|&v| v <= yj) as u64)
        .collect();
    MwParts {
        c: b.iter().map(|&v| v as u128).sum(),
        v1: count_variance(&a, n2),
        v2: count_variance(&b, n1),
    }
}

/// σ̂²_n̄ for an order-(1, 1) kernel.
#[inline]
pub(crate) fn mw_sigma2(parts: &MwParts, n1: usize, n2: usize) -> f64 {
    parts.v1 / n1 as f64 + parts.v2 / n2 as f64
}

/// As [`mann_whitney_fast`], reusing caller-sorted copies of the samples.
pub(crate) fn mann_whitney_sorted(x_sorted: &[f64], y_sorted: &[f64]) -> Result<StudentizedResult> {
    let (n1, n2) = (x_sorted.len(), y_sorted.len());
    let parts = mw_parts_sorted(x_sorted, y_sorted);
    let nn = (n1 as u128) * (n2 as u128);
    let u = dd_from_u128(parts.c).div(dd_from_u128(nn)).value();
    let centred_num = 2 * parts.c as i128 - nn as i128;
    let centred = Dd::from_f64(centred_num as f64).div(dd_from_u128(2 * nn)).value();
    assemble(u, centred, 0.5, &[(1, n1, parts.v1), (1, n2, parts.v2)])
}

fn check_points(kernel: &OneSampleKernelSpec, x: &[f64]) -> Result<usize> {
    if x.len() % kernel.dim != 0 {
        return Err(Error::invalid(format!(
            "{} values do not form points of dimension {}",
            x.len(),
            kernel.dim
        )));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("observation value {i} is not finite")));
    }
    Ok(x.len() / kernel.dim)
}

fn enumerate_one_sample(
    kernel: &OneSampleKernelSpec,
    x: &[f64],
    n: usize,
    budget: u128,
    per_observation: bool,
) -> Result<(Dd, Vec<Dd>, u128)> {
    let s = kernel.order;
    if n < s {
        return Err(Error::invalid(format!(
            "sample of size {n} is smaller than kernel order {s}"
        )));
    }
    let count = count_or_budget(&[binomial(n, s)], budget)?;
    let points: Vec<&[f64]> = x.chunks(kernel.dim).collect();
    let mut block: Vec<&[f64]> = vec![points[0]; s];
    let mut total = Dd::ZERO;
    let mut sums = vec![Dd::ZERO; if per_observation { n } else { 0 }];
    let mut combos = Combinations::new(n, s);
    while let Some(idx) = combos.next_combo() {
        for (slot, &i) in block.iter_mut().zip(idx) {
            *slot = points[i];
        }
        let h = kernel.evaluate(&block);
        total = total.add_f64(h);
        if per_observation {
            for &i in idx {
                sums[i] = sums[i].add_f64(h);
            }
        }
    }
    Ok((total, sums, count))
}

/// One-sample U-statistic. `x` holds n points of dimension `kernel.dim`, row-major.
pub fn u_one_sample(kernel: &OneSampleKernelSpec, x: &[f64]) -> Result<f64> {
    let n = check_points(kernel, x)?;
    let (total, _, count) = enumerate_one_sample(kernel, x, n, DEFAULT_BUDGET, false)?;
    Ok(total.div(dd_from_u128(count)).value())
}

/// Studentized one-sample U-statistic with σ̂² = (n−1)(n−s)⁻² Σ (q_i − U)².
///
/// The result reports σ̂² as `sigma1_hat2` and s²σ̂²/n as `sigma_nbar_hat2`.
pub fn studentize_one_sample(kernel: &OneSampleKernelSpec, x: &[f64]) -> Result<StudentizedResult> {
    let theta0 = kernel.theta_null.ok_or_else(|| {
        Error::UnsupportedKernel(format!("kernel `{}` has no null value θ", kernel.name))
    })?;
    let n = check_points(kernel, x)?;
    let s = kernel.order;
    if n <= 2 * s {
        return Err(Error::invalid(format!(
            "Studentization needs n > {}, got {n}",
            2 * s
        )));
    }
    let (total, sums, count) = enumerate_one_sample(kernel, x, n, DEFAULT_BUDGET, true)?;
    let count = dd_from_u128(count);
    let u = total.div(count);
    let centred = total.sub(count.mul(Dd::from_f64(theta0))).div(count);
    let k1 = dd_from_u128(binomial(n - 1, s - 1).unwrap());
    let q: Vec<Dd> = sums.iter().map(|v| v.div(k1)).collect();
    let var = if all_equal(&q) {
        0.0
    } else {
        let factor = (n - 1) as f64 / ((n - s) * (n - s)) as f64;
        sum_sq_around(&q, u).mul(Dd::from_f64(factor)).value()
    };
    assemble(u.value(), centred.value(), theta0, &[(s, n, var)])
}
