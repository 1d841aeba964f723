//! p-values under normal, bootstrap and regularized-bootstrap calibration.
//!
//! Bootstrap replicate (k, b) draws its resampling indices from the stream
//! keyed by (seed, k, b), so pools do not depend on thread scheduling, and the
//! regularized pipeline reuses exactly the indices of the conventional one.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;
use crate::numeric;
use crate::rng::{child_key, derive_key, CounterRng};
use crate::tstat::two_sample_t;
use crate::ustat::{mann_whitney_fast, mw_parts_sorted, mw_sigma2, TwoSampleData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Normal,
    Bootstrap,
    RegBootstrap,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Normal => "normal",
            Method::Bootstrap => "bootstrap",
            Method::RegBootstrap => "reg_bootstrap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sided {
    TwoSided,
    OneSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestStatistic {
    T,
    MannWhitney,
}

/// What the pooled bootstrap null stores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolKind {
    /// |T†| values.
    Absolute,
    /// Signed replicates.
    Signed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PValueSet {
    pub values: Vec<f64>,
    pub method: Method,
    pub sided: Sided,
    /// B, or 0 for normal calibration.
    pub bootstrap_reps: usize,
    pub pool_size: usize,
    pub discarded: usize,
    /// Features that lost more than half of a group to truncation.
    pub over_truncated: Vec<usize>,
    pub truncation_constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapNull {
    /// Ascending.
    pub pool: Vec<f64>,
    pub kind: PoolKind,
    pub m: usize,
    pub b: usize,
    pub discarded: usize,
}

/// Observed per-feature statistics: the Welch t or the Studentized Mann-Whitney.
pub fn observed_statistic(data: &TwoSampleData, test: TestStatistic) -> Result<f64> {
    match test {
        TestStatistic::T => two_sample_t(&data.x, &data.y),
        TestStatistic::MannWhitney => mann_whitney_fast(data).map(|r| r.statistic),
    }
}

fn check_finite(stats: &[f64]) -> Result<()> {
    match stats.iter().position(|s| !s.is_finite()) {
        Some(k) => Err(Error::invalid(format!("statistic of feature {k} is not finite"))),
        None => Ok(()),
    }
}

/// p = 2{1 − Φ(|T|)} (two-sided) or 1 − Φ(U) (one-sided).
pub fn normal_pvalues(stats: &[f64], sided: Sided) -> Result<PValueSet> {
    check_finite(stats)?;
    let values = stats
        .iter()
        .map(|&s| match sided {
            Sided::TwoSided => (2.0 * normal::upper_tail(s.abs())).min(1.0),
            Sided::OneSided => normal::upper_tail(s),
        })
        .collect();
    Ok(PValueSet {
        values,
        method: Method::Normal,
        sided,
        bootstrap_reps: 0,
        pool_size: 0,
        discarded: 0,
        over_truncated: Vec::new(),
        truncation_constant: None,
    })
}

fn check_bootstrap_input(data: &[TwoSampleData], b: usize) -> Result<()> {
    if b == 0 {
        return Err(Error::invalid("B must be at least 1"));
    }
    if data.is_empty() {
        return Err(Error::invalid("no features"));
    }
    if let Some(k) = data.iter().position(|d| d.n1() < 2 || d.n2() < 2) {
        return Err(Error::invalid(format!(
            "feature {k} needs at least two observations per group"
        )));
    }
    Ok(())
}

fn centred(x: &[f64]) -> Vec<f64> {
    let m = numeric::mean(x).value();
    x.iter().map(|v| v - m).collect()
}

#[inline]
fn resample_into(rng: &mut CounterRng, src: &[f64], dst: &mut [f64]) {
    for slot in dst.iter_mut() {
        *slot = src[rng.index(src.len())];
    }
}

#[inline]
fn pool_value(kind: PoolKind, t: f64) -> f64 {
    match kind {
        PoolKind::Absolute => t.abs(),
        PoolKind::Signed => t,
    }
}

/// t-statistics of B resamples of already centred groups.
fn t_replicates(x: &[f64], y: &[f64], b: usize, feature_key: u64, kind: PoolKind) -> (Vec<f64>, usize) {
    let mut xb = vec![0.0; x.len()];
    let mut yb = vec![0.0; y.len()];
    let mut out = Vec::with_capacity(b);
    let mut discarded = 0;
    for bi in 0..b {
        let mut rng = CounterRng::from_key(child_key(feature_key, bi as u64));
        resample_into(&mut rng, x, &mut xb);
        resample_into(&mut rng, y, &mut yb);
        match two_sample_t(&xb, &yb) {
            Ok(t) => out.push(pool_value(kind, t)),
            Err(_) => discarded += 1,
        }
    }
    (out, discarded)
}

fn assemble_pool(parts: Vec<(Vec<f64>, usize)>, kind: PoolKind, m: usize, b: usize) -> Result<BootstrapNull> {
    let discarded: usize = parts.iter().map(|p| p.1).sum();
    let total = m * b;
    if discarded * 100 > total {
        return Err(Error::ExcessiveDegeneracy { discarded, total });
    }
    let mut pool: Vec<f64> = Vec::with_capacity(total - discarded);
    for (vals, _) in parts {
        pool.extend(vals);
    }
    pool.sort_unstable_by(f64::total_cmp);
    Ok(BootstrapNull {
        pool,
        kind,
        m,
        b,
        discarded,
    })
}

/// Pooled null of t-statistics from resamples centred at the observed group means.
pub fn bootstrap_null_t(data: &[TwoSampleData], b: usize, seed: u64, kind: PoolKind) -> Result<BootstrapNull> {
    check_bootstrap_input(data, b)?;
    let parts = data
        .par_iter()
        .enumerate()
        .map(|(k, d)| {
            let x = centred(&d.x);
            let y = centred(&d.y);
            t_replicates(&x, &y, b, derive_key(seed, &[k as u64]), kind)
        })
        .collect();
    assemble_pool(parts, kind, data.len(), b)
}

/// Pooled null of Û† = (U† − U)/σ̂† for the Studentized Mann-Whitney statistic.
pub fn bootstrap_null_mw(data: &[TwoSampleData], b: usize, seed: u64, kind: PoolKind) -> Result<BootstrapNull> {
    check_bootstrap_input(data, b)?;
    let parts = data
        .par_iter()
        .enumerate()
        .map(|(k, d)| {
            let (n1, n2) = (d.n1(), d.n2());
            let nn = (n1 * n2) as f64;
            let mut xs = d.x.clone();
            let mut ys = d.y.clone();
            xs.sort_unstable_by(f64::total_cmp);
            ys.sort_unstable_by(f64::total_cmp);
            let c_obs = mw_parts_sorted(&xs, &ys).c as i128;
            let key = derive_key(seed, &[k as u64]);
            let mut xb = vec![0.0; n1];
            let mut yb = vec![0.0; n2];
            let mut out = Vec::with_capacity(b);
            let mut discarded = 0;
            for bi in 0..b {
                let mut rng = CounterRng::from_key(child_key(key, bi as u64));
                resample_into(&mut rng, &d.x, &mut xb);
                resample_into(&mut rng, &d.y, &mut yb);
                xb.sort_unstable_by(f64::total_cmp);
                yb.sort_unstable_by(f64::total_cmp);
                let parts = mw_parts_sorted(&xb, &yb);
                let s2 = mw_sigma2(&parts, n1, n2);
                if s2 > 0.0 {
                    let centred = (parts.c as i128 - c_obs) as f64 / nn;
                    out.push(pool_value(kind, centred / s2.sqrt()));
                } else {
                    discarded += 1;
                }
            }
            (out, discarded)
        })
        .collect();
    assemble_pool(parts, kind, data.len(), b)
}

/// Empirical tail of a pooled null, by binary search.
///
/// Absolute pools give #{|T†| ≥ |T|}/N (two-sided) or 1 − #{|T†| ≤ T}/N
/// (one-sided); signed pools give #{T† ≥ T}/N (one-sided) or #{|T†| ≥ |T|}/N.
pub fn bootstrap_pvalues(null: &BootstrapNull, stats: &[f64], sided: Sided) -> Result<PValueSet> {
    if null.pool.is_empty() {
        return Err(Error::invalid("bootstrap null is empty"));
    }
    check_finite(stats)?;
    let pool = &null.pool;
    let n = pool.len();
    let at_least = |t: f64| n - pool.partition_point(|&v| v < t);
    let values = stats
        .iter()
        .map(|&s| {
            let count = match (null.kind, sided) {
                (PoolKind::Absolute, Sided::TwoSided) => at_least(s.abs()),
                (PoolKind::Absolute, Sided::OneSided) => n - pool.partition_point(|&v| v <= s),
                (PoolKind::Signed, Sided::OneSided) => at_least(s),
                (PoolKind::Signed, Sided::TwoSided) => {
                    let a = s.abs();
                    if a == 0.0 {
                        n
                    } else {
                        let inside = pool.partition_point(|&v| v < a) - pool.partition_point(|&v| v <= -a);
                        n - inside
                    }
                }
            };
            count as f64 / n as f64
        })
        .collect();
    Ok(PValueSet {
        values,
        method: Method::Bootstrap,
        sided,
        bootstrap_reps: null.b,
        pool_size: n,
        discarded: null.discarded,
        over_truncated: Vec::new(),
        truncation_constant: None,
    })
}

/// (n / log m)^{1/6}.
pub fn truncation_rate(n: usize, log_m: f64) -> f64 {
    (n as f64 / log_m).powf(1.0 / 6.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationPlan {
    pub constant: f64,
    pub log_m: f64,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    /// Per-feature sample standard deviations.
    pub scale1: Vec<f64>,
    pub scale2: Vec<f64>,
}

fn sample_sd(x: &[f64]) -> f64 {
    numeric::sum_sq_dev(x)
        .div_f64((x.len() - 1) as f64)
        .value()
        .sqrt()
}

fn level(constant: f64, scale: f64, rate: f64) -> f64 {
    if constant.is_infinite() {
        f64::INFINITY
    } else {
        constant * scale * rate
    }
}

/// λ_ℓk = constant · σ̂_ℓk · (n_ℓ / log m)^{1/6}.
pub fn make_truncation_plan(data: &[TwoSampleData], m: usize, constant: f64) -> Result<TruncationPlan> {
    if m < 2 {
        return Err(Error::invalid("truncation needs m ≥ 2"));
    }
    if !(constant > 0.0) {
        return Err(Error::invalid("truncation constant must be positive"));
    }
    if let Some(k) = data.iter().position(|d| d.n1() < 2 || d.n2() < 2) {
        return Err(Error::invalid(format!(
            "feature {k} needs at least two observations per group"
        )));
    }
    let log_m = (m as f64).ln();
    let scale1: Vec<f64> = data.iter().map(|d| sample_sd(&d.x)).collect();
    let scale2: Vec<f64> = data.iter().map(|d| sample_sd(&d.y)).collect();
    let lambda1 = data
        .iter()
        .zip(&scale1)
        .map(|(d, &s)| level(constant, s, truncation_rate(d.n1(), log_m)))
        .collect();
    let lambda2 = data
        .iter()
        .zip(&scale2)
        .map(|(d, &s)| level(constant, s, truncation_rate(d.n2(), log_m)))
        .collect();
    Ok(TruncationPlan {
        constant,
        log_m,
        lambda1,
        lambda2,
        scale1,
        scale2,
    })
}

/// x·I{|x| ≤ λ}, with the number of zeroed entries.
fn truncate(x: &[f64], lambda: f64) -> (Vec<f64>, usize) {
    let mut cut = 0;
    let out = x
        .iter()
        .map(|&v| {
            if v.abs() <= lambda {
                v
            } else {
                cut += 1;
                0.0
            }
        })
        .collect();
    (out, cut)
}

/// Pooled null of t-statistics from truncated samples centred at their truncated
/// means, together with the indices of over-truncated features.
pub fn regularized_bootstrap_null_t(
    data: &[TwoSampleData],
    plan: &TruncationPlan,
    b: usize,
    seed: u64,
    kind: PoolKind,
) -> Result<(BootstrapNull, Vec<usize>)> {
    check_bootstrap_input(data, b)?;
    if plan.lambda1.len() != data.len() || plan.lambda2.len() != data.len() {
        return Err(Error::invalid("truncation plan does not match the data"));
    }
    let results: Vec<((Vec<f64>, usize), bool)> = data
        .par_iter()
        .enumerate()
        .map(|(k, d)| {
            let (xt, cut1) = truncate(&d.x, plan.lambda1[k]);
            let (yt, cut2) = truncate(&d.y, plan.lambda2[k]);
            let over = 2 * cut1 > d.n1() || 2 * cut2 > d.n2();
            let x = centred(&xt);
            let y = centred(&yt);
            (t_replicates(&x, &y, b, derive_key(seed, &[k as u64]), kind), over)
        })
        .collect();
    let over_truncated = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.1)
        .map(|(k, _)| k)
        .collect();
    let parts = results.into_iter().map(|r| r.0).collect();
    Ok((assemble_pool(parts, kind, data.len(), b)?, over_truncated))
}

/// Regularized-bootstrap p-values of the untruncated observed t-statistics.
pub fn regularized_bootstrap_pvalues(
    data: &[TwoSampleData],
    plan: &TruncationPlan,
    b: usize,
    seed: u64,
    sided: Sided,
) -> Result<PValueSet> {
    let stats = data
        .iter()
        .map(|d| two_sample_t(&d.x, &d.y))
        .collect::<Result<Vec<f64>>>()?;
    let kind = match sided {
        Sided::TwoSided => PoolKind::Absolute,
        Sided::OneSided => PoolKind::Signed,
    };
    let (null, over) = regularized_bootstrap_null_t(data, plan, b, seed, kind)?;
    let mut set = bootstrap_pvalues(&null, &stats, sided)?;
    set.method = Method::RegBootstrap;
    set.over_truncated = over;
    set.truncation_constant = Some(plan.constant);
    Ok(set)
}

/// Kolmogorov-Smirnov distance between the empirical law of `values` and U(0, 1).
pub fn ks_uniform(values: &[f64]) -> f64 {
    ks_distance(values, |v| v.clamp(0.0, 1.0))
}

/// Kolmogorov-Smirnov distance to a continuous CDF.
pub fn ks_distance(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = values.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (((i + 1) as f64 / n) - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

pub const DEFAULT_CANDIDATES: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];
pub const DEFAULT_CV_REPS: usize = 20;

const CV_SPLIT: u64 = 0x5EED_0001;
const CV_HELD_OUT: u64 = 0x5EED_0002;
const CV_TRAIN: u64 = 0x5EED_0003;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateScore {
    pub constant: f64,
    /// None when the candidate's null was degenerate.
    pub ks: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationChoice {
    pub constant: f64,
    pub scores: Vec<CandidateScore>,
}

/// Cross-validated truncation constant.
///
/// Features are split at random into halves. The held-out half supplies
/// null-enforced statistics: t-statistics of bootstrap resamples of its
/// group-mean-centred, untruncated data. For every candidate, a regularized
/// null is built from the other half and the KS distance of the held-out
/// p-values to U(0, 1) is recorded. The minimizer wins, ties going to the
/// smaller constant.
pub fn choose_truncation_constant(
    data: &[TwoSampleData],
    candidates: &[f64],
    b_cv: usize,
    seed: u64,
) -> Result<TruncationChoice> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidate truncation constants"));
    }
    if candidates.iter().any(|c| !(*c > 0.0)) {
        return Err(Error::invalid("truncation constants must be positive"));
    }
    let mut cands = candidates.to_vec();
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    if cands.len() == 1 {
        return Ok(TruncationChoice {
            constant: cands[0],
            scores: vec![CandidateScore {
                constant: cands[0],
                ks: None,
            }],
        });
    }
    let m = data.len();
    if m < 4 {
        return Err(Error::invalid("cross-validation needs at least four features"));
    }
    check_bootstrap_input(data, b_cv)?;

    let mut perm: Vec<usize> = (0..m).collect();
    CounterRng::new(seed, &[CV_SPLIT]).shuffle(&mut perm);
    let (train_idx, test_idx) = perm.split_at(m / 2);
    let train: Vec<TwoSampleData> = train_idx.iter().map(|&k| data[k].clone()).collect();

    let held_seed = derive_key(seed, &[CV_HELD_OUT]);
    let held: Vec<f64> = test_idx
        .par_iter()
        .enumerate()
        .map(|(j, &k)| {
            let x = centred(&data[k].x);
            let y = centred(&data[k].y);
            t_replicates(&x, &y, b_cv, derive_key(held_seed, &[j as u64]), PoolKind::Absolute).0
        })
        .collect::<Vec<_>>()
        .concat();
    if held.is_empty() {
        return Err(Error::NoValidConstant);
    }

    let train_seed = derive_key(seed, &[CV_TRAIN]);
    let mut scores = Vec::with_capacity(cands.len());
    for &c in &cands {
        let plan = make_truncation_plan(&train, m, c)?;
        let ks = match regularized_bootstrap_null_t(&train, &plan, b_cv, train_seed, PoolKind::Absolute) {
            Ok((null, _)) => Some(ks_uniform(&bootstrap_pvalues(&null, &held, Sided::TwoSided)?.values)),
            Err(e) if e.is_degeneracy() => None,
            Err(e) => return Err(e),
        };
        scores.push(CandidateScore { constant: c, ks });
    }
    let best = scores
        .iter()
        .filter_map(|s| s.ks.map(|ks| (s.constant, ks)))
        .fold(None, |best: Option<(f64, f64)>, (c, ks)| match best {
            Some((_, bk)) if bk <= ks => best,
            _ => Some((c, ks)),
        })
        .ok_or(Error::NoValidConstant)?;
    Ok(TruncationChoice {
        constant: best.0,
        scores,
    })
}
