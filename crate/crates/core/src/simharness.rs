//! Monte Carlo designs for FDR experiments and tail-ratio experiments.
//!
//! Observation i of group g in feature k of replicate r is drawn from its own
//! counter stream keyed by (master seed, r, attempt, k, g, i); `attempt` only
//! moves when a degenerate replicate has to be redrawn.

use rand_distr::{ChiSquared, Distribution as _, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{
    bootstrap_null_mw, bootstrap_null_t, bootstrap_pvalues, choose_truncation_constant,
    make_truncation_plan, normal_pvalues, observed_statistic, regularized_bootstrap_null_t,
    Method, PValueSet, PoolKind, Sided, TestStatistic, DEFAULT_CANDIDATES, DEFAULT_CV_REPS,
};
use crate::error::{Error, Result};
use crate::multiple_testing::{bh_procedure, fdr_accounting};
use crate::normal;
use crate::rng::{child_key, derive_key, CounterRng};
use crate::tstat::{corrected_tail, MomentSummary};
use crate::ustat::TwoSampleData;

/// Redraws allowed per replicate index after the first attempt.
pub const MAX_REDRAWS: usize = 10;

const BOOT_TAG: u64 = 0xB007;
const CV_TAG: u64 = 0xC0C0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ErrorLaw {
    /// Density λ⁻¹ e^{−x/λ}.
    Exponential { scale: f64 },
    StudentT { df: f64 },
    Normal { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
    Beta { a: f64, b: f64 },
}

impl ErrorLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ErrorLaw::Exponential { scale } => scale > 0.0 && scale.is_finite(),
            ErrorLaw::StudentT { df } => {
                if !(df > 2.0) {
                    return Err(Error::invalid(format!(
                        "t({df}) has infinite variance; need more than 2 degrees of freedom"
                    )));
                }
                df.is_finite()
            }
            ErrorLaw::Normal { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            ErrorLaw::Uniform { low, high } => low.is_finite() && high.is_finite() && low < high,
            ErrorLaw::Beta { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid distribution parameters {self:?}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ErrorLaw::Exponential { scale } => scale,
            ErrorLaw::StudentT { .. } => 0.0,
            ErrorLaw::Normal { mean, .. } => mean,
            ErrorLaw::Uniform { low, high } => 0.5 * (low + high),
            ErrorLaw::Beta { a, b } => a / (a + b),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            ErrorLaw::Exponential { scale } => scale * scale,
            ErrorLaw::StudentT { df } => df / (df - 2.0),
            ErrorLaw::Normal { sd, .. } => sd * sd,
            ErrorLaw::Uniform { low, high } => (high - low).powi(2) / 12.0,
            ErrorLaw::Beta { a, b } => a * b / ((a + b).powi(2) * (a + b + 1.0)),
        }
    }

    /// Third central moment; 0 for the symmetric families.
    pub fn third_central_moment(&self) -> f64 {
        match *self {
            ErrorLaw::Exponential { scale } => 2.0 * scale.powi(3),
            ErrorLaw::StudentT { .. } | ErrorLaw::Normal { .. } | ErrorLaw::Uniform { .. } => 0.0,
            ErrorLaw::Beta { a, b } => {
                let skew = 2.0 * (b - a) * (a + b + 1.0).sqrt() / ((a + b + 2.0) * (a * b).sqrt());
                skew * self.variance().powf(1.5)
            }
        }
    }

    pub fn sample(&self, rng: &mut CounterRng) -> f64 {
        match *self {
            ErrorLaw::Exponential { scale } => -scale * (1.0 - rng.uniform()).ln(),
            ErrorLaw::StudentT { df } => {
                let z = rng.standard_normal();
                let chi = ChiSquared::new(df).expect("validated").sample(rng);
                z / (chi / df).sqrt()
            }
            ErrorLaw::Normal { mean, sd } => mean + sd * rng.standard_normal(),
            ErrorLaw::Uniform { low, high } => low + (high - low) * rng.uniform(),
            ErrorLaw::Beta { a, b } => {
                let ga = Gamma::new(a, 1.0).expect("validated").sample(rng);
                let gb = Gamma::new(b, 1.0).expect("validated").sample(rng);
                ga / (ga + gb)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    Sim1Exp,
    Sim1T,
    Sim2Case1,
    Sim2Case2,
}

impl Design {
    pub fn is_sim1(self) -> bool {
        matches!(self, Design::Sim1Exp | Design::Sim1T)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Design::Sim1Exp => "sim1_exp",
            Design::Sim1T => "sim1_t",
            Design::Sim2Case1 => "sim2_case1",
            Design::Sim2Case2 => "sim2_case2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Homogeneous,
    Heteroscedastic,
    Identical,
    NonIdentical,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Homogeneous => "homogeneous",
            Variant::Heteroscedastic => "heteroscedastic",
            Variant::Identical => "identical",
            Variant::NonIdentical => "non_identical",
        }
    }
}

fn default_n1() -> usize {
    50
}
fn default_n2() -> usize {
    30
}
fn default_m() -> usize {
    500
}
fn default_alphas() -> Vec<f64> {
    vec![0.05, 0.1, 0.2, 0.3]
}
fn default_b() -> usize {
    200
}
fn default_reps() -> usize {
    50
}
fn default_candidates() -> Vec<f64> {
    DEFAULT_CANDIDATES.to_vec()
}
fn default_cv_reps() -> usize {
    DEFAULT_CV_REPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub design: Design,
    pub variant: Variant,
    #[serde(default = "default_n1")]
    pub n1: usize,
    #[serde(default = "default_n2")]
    pub n2: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    pub c: f64,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_b")]
    pub bootstrap_reps: usize,
    #[serde(default = "default_reps")]
    pub n_reps: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Defaults to every method applicable to the design.
    #[serde(default)]
    pub methods: Vec<Method>,
    #[serde(default = "default_candidates")]
    pub truncation_candidates: Vec<f64>,
    #[serde(default = "default_cv_reps")]
    pub cv_bootstrap_reps: usize,
    /// Overrides for the error laws of the design table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error1: Option<ErrorLaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error2: Option<ErrorLaw>,
}

impl ExperimentConfig {
    /// Desk-scale settings: (n1, n2) = (50, 30), m = 500, 50 replicates, B = 200.
    pub fn desk(design: Design, variant: Variant, c: f64) -> Self {
        ExperimentConfig {
            design,
            variant,
            n1: default_n1(),
            n2: default_n2(),
            m: default_m(),
            c,
            alphas: default_alphas(),
            bootstrap_reps: default_b(),
            n_reps: default_reps(),
            master_seed: 0,
            methods: Vec::new(),
            truncation_candidates: default_candidates(),
            cv_bootstrap_reps: default_cv_reps(),
            error1: None,
            error2: None,
        }
    }

    pub fn methods(&self) -> Vec<Method> {
        if !self.methods.is_empty() {
            return self.methods.clone();
        }
        if self.design.is_sim1() {
            vec![Method::Normal, Method::Bootstrap, Method::RegBootstrap]
        } else {
            vec![Method::Normal, Method::Bootstrap]
        }
    }

    pub fn statistic(&self) -> TestStatistic {
        if self.design.is_sim1() {
            TestStatistic::T
        } else {
            TestStatistic::MannWhitney
        }
    }

    pub fn sided(&self) -> Sided {
        if self.design.is_sim1() {
            Sided::TwoSided
        } else {
            Sided::OneSided
        }
    }

    pub fn error_laws(&self) -> Result<(ErrorLaw, ErrorLaw)> {
        use ErrorLaw::*;
        let table = match (self.design, self.variant) {
            (Design::Sim1Exp, Variant::Homogeneous) => (Exponential { scale: 2.0 }, Exponential { scale: 2.0 }),
            (Design::Sim1Exp, Variant::Heteroscedastic) => (Exponential { scale: 2.0 }, Exponential { scale: 1.0 }),
            (Design::Sim1T, Variant::Homogeneous) => (StudentT { df: 4.0 }, StudentT { df: 4.0 }),
            (Design::Sim1T, Variant::Heteroscedastic) => (StudentT { df: 4.0 }, StudentT { df: 3.0 }),
            (Design::Sim2Case1, Variant::Identical) => {
                (Normal { mean: 0.0, sd: 1.0 }, Normal { mean: 0.0, sd: 1.0 })
            }
            (Design::Sim2Case1, Variant::NonIdentical) => (Normal { mean: 0.0, sd: 1.0 }, StudentT { df: 3.0 }),
            (Design::Sim2Case2, Variant::Identical) => {
                (Uniform { low: 0.0, high: 1.0 }, Uniform { low: 0.0, high: 1.0 })
            }
            (Design::Sim2Case2, Variant::NonIdentical) => (Uniform { low: 0.0, high: 1.0 }, Beta { a: 10.0, b: 10.0 }),
            (d, v) => {
                return Err(Error::invalid(format!(
                    "variant `{}` does not apply to design `{}`",
                    v.as_str(),
                    d.as_str()
                )))
            }
        };
        let laws = (self.error1.unwrap_or(table.0), self.error2.unwrap_or(table.1));
        laws.0.validate()?;
        laws.1.validate()?;
        Ok(laws)
    }

    pub fn validate(&self) -> Result<()> {
        self.error_laws()?;
        if self.n1 < 4 || self.n2 < 4 {
            return Err(Error::invalid("n1 and n2 must be at least 4"));
        }
        if self.m < 4 {
            return Err(Error::invalid("m must be at least 4"));
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(Error::invalid("c must be a finite non-negative number"));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(Error::invalid("alphas must be a nonempty list inside (0, 1)"));
        }
        if self.n_reps == 0 {
            return Err(Error::invalid("n_reps must be at least 1"));
        }
        let methods = self.methods();
        if methods.iter().any(|m| *m != Method::Normal) && self.bootstrap_reps == 0 {
            return Err(Error::invalid("bootstrap methods need bootstrap_reps ≥ 1"));
        }
        if methods.contains(&Method::RegBootstrap) {
            if !self.design.is_sim1() {
                return Err(Error::invalid(
                    "regularized bootstrap applies to the t-statistic designs only",
                ));
            }
            if self.truncation_candidates.is_empty()
                || self.truncation_candidates.iter().any(|c| !(*c > 0.0))
            {
                return Err(Error::invalid("truncation candidates must be positive"));
            }
            if self.cv_bootstrap_reps == 0 {
                return Err(Error::invalid("cv_bootstrap_reps must be at least 1"));
            }
        }
        Ok(())
    }

    /// (σ1², σ2²) of the error laws.
    pub fn error_variances(&self) -> Result<(f64, f64)> {
        let (a, b) = self.error_laws()?;
        Ok((a.variance(), b.variance()))
    }
}

/// m1 = ⌊1.6 m^{1/2}⌋.
pub fn signal_count(m: usize) -> usize {
    (1.6 * (m as f64).sqrt()).floor() as usize
}

/// c{(σ1²/n1 + σ2²/n2) log m}^{1/2}.
pub fn signal_size(config: &ExperimentConfig) -> Result<f64> {
    let (v1, v2) = config.error_variances()?;
    let s = v1 / config.n1 as f64 + v2 / config.n2 as f64;
    Ok(config.c * (s * (config.m as f64).ln()).sqrt())
}

/// Null indicator per feature: the first m1 features carry signal when c > 0.
pub fn null_mask(config: &ExperimentConfig) -> Vec<bool> {
    let m1 = if config.c > 0.0 { signal_count(config.m) } else { 0 };
    (0..config.m).map(|k| k >= m1).collect()
}

fn generate(config: &ExperimentConfig, rep: usize, attempt: usize) -> Result<Vec<TwoSampleData>> {
    config.validate()?;
    let (e1, e2) = config.error_laws()?;
    let (shift1, shift2) = if config.design.is_sim1() {
        (e1.mean(), e2.mean())
    } else {
        (0.0, 0.0)
    };
    let mu2 = signal_size(config)?;
    let nulls = null_mask(config);
    let rep_key = derive_key(config.master_seed, &[rep as u64, attempt as u64]);
    (0..config.m)
        .into_par_iter()
        .map(|k| {
            let key = child_key(rep_key, k as u64);
            let draw = |group: u64, i: usize, law: &ErrorLaw| {
                let mut rng = CounterRng::from_key(child_key(child_key(key, group), i as u64));
                law.sample(&mut rng)
            };
            let x = (0..config.n1).map(|i| draw(0, i, &e1) - shift1).collect();
            let mu = if nulls[k] { 0.0 } else { mu2 };
            let y = (0..config.n2).map(|i| mu + draw(1, i, &e2) - shift2).collect();
            TwoSampleData::new(x, y)
        })
        .collect()
}

/// Sim₁ data for replicate `rep`: centred errors, signal in the first m1 features of Y.
pub fn generate_sim1(config: &ExperimentConfig, rep: usize) -> Result<Vec<TwoSampleData>> {
    if !config.design.is_sim1() {
        return Err(Error::invalid("not a Sim1 design"));
    }
    generate(config, rep, 0)
}

/// Sim₂ data for replicate `rep`: uncentred errors.
pub fn generate_sim2(config: &ExperimentConfig, rep: usize) -> Result<Vec<TwoSampleData>> {
    if config.design.is_sim1() {
        return Err(Error::invalid("not a Sim2 design"));
    }
    generate(config, rep, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodOutcome {
    pub method: Method,
    /// One entry per α.
    pub fdp: Vec<f64>,
    pub correct_rejection_proportion: Vec<f64>,
    pub rejections: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub rep: usize,
    pub redraws: usize,
    pub discarded_bootstrap: usize,
    pub truncation_constant: Option<f64>,
    pub outcomes: Vec<MethodOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub method: Method,
    pub alpha: f64,
    pub empirical_fdr: f64,
    pub fdr_se: f64,
    pub correct_rejection_proportion: f64,
    pub crp_se: f64,
    /// False when there are no true alternatives (c = 0).
    pub power_defined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdrExperiment {
    pub curves: Vec<CurvePoint>,
    pub replicates: Vec<ReplicateRecord>,
    pub total_redraws: usize,
    pub total_discarded_bootstrap: usize,
}

/// p-values of every configured method for one dataset.
pub fn replicate_pvalues(
    config: &ExperimentConfig,
    data: &[TwoSampleData],
    rep: usize,
    attempt: usize,
) -> Result<Vec<PValueSet>> {
    let stats = data
        .iter()
        .map(|d| observed_statistic(d, config.statistic()))
        .collect::<Result<Vec<f64>>>()?;
    let sided = config.sided();
    let boot_seed = derive_key(config.master_seed, &[BOOT_TAG, rep as u64, attempt as u64]);
    let mut out = Vec::new();
    for method in config.methods() {
        let set = match method {
            Method::Normal => normal_pvalues(&stats, sided)?,
            Method::Bootstrap => {
                let null = match config.statistic() {
                    TestStatistic::T => bootstrap_null_t(data, config.bootstrap_reps, boot_seed, PoolKind::Absolute)?,
                    TestStatistic::MannWhitney => {
                        bootstrap_null_mw(data, config.bootstrap_reps, boot_seed, PoolKind::Signed)?
                    }
                };
                bootstrap_pvalues(&null, &stats, sided)?
            }
            Method::RegBootstrap => {
                let cv_seed = derive_key(config.master_seed, &[CV_TAG, rep as u64, attempt as u64]);
                let choice = choose_truncation_constant(
                    data,
                    &config.truncation_candidates,
                    config.cv_bootstrap_reps,
                    cv_seed,
                )?;
                let plan = make_truncation_plan(data, config.m, choice.constant)?;
                let (null, over) =
                    regularized_bootstrap_null_t(data, &plan, config.bootstrap_reps, boot_seed, PoolKind::Absolute)?;
                let mut set = bootstrap_pvalues(&null, &stats, sided)?;
                set.method = Method::RegBootstrap;
                set.over_truncated = over;
                set.truncation_constant = Some(choice.constant);
                set
            }
        };
        out.push(set);
    }
    Ok(out)
}

fn run_replicate(config: &ExperimentConfig, rep: usize, nulls: &[bool]) -> Result<ReplicateRecord> {
    for attempt in 0..=MAX_REDRAWS {
        let data = generate(config, rep, attempt)?;
        let sets = match replicate_pvalues(config, &data, rep, attempt) {
            Ok(s) => s,
            Err(e) if e.is_degeneracy() => continue,
            Err(e) => return Err(e),
        };
        let mut outcomes = Vec::with_capacity(sets.len());
        for set in &sets {
            let mut o = MethodOutcome {
                method: set.method,
                fdp: Vec::new(),
                correct_rejection_proportion: Vec::new(),
                rejections: Vec::new(),
            };
            for &alpha in &config.alphas {
                let bh = bh_procedure(&set.values, alpha)?;
                let rep = fdr_accounting(&bh, nulls)?;
                o.fdp.push(rep.fdp);
                o.correct_rejection_proportion.push(rep.correct_rejection_proportion);
                o.rejections.push(rep.r);
            }
            outcomes.push(o);
        }
        return Ok(ReplicateRecord {
            rep,
            redraws: attempt,
            discarded_bootstrap: sets.iter().map(|s| s.discarded).sum(),
            truncation_constant: sets.iter().find_map(|s| s.truncation_constant),
            outcomes,
        });
    }
    Err(Error::RedrawCapExceeded {
        rep,
        redraws: MAX_REDRAWS,
    })
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs every replicate and aggregates mean FDP (empirical FDR) and mean
/// correct-rejection proportion with their Monte Carlo standard errors.
pub fn run_fdr_experiment(config: &ExperimentConfig) -> Result<FdrExperiment> {
    config.validate()?;
    let nulls = null_mask(config);
    let replicates = (0..config.n_reps)
        .into_par_iter()
        .map(|rep| run_replicate(config, rep, &nulls))
        .collect::<Result<Vec<_>>>()?;
    let power_defined = nulls.iter().any(|&n| !n);
    let mut curves = Vec::new();
    for (mi, method) in config.methods().into_iter().enumerate() {
        for (ai, &alpha) in config.alphas.iter().enumerate() {
            let fdp: Vec<f64> = replicates.iter().map(|r| r.outcomes[mi].fdp[ai]).collect();
            let crp: Vec<f64> = replicates
                .iter()
                .map(|r| r.outcomes[mi].correct_rejection_proportion[ai])
                .collect();
            let (empirical_fdr, fdr_se) = mean_se(&fdp);
            let (c, crp_se) = mean_se(&crp);
            curves.push(CurvePoint {
                method,
                alpha,
                empirical_fdr,
                fdr_se,
                correct_rejection_proportion: c,
                crp_se,
                power_defined,
            });
        }
    }
    Ok(FdrExperiment {
        total_redraws: replicates.iter().map(|r| r.redraws).sum(),
        total_discarded_bootstrap: replicates.iter().map(|r| r.discarded_bootstrap).sum(),
        curves,
        replicates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRatioConfig {
    pub statistic: TestStatistic,
    pub error1: ErrorLaw,
    pub error2: ErrorLaw,
    pub n1: usize,
    pub n2: usize,
    pub n_reps: usize,
    pub xs: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRatioPoint {
    pub x: f64,
    /// P̂(Û ≥ x) / (1 − Φ(x)).
    pub ratio: f64,
    /// Ratio divided by the skewness correction factor (t-statistic only).
    pub corrected_ratio: Option<f64>,
    /// Binomial standard error of the ratio.
    pub ratio_se: f64,
    /// 95% Wilson half-width, on the ratio scale.
    pub ci_halfwidth: f64,
    pub n_exceed: u64,
    /// Fewer than 20 exceedances.
    pub unreliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRatioCurve {
    pub statistic: TestStatistic,
    pub n_valid: usize,
    pub discarded: usize,
    pub points: Vec<TailRatioPoint>,
}

/// Monte Carlo tail ratios of a null Studentized statistic.
///
/// For the t-statistic both groups are centred at their population means; the
/// Mann-Whitney statistic uses the raw draws, so the caller must supply laws
/// with P(X ≤ Y) = 1/2.
pub fn run_tail_ratio_experiment(config: &TailRatioConfig) -> Result<TailRatioCurve> {
    if config.n_reps < 1000 {
        return Err(Error::invalid("tail-ratio experiments need at least 1000 replicates"));
    }
    if config.xs.is_empty() || config.xs.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
        return Err(Error::invalid("tail points must be finite and non-negative"));
    }
    if config.n1 < 2 || config.n2 < 2 {
        return Err(Error::invalid("n1 and n2 must be at least 2"));
    }
    config.error1.validate()?;
    config.error2.validate()?;
    let (e1, e2) = (config.error1, config.error2);
    let (shift1, shift2) = match config.statistic {
        TestStatistic::T => (e1.mean(), e2.mean()),
        TestStatistic::MannWhitney => (0.0, 0.0),
    };
    let stats: Vec<Option<f64>> = (0..config.n_reps)
        .into_par_iter()
        .map(|r| {
            let mut rx = CounterRng::new(config.seed, &[r as u64, 0]);
            let mut ry = CounterRng::new(config.seed, &[r as u64, 1]);
            let x = (0..config.n1).map(|_| e1.sample(&mut rx) - shift1).collect();
            let y = (0..config.n2).map(|_| e2.sample(&mut ry) - shift2).collect();
            let d = TwoSampleData::new(x, y).ok()?;
            observed_statistic(&d, config.statistic).ok()
        })
        .collect();
    let valid: Vec<f64> = stats.into_iter().flatten().collect();
    let n = valid.len();
    let discarded = config.n_reps - n;
    if n == 0 {
        return Err(Error::degenerate("every replicate was degenerate"));
    }
    let correction = match config.statistic {
        TestStatistic::T => Some((
            MomentSummary::population(config.n1, 0.0, e1.variance(), e1.third_central_moment()),
            MomentSummary::population(config.n2, 0.0, e2.variance(), e2.third_central_moment()),
        )),
        TestStatistic::MannWhitney => None,
    };
    let z = 1.959_963_984_540_054;
    let nf = n as f64;
    let points = config
        .xs
        .iter()
        .map(|&x| {
            let n_exceed = valid.iter().filter(|&&s| s >= x).count() as u64;
            let p = n_exceed as f64 / nf;
            let tail = normal::upper_tail(x);
            let wilson = z / (1.0 + z * z / nf) * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt();
            let ratio = p / tail;
            let corrected_ratio = match &correction {
                Some((m1, m2)) => Some(ratio / corrected_tail(x, m1, m2)?.correction),
                None => None,
            };
            Ok(TailRatioPoint {
                x,
                ratio,
                corrected_ratio,
                ratio_se: (p * (1.0 - p) / nf).sqrt() / tail,
                ci_halfwidth: wilson / tail,
                n_exceed,
                unreliable: n_exceed < 20,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TailRatioCurve {
        statistic: config.statistic,
        n_valid: n,
        discarded,
        points,
    })
}

/// Shortest round-trip rendering with 17 significant digits.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn curves_csv(curves: &[CurvePoint]) -> String {
    let mut s = String::from(
        "method,alpha,empirical_fdr,fdr_se,correct_rejection_proportion,crp_se,power_defined\n",
    );
    for c in curves {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.method.as_str(),
            format_number(c.alpha),
            format_number(c.empirical_fdr),
            format_number(c.fdr_se),
            format_number(c.correct_rejection_proportion),
            format_number(c.crp_se),
            c.power_defined
        ));
    }
    s
}

pub fn tail_ratio_csv(curve: &TailRatioCurve) -> String {
    let mut s = String::from("x,ratio,corrected_ratio,ci_halfwidth,n_exceed\n");
    for p in &curve.points {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            format_number(p.x),
            format_number(p.ratio),
            p.corrected_ratio.map(format_number).unwrap_or_default(),
            format_number(p.ci_halfwidth),
            p.n_exceed
        ));
    }
    s
}
