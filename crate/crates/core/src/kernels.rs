//! Kernels for one- and two-sample U-statistics.
//!
//! A two-sample kernel of order (s1, s2) takes a block of s1 observations from
//! the first sample and s2 from the second and must be symmetric within each
//! block. Built-in kernels carry their conditional projections h1/h2 under a
//! common continuous null F ≡ G, the null variances of those projections, and
//! (c0, κ) constants for the boundedness condition
//!
//! ```text
//! {h(x; y) − θ}² ≤ c0 [ κσ² + Σ_i {h1(x_i) − θ}² + Σ_j {h2(y_j) − θ}² ]
//! ```
//!
//! which [`check_kernel_condition`] verifies numerically on a grid.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::CounterRng;

pub type BlockKernel = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type PointKernel = Arc<dyn Fn(&[&[f64]]) -> f64 + Send + Sync>;
pub type Projection = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Cdf = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The κ column of the boundedness condition. Several entries are stated
/// relative to θ and σ, so they are only resolved once those are known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Kappa {
    Fixed(f64),
    /// (θ/σ)²
    ThetaOverSigmaSquared,
    /// σ⁻²
    InverseSigmaSquared,
}

impl Kappa {
    pub fn resolve(self, theta: f64, sigma2: f64) -> f64 {
        match self {
            Kappa::Fixed(k) => k,
            Kappa::ThetaOverSigmaSquared => theta * theta / sigma2,
            Kappa::InverseSigmaSquared => 1.0 / sigma2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoSampleKernel {
    MannWhitney,
    Lehmann,
    Kochar,
    MeanDiff,
}

impl TwoSampleKernel {
    pub const ALL: [TwoSampleKernel; 4] = [
        TwoSampleKernel::MannWhitney,
        TwoSampleKernel::Lehmann,
        TwoSampleKernel::Kochar,
        TwoSampleKernel::MeanDiff,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TwoSampleKernel::MannWhitney => "mann_whitney",
            TwoSampleKernel::Lehmann => "lehmann",
            TwoSampleKernel::Kochar => "kochar",
            TwoSampleKernel::MeanDiff => "mean_diff",
        }
    }
}

impl FromStr for TwoSampleKernel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TwoSampleKernel::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown two-sample kernel `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OneSampleKernel {
    TStat,
    SampleVariance,
    Gini,
    WilcoxonOne,
    KendallTau,
}

impl OneSampleKernel {
    pub const ALL: [OneSampleKernel; 5] = [
        OneSampleKernel::TStat,
        OneSampleKernel::SampleVariance,
        OneSampleKernel::Gini,
        OneSampleKernel::WilcoxonOne,
        OneSampleKernel::KendallTau,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OneSampleKernel::TStat => "t_stat",
            OneSampleKernel::SampleVariance => "sample_variance",
            OneSampleKernel::Gini => "gini",
            OneSampleKernel::WilcoxonOne => "wilcoxon_one",
            OneSampleKernel::KendallTau => "kendall_tau",
        }
    }
}

impl FromStr for OneSampleKernel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        OneSampleKernel::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown one-sample kernel `{s}`")))
    }
}

/// A common null distribution F ≡ G used to express the analytic projections.
#[derive(Clone)]
pub struct CommonNull {
    pub cdf: Cdf,
    pub mean: f64,
    pub variance: f64,
}

impl CommonNull {
    pub fn uniform() -> Self {
        CommonNull {
            cdf: Arc::new(|x: f64| x.clamp(0.0, 1.0)),
            mean: 0.5,
            variance: 1.0 / 12.0,
        }
    }
}

/// A symmetric two-sample kernel of order (s1, s2).
#[derive(Clone)]
pub struct KernelSpec {
    pub name: String,
    pub builtin: Option<TwoSampleKernel>,
    pub order: (usize, usize),
    evaluate: BlockKernel,
    /// θ under the null hypothesis.
    pub theta_null: Option<f64>,
    pub h1: Option<Projection>,
    pub h2: Option<Projection>,
    pub c0: Option<f64>,
    pub kappa: Option<Kappa>,
    /// (σ1², σ2²) under the null.
    pub null_sigma2: Option<(f64, f64)>,
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSpec")
            .field("name", &self.name)
            .field("order", &self.order)
            .field("theta_null", &self.theta_null)
            .field("has_h1", &self.h1.is_some())
            .field("has_h2", &self.h2.is_some())
            .field("c0", &self.c0)
            .field("kappa", &self.kappa)
            .field("null_sigma2", &self.null_sigma2)
            .finish()
    }
}

impl KernelSpec {
    pub fn new<F>(name: impl Into<String>, order: (usize, usize), evaluate: F) -> Result<Self>
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        if order.0 == 0 || order.1 == 0 {
            return Err(Error::invalid("kernel orders must be positive"));
        }
        Ok(KernelSpec {
            name: name.into(),
            builtin: None,
            order,
            evaluate: Arc::new(evaluate),
            theta_null: None,
            h1: None,
            h2: None,
            c0: None,
            kappa: None,
            null_sigma2: None,
        })
    }

    #[inline]
    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.order.0);
        debug_assert_eq!(y.len(), self.order.1);
        (self.evaluate)(x, y)
    }

    pub fn with_theta_null(mut self, theta: f64) -> Self {
        self.theta_null = Some(theta);
        self
    }

    pub fn with_projections(mut self, h1: Projection, h2: Projection) -> Self {
        self.h1 = Some(h1);
        self.h2 = Some(h2);
        self
    }

    pub fn with_constants(mut self, c0: f64, kappa: Kappa) -> Self {
        self.c0 = Some(c0);
        self.kappa = Some(kappa);
        self
    }
}

/// A symmetric one-sample kernel of order s on points of dimension `dim`.
#[derive(Clone)]
pub struct OneSampleKernelSpec {
    pub name: String,
    pub builtin: Option<OneSampleKernel>,
    pub order: usize,
    pub dim: usize,
    evaluate: PointKernel,
    pub theta_null: Option<f64>,
    pub h1: Option<Projection>,
    pub c0: Option<f64>,
    pub kappa: Option<Kappa>,
}

impl fmt::Debug for OneSampleKernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OneSampleKernelSpec")
            .field("name", &self.name)
            .field("order", &self.order)
            .field("dim", &self.dim)
            .field("theta_null", &self.theta_null)
            .field("c0", &self.c0)
            .field("kappa", &self.kappa)
            .finish()
    }
}

impl OneSampleKernelSpec {
    pub fn new<F>(name: impl Into<String>, order: usize, dim: usize, evaluate: F) -> Result<Self>
    where
        F: Fn(&[&[f64]]) -> f64 + Send + Sync + 'static,
    {
        if order < 2 {
            return Err(Error::invalid("one-sample kernel order must be at least 2"));
        }
        if dim == 0 {
            return Err(Error::invalid("observation dimension must be positive"));
        }
        Ok(OneSampleKernelSpec {
            name: name.into(),
            builtin: None,
            order,
            dim,
            evaluate: Arc::new(evaluate),
            theta_null: None,
            h1: None,
            c0: None,
            kappa: None,
        })
    }

    /// Evaluates on `order` points, each a slice of length `dim`.
    #[inline]
    pub fn evaluate(&self, points: &[&[f64]]) -> f64 {
        debug_assert_eq!(points.len(), self.order);
        (self.evaluate)(points)
    }

    /// Convenience for scalar observations.
    pub fn evaluate_scalars(&self, xs: &[f64]) -> f64 {
        assert_eq!(self.dim, 1, "evaluate_scalars needs a scalar kernel");
        let points: Vec<&[f64]> = xs.chunks(1).collect();
        self.evaluate(&points)
    }

    pub fn with_theta_null(mut self, theta: f64) -> Self {
        self.theta_null = Some(theta);
        self
    }
}

#[inline]
fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

#[inline]
fn min_max(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Kochar's hazard-rate kernel. Each pattern is a strict ordering of the
/// sorted blocks; ties fail every pattern.
fn kochar(x: &[f64], y: &[f64]) -> f64 {
    let (xa, xb) = min_max(x[0], x[1]);
    let (ya, yb) = min_max(y[0], y[1]);
    let yyxx = yb < xa;
    let xyyx = xa < ya && yb < xb;
    let xxyy = xb < ya;
    let yxxy = ya < xa && xb < yb;
    indicator(yyxx || xyyx) - indicator(xxyy || yxxy)
}

/// Built-in two-sample kernel with projections under F ≡ G = U(0, 1).
pub fn builtin_two_sample(kind: TwoSampleKernel) -> KernelSpec {
    builtin_two_sample_under(kind, &CommonNull::uniform())
}

/// Built-in two-sample kernel with projections under a common continuous null.
pub fn builtin_two_sample_under(kind: TwoSampleKernel, null: &CommonNull) -> KernelSpec {
    let cdf = null.cdf.clone();
    let (order, evaluate, h1, h2, sigma2, c0, kappa): (
        (usize, usize),
        BlockKernel,
        Projection,
        Projection,
        f64,
        f64,
        Kappa,
    ) = match kind {
        TwoSampleKernel::MannWhitney => {
            let (g, f) = (cdf.clone(), cdf);
            (
                (1, 1),
                Arc::new(|x: &[f64], y: &[f64]| indicator(x[0] <= y[0]) - 0.5),
                Arc::new(move |x| 0.5 - g(x)),
                Arc::new(move |y| f(y) - 0.5),
                1.0 / 12.0,
                1.0,
                Kappa::InverseSigmaSquared,
            )
        }
        TwoSampleKernel::Lehmann => {
            let (g, f) = (cdf.clone(), cdf);
            (
                (2, 2),
                Arc::new(|x: &[f64], y: &[f64]| {
                    indicator((x[0] - x[1]).abs() <= (y[0] - y[1]).abs()) - 0.5
                }),
                Arc::new(move |x| {
                    let u = g(x);
                    u * (1.0 - u) - 1.0 / 6.0
                }),
                Arc::new(move |y| {
                    let u = f(y);
                    u * (u - 1.0) + 1.0 / 6.0
                }),
                1.0 / 180.0,
                1.0,
                Kappa::InverseSigmaSquared,
            )
        }
        TwoSampleKernel::Kochar => {
            let (g, f) = (cdf.clone(), cdf);
            (
                (2, 2),
                Arc::new(kochar),
                Arc::new(move |x| {
                    let u = g(x);
                    -4.0 * u * u * u / 3.0 + 4.0 * u * u - 2.0 * u
                }),
                Arc::new(move |y| {
                    let u = f(y);
                    4.0 * u * u * u / 3.0 - 4.0 * u * u + 2.0 * u
                }),
                8.0 / 105.0,
                1.0,
                Kappa::InverseSigmaSquared,
            )
        }
        TwoSampleKernel::MeanDiff => {
            let mu = null.mean;
            (
                (1, 1),
                Arc::new(|x: &[f64], y: &[f64]| x[0] - y[0]),
                Arc::new(move |x| x - mu),
                Arc::new(move |y| mu - y),
                null.variance,
                2.0,
                Kappa::Fixed(0.0),
            )
        }
    };
    KernelSpec {
        name: kind.as_str().to_string(),
        builtin: Some(kind),
        order,
        evaluate,
        theta_null: Some(0.0),
        h1: Some(h1),
        h2: Some(h2),
        c0: Some(c0),
        kappa: Some(kappa),
        null_sigma2: Some((sigma2, sigma2)),
    }
}

/// Built-in one-sample kernel carrying the (c0, κ) constants of the condition.
pub fn builtin_one_sample(kind: OneSampleKernel) -> OneSampleKernelSpec {
    let (dim, evaluate, theta_null, h1, c0, kappa): (
        usize,
        PointKernel,
        Option<f64>,
        Option<Projection>,
        f64,
        Kappa,
    ) = match kind {
        // Mean-zero null; the projection (x + μ)/2 then needs no distributional input.
        OneSampleKernel::TStat => (
            1,
            Arc::new(|p: &[&[f64]]| 0.5 * (p[0][0] + p[1][0])),
            Some(0.0),
            Some(Arc::new(|x: f64| 0.5 * x)),
            2.0,
            Kappa::Fixed(0.0),
        ),
        OneSampleKernel::SampleVariance => (
            1,
            Arc::new(|p: &[&[f64]]| {
                let d = p[0][0] - p[1][0];
                0.5 * d * d
            }),
            None,
            None,
            10.0,
            Kappa::ThetaOverSigmaSquared,
        ),
        OneSampleKernel::Gini => (
            1,
            Arc::new(|p: &[&[f64]]| (p[0][0] - p[1][0]).abs()),
            None,
            None,
            8.0,
            Kappa::ThetaOverSigmaSquared,
        ),
        // Symmetric-about-zero null.
        OneSampleKernel::WilcoxonOne => (
            1,
            Arc::new(|p: &[&[f64]]| indicator(p[0][0] + p[1][0] <= 0.0)),
            Some(0.5),
            None,
            1.0,
            Kappa::InverseSigmaSquared,
        ),
        // Bivariate points; independence null gives θ = 1.
        OneSampleKernel::KendallTau => (
            2,
            Arc::new(|p: &[&[f64]]| {
                2.0 * indicator((p[1][1] - p[0][1]) * (p[1][0] - p[0][0]) > 0.0)
            }),
            Some(1.0),
            None,
            1.0,
            Kappa::InverseSigmaSquared,
        ),
    };
    OneSampleKernelSpec {
        name: kind.as_str().to_string(),
        builtin: Some(kind),
        order: 2,
        dim,
        evaluate,
        theta_null,
        h1,
        c0: Some(c0),
        kappa: Some(kappa),
    }
}

/// Sampler for one variate of a distribution, driven by a counter stream.
pub type Sampler<'a> = &'a dyn Fn(&mut CounterRng) -> f64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub reps: usize,
}

impl McEstimate {
    fn from_draws(draws: &[f64]) -> Self {
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = if draws.len() > 1 {
            draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        McEstimate {
            estimate: mean,
            std_error: (var / n).sqrt(),
            reps: draws.len(),
        }
    }
}

/// Monte Carlo estimate of h1(x) = E{h(x, X2..Xs1; Y1..Ys2)}.
pub fn project_h1_mc(
    spec: &KernelSpec,
    x: f64,
    sampler_f: Sampler<'_>,
    sampler_g: Sampler<'_>,
    reps: usize,
    seed: u64,
) -> Result<McEstimate> {
    project_mc(spec, x, true, sampler_f, sampler_g, reps, seed)
}

/// Monte Carlo estimate of h2(y) = E{h(X1..Xs1; y, Y2..Ys2)}.
pub fn project_h2_mc(
    spec: &KernelSpec,
    y: f64,
    sampler_f: Sampler<'_>,
    sampler_g: Sampler<'_>,
    reps: usize,
    seed: u64,
) -> Result<McEstimate> {
    project_mc(spec, y, false, sampler_f, sampler_g, reps, seed)
}

fn project_mc(
    spec: &KernelSpec,
    fixed: f64,
    fix_x: bool,
    sampler_f: Sampler<'_>,
    sampler_g: Sampler<'_>,
    reps: usize,
    seed: u64,
) -> Result<McEstimate> {
    if reps == 0 {
        return Err(Error::invalid("projection needs at least one replicate"));
    }
    let (s1, s2) = spec.order;
    let mut xb = vec![0.0; s1];
    let mut yb = vec![0.0; s2];
    let draws: Vec<f64> = (0..reps)
        .map(|r| {
            let mut rng = CounterRng::new(seed, &[r as u64]);
            for (i, slot) in xb.iter_mut().enumerate() {
                *slot = if fix_x && i == 0 {
                    fixed
                } else {
                    sampler_f(&mut rng)
                };
            }
            for (j, slot) in yb.iter_mut().enumerate() {
                *slot = if !fix_x && j == 0 {
                    fixed
                } else {
                    sampler_g(&mut rng)
                };
            }
            spec.evaluate(&xb, &yb)
        })
        .collect();
    Ok(McEstimate::from_draws(&draws))
}

/// A grid point at which the boundedness condition failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionWitness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub passed: bool,
    pub points_checked: usize,
    pub c0: f64,
    pub kappa: f64,
    /// Largest lhs/rhs over the grid (∞ where rhs = 0 < lhs).
    pub worst_ratio: f64,
    pub first_violation: Option<ConditionWitness>,
}

/// Checks the boundedness condition at every grid point.
///
/// `sigma2` is σ² = σ1² + σ2². A relative slack of 8 ulp absorbs rounding at
/// points where the inequality holds with equality.
pub fn check_kernel_condition(
    spec: &KernelSpec,
    grid: &[(Vec<f64>, Vec<f64>)],
    sigma2: f64,
) -> Result<ConditionReport> {
    let missing = |what: &str| {
        Error::UnsupportedKernel(format!("kernel `{}` carries no {what}", spec.name))
    };
    let theta = spec.theta_null.ok_or_else(|| missing("θ"))?;
    let h1 = spec.h1.as_ref().ok_or_else(|| missing("h1"))?;
    let h2 = spec.h2.as_ref().ok_or_else(|| missing("h2"))?;
    let c0 = spec.c0.ok_or_else(|| missing("c0"))?;
    let kappa = spec.kappa.ok_or_else(|| missing("κ"))?;
    if !(sigma2 > 0.0) {
        return Err(Error::invalid("σ² must be positive"));
    }
    let kappa = kappa.resolve(theta, sigma2);

    let mut worst_ratio: f64 = 0.0;
    let mut first_violation = None;
    for (x, y) in grid {
        if x.len() != spec.order.0 || y.len() != spec.order.1 {
            return Err(Error::invalid("grid point does not match kernel order"));
        }
        let lhs = (spec.evaluate(x, y) - theta).powi(2);
        let proj: f64 = x.iter().map(|&v| (h1(v) - theta).powi(2)).sum::<f64>()
            + y.iter().map(|&v| (h2(v) - theta).powi(2)).sum::<f64>();
        let rhs = c0 * (kappa * sigma2 + proj);
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        worst_ratio = worst_ratio.max(ratio);
        if lhs > rhs * (1.0 + 8.0 * f64::EPSILON) && first_violation.is_none() {
            first_violation = Some(ConditionWitness {
                x: x.clone(),
                y: y.clone(),
                lhs,
                rhs,
            });
        }
    }
    Ok(ConditionReport {
        passed: first_violation.is_none() && c0 >= 1.0 && kappa >= 0.0,
        points_checked: grid.len(),
        c0,
        kappa,
        worst_ratio,
        first_violation,
    })
}

pub const DEFAULT_GRID_POINTS: usize = 10_000;

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    r
}

/// Halton points over [lo, hi]^(s1+s2), split into (x-block, y-block).
pub fn quasi_random_grid(
    order: (usize, usize),
    lo: f64,
    hi: f64,
    count: usize,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let dims = order.0 + order.1;
    assert!(dims <= PRIMES.len(), "grid dimension too large");
    (1..=count as u64)
        .map(|i| {
            let coords: Vec<f64> = PRIMES[..dims]
                .iter()
                .map(|&b| lo + (hi - lo) * radical_inverse(i, b))
                .collect();
            (coords[..order.0].to_vec(), coords[order.0..].to_vec())
        })
        .collect()
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// var{h(U)} for U ~ U(0, 1) by composite 16-point Gauss–Legendre quadrature.
pub fn uniform_projection_variance(h: &dyn Fn(f64) -> f64) -> f64 {
    let (nodes, weights) = gauss_legendre(16);
    let panels = 8;
    let width = 1.0 / panels as f64;
    let (mut m1, mut m2) = (0.0, 0.0);
    for p in 0..panels {
        let a = p as f64 * width;
        for (t, w) in nodes.iter().zip(&weights) {
            let u = a + 0.5 * width * (t + 1.0);
            let v = h(u);
            let wt = 0.5 * width * w;
            m1 += wt * v;
            m2 += wt * v * v;
        }
    }
    m2 - m1 * m1
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform(r: &mut CounterRng) -> f64 {
        r.uniform()
    }

    #[test]
    fn builtin_null_variances() {
        let want = [
            (TwoSampleKernel::MannWhitney, 1.0 / 12.0),
            (TwoSampleKernel::Lehmann, 1.0 / 180.0),
            (TwoSampleKernel::Kochar, 8.0 / 105.0),
            (TwoSampleKernel::MeanDiff, 1.0 / 12.0),
        ];
        for (kind, v) in want {
            let k = builtin_two_sample(kind);
            assert_eq!(k.null_sigma2, Some((v, v)), "{kind:?}");
            let h1 = k.h1.clone().unwrap();
            let h2 = k.h2.clone().unwrap();
            assert!((uniform_projection_variance(&*h1) - v).abs() < 1e-12);
            assert!((uniform_projection_variance(&*h2) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn one_sample_table_constants() {
        let t = builtin_one_sample(OneSampleKernel::TStat);
        assert_eq!((t.c0, t.kappa), (Some(2.0), Some(Kappa::Fixed(0.0))));
        let v = builtin_one_sample(OneSampleKernel::SampleVariance);
        assert_eq!(v.c0, Some(10.0));
        assert_eq!(v.kappa.unwrap().resolve(2.0, 4.0), 1.0);
        assert_eq!(builtin_one_sample(OneSampleKernel::Gini).c0, Some(8.0));
        let w = builtin_one_sample(OneSampleKernel::WilcoxonOne);
        assert_eq!(w.kappa.unwrap().resolve(0.5, 0.25), 4.0);
        assert_eq!(builtin_one_sample(OneSampleKernel::KendallTau).dim, 2);
    }

    #[test]
    fn one_sample_direct_values() {
        let v = builtin_one_sample(OneSampleKernel::SampleVariance);
        assert_eq!(v.evaluate_scalars(&[0.0, 2.0]), 2.0);
        let g = builtin_one_sample(OneSampleKernel::Gini);
        assert_eq!(g.evaluate_scalars(&[0.0, 1.0]), 1.0);
        let w = builtin_one_sample(OneSampleKernel::WilcoxonOne);
        assert_eq!(w.evaluate_scalars(&[-1.0, 0.5]), 1.0);
        assert_eq!(w.evaluate_scalars(&[1.0, 0.5]), 0.0);
        let k = builtin_one_sample(OneSampleKernel::KendallTau);
        assert_eq!(k.evaluate(&[&[0.0, 0.0], &[1.0, 2.0]]), 2.0);
        assert_eq!(k.evaluate(&[&[0.0, 0.0], &[1.0, -2.0]]), 0.0);
    }

    #[test]
    fn kochar_patterns() {
        // y y x x
        assert_eq!(kochar(&[3.0, 4.0], &[1.0, 2.0]), 1.0);
        // x y y x
        assert_eq!(kochar(&[4.0, 1.0], &[2.0, 3.0]), 1.0);
        // x x y y
        assert_eq!(kochar(&[1.0, 2.0], &[4.0, 3.0]), -1.0);
        // y x x y
        assert_eq!(kochar(&[2.0, 3.0], &[4.0, 1.0]), -1.0);
        // interleaved
        assert_eq!(kochar(&[1.0, 3.0], &[2.0, 4.0]), 0.0);
        // ties fail every strict pattern
        assert_eq!(kochar(&[2.0, 3.0], &[1.0, 2.0]), 0.0);
    }

    #[test]
    fn mc_projections_match_closed_forms() {
        let mw = builtin_two_sample(TwoSampleKernel::MannWhitney);
        let est = project_h1_mc(&mw, 0.3, &uniform, &uniform, 20_000, 11).unwrap();
        assert!((est.estimate - 0.2).abs() <= 3.0 * est.std_error, "{est:?}");

        let leh = builtin_two_sample(TwoSampleKernel::Lehmann);
        let est = project_h1_mc(&leh, 0.5, &uniform, &uniform, 20_000, 12).unwrap();
        assert!((est.estimate - 1.0 / 12.0).abs() <= 3.0 * est.std_error, "{est:?}");

        let koc = builtin_two_sample(TwoSampleKernel::Kochar);
        let est = project_h1_mc(&koc, 1.0, &uniform, &uniform, 20_000, 13).unwrap();
        assert!((est.estimate - 2.0 / 3.0).abs() <= 3.0 * est.std_error, "{est:?}");
        assert!((koc.h1.as_ref().unwrap()(1.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mc_projection_is_seeded() {
        let mw = builtin_two_sample(TwoSampleKernel::MannWhitney);
        let a = project_h2_mc(&mw, 0.7, &uniform, &uniform, 500, 1).unwrap();
        let b = project_h2_mc(&mw, 0.7, &uniform, &uniform, 500, 1).unwrap();
        assert_eq!(a, b);
        assert!(project_h1_mc(&mw, 0.7, &uniform, &uniform, 0, 1).is_err());
    }

    #[test]
    fn condition_holds_for_bounded_kernels() {
        for kind in [
            TwoSampleKernel::MannWhitney,
            TwoSampleKernel::Lehmann,
            TwoSampleKernel::Kochar,
        ] {
            let k = builtin_two_sample(kind);
            let (s1, s2) = k.null_sigma2.unwrap();
            let grid = quasi_random_grid(k.order, -0.25, 1.25, 100);
            let rep = check_kernel_condition(&k, &grid, s1 + s2).unwrap();
            assert!(rep.passed, "{kind:?}: {rep:?}");
            assert_eq!(rep.points_checked, 100);
        }
    }

    #[test]
    fn condition_holds_for_mean_difference() {
        let k = builtin_two_sample(TwoSampleKernel::MeanDiff);
        let mut rng = CounterRng::new(99, &[]);
        let grid: Vec<_> = (0..1000)
            .map(|_| {
                (
                    vec![10.0 * (rng.uniform() - 0.5)],
                    vec![10.0 * (rng.uniform() - 0.5)],
                )
            })
            .collect();
        let rep = check_kernel_condition(&k, &grid, 1.0 / 6.0).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.worst_ratio <= 1.0 + 1e-12);
    }

    #[test]
    fn condition_fails_with_small_c0() {
        let k = builtin_two_sample(TwoSampleKernel::MannWhitney).with_constants(0.1, Kappa::Fixed(0.0));
        let grid = quasi_random_grid(k.order, 0.0, 1.0, 50);
        let rep = check_kernel_condition(&k, &grid, 1.0 / 6.0).unwrap();
        assert!(!rep.passed);
        let w = rep.first_violation.unwrap();
        assert!(w.lhs > w.rhs);
    }

    #[test]
    fn condition_needs_constants() {
        let k = KernelSpec::new("custom", (1, 1), |x, y| x[0] * y[0]).unwrap();
        let grid = quasi_random_grid((1, 1), 0.0, 1.0, 5);
        assert!(matches!(
            check_kernel_condition(&k, &grid, 1.0),
            Err(Error::UnsupportedKernel(_))
        ));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        let int_x8: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((int_x8 - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn names_round_trip() {
        for k in TwoSampleKernel::ALL {
            assert_eq!(k.as_str().parse::<TwoSampleKernel>().unwrap(), k);
        }
        for k in OneSampleKernel::ALL {
            assert_eq!(k.as_str().parse::<OneSampleKernel>().unwrap(), k);
        }
        assert!("wilcoxon".parse::<TwoSampleKernel>().is_err());
    }

    proptest! {
        #[test]
        fn two_sample_kernels_symmetric_within_blocks(
            v in proptest::collection::vec(-5.0f64..5.0, 4),
            swap_x in any::<bool>(),
            swap_y in any::<bool>(),
        ) {
            for kind in TwoSampleKernel::ALL {
                let k = builtin_two_sample(kind);
                let (s1, s2) = k.order;
                let x: Vec<f64> = v[..s1].to_vec();
                let y: Vec<f64> = v[s1..s1 + s2].to_vec();
                let mut xp = x.clone();
                let mut yp = y.clone();
                if swap_x { xp.reverse(); }
                if swap_y { yp.reverse(); }
                prop_assert_eq!(k.evaluate(&x, &y), k.evaluate(&xp, &yp));
            }
        }

        #[test]
        fn one_sample_kernels_symmetric(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0, d in -5.0f64..5.0) {
            for kind in OneSampleKernel::ALL {
                let k = builtin_one_sample(kind);
                if k.dim == 1 {
                    prop_assert_eq!(k.evaluate_scalars(&[a, b]), k.evaluate_scalars(&[b, a]));
                } else {
                    let p = [a, b];
                    let q = [c, d];
                    prop_assert_eq!(k.evaluate(&[&p, &q]), k.evaluate(&[&q, &p]));
                }
            }
        }
    }
}
