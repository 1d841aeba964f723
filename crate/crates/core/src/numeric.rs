//! Double-double accumulation.
//!
//! The jackknife estimators and the two-sample t-statistic are required to agree
//! across algebraically equivalent routes to a few ulp. Plain `f64` sums lose
//! that under cancellation, so sums, means and sums of squared deviations are
//! carried in a (hi, lo) pair with roughly 106 bits of precision and rounded
//! once at the end.

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// An unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn from_f64(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    #[inline]
    pub fn add_f64(self, b: f64) -> Self {
        let (s, e) = two_sum(self.hi, b);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        Dd { hi, lo }
    }

    #[inline]
    pub fn add(self, b: Dd) -> Self {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    #[inline]
    pub fn neg(self) -> Self {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    #[inline]
    pub fn sub(self, b: Dd) -> Self {
        self.add(b.neg())
    }

    #[inline]
    pub fn mul(self, b: Dd) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn square(self) -> Self {
        self.mul(self)
    }

    pub fn div_f64(self, d: f64) -> Self {
        let q1 = self.hi / d;
        let (p, e) = two_prod(q1, d);
        let r = (self.hi - p - e + self.lo) / d;
        let (hi, lo) = quick_two_sum(q1, r);
        Dd { hi, lo }
    }

    pub fn div(self, d: Dd) -> Self {
        let q1 = self.hi / d.hi;
        let r = self.sub(d.mul(Dd::from_f64(q1)));
        let q2 = r.hi / d.hi;
        let r = r.sub(d.mul(Dd::from_f64(q2)));
        let q3 = r.hi / d.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add_f64(q3)
    }

    /// Nearest `f64`.
    #[inline]
    pub fn value(self) -> f64 {
        self.hi + self.lo
    }
}

pub fn sum(values: &[f64]) -> Dd {
    values.iter().fold(Dd::ZERO, |acc, &v| acc.add_f64(v))
}

pub fn mean(values: &[f64]) -> Dd {
    sum(values).div_f64(values.len() as f64)
}

/// Σ (v − v̄)² over plain values.
pub fn sum_sq_dev(values: &[f64]) -> Dd {
    let m = mean(values);
    values.iter().fold(Dd::ZERO, |acc, &v| {
        acc.add(Dd::from_f64(v).sub(m).square())
    })
}

/// Σ (v − v̄)² over double-double values.
pub fn sum_sq_dev_dd(values: &[Dd]) -> Dd {
    let total = values.iter().fold(Dd::ZERO, |acc, &v| acc.add(v));
    let m = total.div_f64(values.len() as f64);
    values
        .iter()
        .fold(Dd::ZERO, |acc, &v| acc.add(v.sub(m).square()))
}

/// Σ (v − c)² around a supplied centre.
pub fn sum_sq_around(values: &[Dd], centre: Dd) -> Dd {
    values
        .iter()
        .fold(Dd::ZERO, |acc, &v| acc.add(v.sub(centre).square()))
}

/// Binomial coefficient as an exact integer, `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Lexicographic k-subsets of `0..n`, advanced in place.
pub(crate) struct Combinations {
    idx: Vec<usize>,
    n: usize,
    started: bool,
}

impl Combinations {
    pub(crate) fn new(n: usize, k: usize) -> Self {
        Combinations {
            idx: (0..k).collect(),
            n,
            started: false,
        }
    }

    pub(crate) fn next_combo(&mut self) -> Option<&[usize]> {
        let k = self.idx.len();
        if !self.started {
            self.started = true;
            return if k <= self.n { Some(&self.idx) } else { None };
        }
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                return Some(&self.idx);
            }
        }
        None
    }
}
