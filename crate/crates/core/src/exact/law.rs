//! The exact law of `ĥ_{j,k}`, which depends only on `h = h_j` and
//! `d = d_{j,k}`.
//!
//! Writing `ĥ = V/(V+M+1)`, the pair `(V, M)` has `M` geometric with ratio
//! `r = (1−d)/(1−h)` and, given `M = m`, `V` negative binomial: failures
//! of probability `h` before the `(m+1)`-th success. Hence
//! `P(ĥ ≤ x) = Σ_m P(M = m) P(Bin(m+1+L_m, h) ≤ L_m)` with
//! `L_m = ⌊(1+m)x/(1−x)⌋`. The terms after `m` carry mass at most `r^{m+1}`,
//! which is the truncation rule used here.

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use super::dilog::dilog;
use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// A reduced fraction `a/b` in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RationalQ {
    a: u64,
    b: u64,
}

impl RationalQ {
    /// Reduces `a/b`; requires `a < b`.
    pub fn new(a: u64, b: u64) -> Result<Self> {
        if b == 0 || a >= b {
            return Err(Error::InvalidParameter(format!(
                "{a}/{b} is not a fraction in [0, 1)"
            )));
        }
        let g = a.gcd(&b);
        Ok(Self { a: a / g, b: b / g })
    }

    pub fn zero() -> Self {
        Self { a: 0, b: 1 }
    }

    pub fn numer(&self) -> u64 {
        self.a
    }

    pub fn denom(&self) -> u64 {
        self.b
    }

    pub fn value(&self) -> f64 {
        self.a as f64 / self.b as f64
    }

    /// The `i`-th solution `(ℓ, m) = (a·i, (b−a)·i − 1)` of
    /// `ℓ/(ℓ+m+1) = a/b`, for `i ≥ 1`.
    pub fn solution(&self, i: u64) -> (u64, u64) {
        (self.a * i, (self.b - self.a) * i - 1)
    }
}

/// Mean, variance and mean squared error of `ĥ_{j,k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub mse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EstimatorLaw {
    h: f64,
    /// `d − h`, kept separately so that tiny gaps survive.
    gap: f64,
    tolerance: f64,
}

impl EstimatorLaw {
    pub fn new(h: f64, d: f64) -> Result<Self> {
        if !(h > 0.0 && h < d && d <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < h < d <= 1, got h = {h}, d = {d}"
            )));
        }
        Ok(Self {
            h,
            gap: d - h,
            tolerance: DEFAULT_TOLERANCE,
        })
    }

    /// The law with `d = h + gap`; accurate even when `gap` is below the
    /// resolution of `h`.
    pub fn with_gap(h: f64, gap: f64) -> Result<Self> {
        if !(h > 0.0 && gap > 0.0 && h < 1.0 && gap <= 1.0 - h + 1e-15) {
            return Err(Error::InvalidParameter(format!(
                "need h in (0, 1) and 0 < d − h <= 1 − h, got h = {h}, d − h = {gap}"
            )));
        }
        Ok(Self {
            h,
            gap: gap.min(1.0 - h),
            tolerance: DEFAULT_TOLERANCE,
        })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn d(&self) -> f64 {
        self.h + self.gap
    }

    /// `1 − d`.
    fn one_minus_d(&self) -> f64 {
        ((1.0 - self.h) - self.gap).max(0.0)
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Success parameter of `N_j^k`, geometric on `{1, 2, ...}`.
    pub fn n_stat_law(&self) -> f64 {
        self.gap
    }

    /// `Σ_m P(M = m) P(Bin(m+1+L_m, h) ≤ L_m)` for a caller-supplied `L_m`
    /// with `L_m/(m+1+L_m)` at most, and `(L_m+1)/(m+2+L_m)` at least, `x`.
    ///
    /// Stops once the remaining mass `r^{m+1}` of `M` is below tolerance, or
    /// once the Chernoff bound `exp(−n KL(x‖h))` on the distance of the
    /// binomial term from its limit (0 if `x < h`, 1 if `x > h`) is; the
    /// bound only shrinks as `m` grows.
    fn mixture(&self, x: f64, bound: impl Fn(u64) -> u64) -> f64 {
        let h = self.h;
        let r = self.one_minus_d() / (1.0 - h);
        let kl = if x == h {
            0.0
        } else {
            xlnx(x) - x * h.ln() + xlnx(1.0 - x) - (1.0 - x) * (-h).ln_1p()
        };
        let limit = if x > h { 1.0 } else { 0.0 };
        let mut weight = self.gap / (1.0 - h);
        let mut tail = 1.0;
        let mut sum = 0.0;
        for m in 0u64.. {
            // P(Bin(n, h) ≤ L) = I_{1−h}(n − L, L + 1)
            let l = bound(m) as f64;
            sum += weight * beta_reg((m + 1) as f64, l + 1.0, 1.0 - h);
            tail *= r;
            weight *= r;
            if tail < self.tolerance {
                break;
            }
            let n = (m + 1) as f64 + l;
            if kl > 0.0 && -n * kl < self.tolerance.ln() {
                sum += tail * limit;
                break;
            }
        }
        sum.min(1.0)
    }

    /// `G(x) = P(ĥ ≤ x)` for real `x ∈ [0, 1)`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&x) {
            return Err(Error::InvalidParameter(format!(
                "cdf argument {x} outside [0, 1)"
            )));
        }
        let slope = x / (1.0 - x);
        Ok(self.mixture(x, |m| ((1 + m) as f64 * slope).floor() as u64))
    }

    /// `P(ĥ ≤ q)` with the floor taken in integer arithmetic.
    pub fn cdf_rational(&self, q: RationalQ) -> f64 {
        let (a, gap) = (u128::from(q.a), u128::from(q.b - q.a));
        self.mixture(q.value(), |m| (a * u128::from(m + 1) / gap) as u64)
    }

    /// `P(ĥ < q)`.
    pub fn cdf_strict(&self, q: RationalQ) -> f64 {
        if q.a == 0 {
            return 0.0;
        }
        let (a, gap) = (u128::from(q.a), u128::from(q.b - q.a));
        // ℓ(b−a) < a(m+1)  ⇔  ℓ ≤ ⌈a(m+1)/(b−a)⌉ − 1
        self.mixture(q.value(), |m| {
            (a * u128::from(m + 1)).div_ceil(gap) as u64 - 1
        })
    }

    /// `P(ĥ = a/b) = (d−h) Σ_{i≥1} C(bi−1, ai) h^{ai} (1−d)^{(b−a)i−1}`.
    pub fn pmf(&self, q: RationalQ) -> f64 {
        let (a, b) = (q.a as f64, q.b as f64);
        let ln_h = self.h.ln();
        let one_minus_d = self.one_minus_d();
        let ln_1md = one_minus_d.ln();
        if one_minus_d == 0.0 {
            // only (b−a)i − 1 = 0 survives
            return if q.b - q.a == 1 {
                self.gap * (a * ln_h).exp()
            } else {
                0.0
            };
        }
        // Terms decay geometrically with the limiting ratio below.
        let limit = (b * b.ln() - xlnx(a) - xlnx(b - a) + a * ln_h + (b - a) * ln_1md).exp();
        let mut sum = 0.0;
        for i in 1u64.. {
            let i = i as f64;
            let ln_term = ln_gamma(b * i) - ln_gamma(a * i + 1.0) - ln_gamma((b - a) * i)
                + a * i * ln_h
                + ((b - a) * i - 1.0) * ln_1md;
            let term = ln_term.exp();
            sum += term;
            // The ratios increase towards `limit`, so the tail after this
            // term is below term·limit/(1−limit).
            if term == 0.0 || term * limit / (1.0 - limit) <= self.tolerance * sum {
                break;
            }
        }
        self.gap * sum
    }

    /// Closed-form moments.
    pub fn moments(&self) -> Result<Moments> {
        let (h, d, s) = (self.h, self.d(), self.gap);
        let c = 1.0 - s;
        if c <= 0.0 || s <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "degenerate law h = {h}, d = {d}"
            )));
        }
        let ln_s = s.ln();
        let li2 = dilog(c)?;
        let mean = s * h / (c * c) * ln_s + h / c;
        let variance = s * (h + d - 1.0) * h / c.powi(3) * li2
            - (s * h / (c * c) * ln_s).powi(2)
            - s * (1.0 - d) * h / c.powi(3) * ln_s;
        let mse = s * (h + d - 1.0) * h / c.powi(3) * li2
            + (h * s / c).powi(2)
            + s * (2.0 * h * s - (1.0 - d)) * h / c.powi(3) * ln_s;
        Ok(Moments {
            mean,
            variance,
            mse,
        })
    }
}

fn xlnx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}
