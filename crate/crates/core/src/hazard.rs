//! Hazard-rate vectors, parametric families and the δ-record likelihood.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::records::{CountTable, DeltaRecordSample};

/// Which likelihood a sample supports.
///
/// `Complete` applies when all near-records of the last record were seen;
/// `Incomplete` drops the survival contribution of the values
/// `r_n − k < j ≤ r_n`, whose near-record counts may be truncated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Likelihood {
    Complete,
    Incomplete,
}

/// Distribution families on `{0, 1, 2, ...}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ParametricFamily {
    /// `P(j) = p (1−p)^j`.
    Geometric {
        p: f64,
    },
    Poisson {
        lambda: f64,
    },
    /// Failures before the `m`-th success: `P(j) = C(j+m−1, j) p^m (1−p)^j`.
    #[serde(rename = "negbinom")]
    NegBinomial {
        m: u32,
        p: f64,
    },
}

impl ParametricFamily {
    pub fn geometric(p: f64) -> Result<Self> {
        Self::Geometric { p }.validated()
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        Self::Poisson { lambda }.validated()
    }

    pub fn negbinom(m: u32, p: f64) -> Result<Self> {
        Self::NegBinomial { m, p }.validated()
    }

    fn validated(self) -> Result<Self> {
        let ok = match self {
            Self::Geometric { p } => p > 0.0 && p < 1.0,
            Self::Poisson { lambda } => lambda > 0.0 && lambda.is_finite(),
            Self::NegBinomial { m, p } => m >= 1 && p > 0.0 && p < 1.0,
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidParameter(format!("{self} is out of range")))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Geometric { .. } => "geometric",
            Self::Poisson { .. } => "poisson",
            Self::NegBinomial { .. } => "negbinom",
        }
    }

    pub fn ln_pmf(&self, j: u64) -> f64 {
        let x = j as f64;
        match *self {
            Self::Geometric { p } => p.ln() + x * (-p).ln_1p(),
            Self::Poisson { lambda } => {
                x * lambda.ln() - lambda - statrs::function::gamma::ln_gamma(x + 1.0)
            }
            Self::NegBinomial { m, p } => {
                let m = f64::from(m);
                use statrs::function::gamma::ln_gamma;
                ln_gamma(x + m) - ln_gamma(x + 1.0) - ln_gamma(m) + m * p.ln() + x * (-p).ln_1p()
            }
        }
    }

    pub fn pmf(&self, j: u64) -> f64 {
        self.ln_pmf(j).exp()
    }

    /// `P(i+1) / P(i)`.
    fn step_ratio(&self, i: u64) -> f64 {
        let x = i as f64;
        match *self {
            Self::Geometric { p } => 1.0 - p,
            Self::Poisson { lambda } => lambda / (x + 1.0),
            Self::NegBinomial { m, p } => (x + f64::from(m)) / (x + 1.0) * (1.0 - p),
        }
    }

    /// Hazard rate `h_j = P(j) / P(X ≥ j)`.
    ///
    /// Past the mode the upper tail is summed directly as
    /// `1/h_j = Σ_{n≥0} P(j+n)/P(j)`, whose terms are products of the
    /// decreasing step ratios; no subtraction from one is involved.
    /// Below the mode `P(X ≥ j)` is bounded away from zero and the plain
    /// complement is accurate.
    pub fn hazard(&self, j: u64) -> f64 {
        self.hazard_given_mass_below(j, || (0..j).map(|i| self.pmf(i)).sum())
    }

    fn hazard_given_mass_below(&self, j: u64, below: impl FnOnce() -> f64) -> f64 {
        if let Self::Geometric { p } = *self {
            return p;
        }
        if self.step_ratio(j) < 1.0 {
            let mut sum = 1.0;
            let mut term = 1.0;
            let mut i = j;
            loop {
                let r = self.step_ratio(i);
                term *= r;
                sum += term;
                i += 1;
                if term * r / (1.0 - r) < 1e-17 * sum {
                    break;
                }
            }
            1.0 / sum
        } else {
            (self.ln_pmf(j) - (1.0 - below()).ln()).exp().min(1.0)
        }
    }

    /// `h_0 … h_J`.
    pub fn hazards(&self, max_j: u64) -> Vec<f64> {
        let mut below = 0.0;
        (0..=max_j)
            .map(|j| {
                let h = self.hazard_given_mass_below(j, || below);
                below += self.pmf(j);
                h
            })
            .collect()
    }
}

impl fmt::Display for ParametricFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Geometric { p } => write!(f, "geometric:p={p}"),
            Self::Poisson { lambda } => write!(f, "poisson:lambda={lambda}"),
            Self::NegBinomial { m, p } => write!(f, "negbinom:m={m},p={p}"),
        }
    }
}

impl FromStr for ParametricFamily {
    type Err = Error;

    /// Parses `geometric:p=0.8`, `poisson:lambda=4.108`, `negbinom:m=5,p=0.8`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = s.split_once(':').unwrap_or((s, ""));
        let mut p = None;
        let mut lambda = None;
        let mut m = None;
        for kv in params.split(',').filter(|t| !t.trim().is_empty()) {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {kv:?}")))?;
            let bad = || Error::Parse(format!("bad value for {key}: {value:?}"));
            match key.trim() {
                "p" => p = Some(value.trim().parse::<f64>().map_err(|_| bad())?),
                "lambda" => lambda = Some(value.trim().parse::<f64>().map_err(|_| bad())?),
                "m" => m = Some(value.trim().parse::<u32>().map_err(|_| bad())?),
                other => return Err(Error::Parse(format!("unknown parameter {other:?}"))),
            }
        }
        let missing = |what: &str| Error::Parse(format!("{name} needs {what}="));
        match name.trim() {
            "geometric" | "geom" => Self::geometric(p.ok_or_else(|| missing("p"))?),
            "poisson" => Self::poisson(lambda.ok_or_else(|| missing("lambda"))?),
            "negbinom" | "negbin" => Self::negbinom(
                m.ok_or_else(|| missing("m"))?,
                p.ok_or_else(|| missing("p"))?,
            ),
            other => Err(Error::Parse(format!("unknown family {other:?}"))),
        }
    }
}

/// Hazard rates `h_0 … h_J`, optionally extended beyond `J` by a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardVector {
    h: Vec<f64>,
    #[serde(default)]
    offset: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tail: Option<ParametricFamily>,
}

/// Conditional quantities at `j` with horizon `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConditionalQuantities {
    /// `h_{j+i|j} = P(j+i) / F̄(j−1)` for `i = 0..=k`.
    pub hazards: Vec<f64>,
    /// `F̄(j+k|j) = F̄(j+k) / F̄(j−1)`.
    pub survival: f64,
    /// `d_{j,k} = h_j + F̄(j+k|j)`.
    pub d: f64,
}

impl HazardVector {
    pub fn new(h: Vec<f64>, offset: u64) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some((j, x)) = h.iter().enumerate().find(|(_, x)| !(0.0..1.0).contains(*x)) {
            return Err(Error::InvalidParameter(format!(
                "h_{j} = {x} is outside [0, 1)"
            )));
        }
        Ok(Self {
            h,
            offset,
            tail: None,
        })
    }

    /// `h_0 … h_J` of a family, which also supplies values past `J`.
    pub fn of_family(family: ParametricFamily, max_j: u64) -> Result<Self> {
        let family = family.validated()?;
        Ok(Self {
            h: family.hazards(max_j),
            offset: 0,
            tail: Some(family),
        })
    }

    pub fn with_offset(mut self, offset: u64) -> Self {
        self.offset = offset;
        self
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn family(&self) -> Option<ParametricFamily> {
        self.tail
    }

    /// The listed rates.
    pub fn values(&self) -> &[f64] {
        &self.h
    }

    pub fn max_listed(&self) -> usize {
        self.h.len() - 1
    }

    pub fn hazard(&self, j: u64) -> Result<f64> {
        match (self.h.get(j as usize), self.tail) {
            (Some(&h), _) => Ok(h),
            (None, Some(fam)) => Ok(fam.hazard(j)),
            (None, None) => Err(Error::HazardOutOfRange {
                needed: j as usize,
                len_max: self.max_listed(),
            }),
        }
    }

    /// `ln F̄(j) = Σ_{i≤j} ln(1 − h_i)`; `ln F̄(−1) = 0`.
    pub fn ln_survival(&self, j: i64) -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..=j.max(-1) {
            acc += (-self.hazard(i as u64)?).ln_1p();
        }
        Ok(acc)
    }

    pub fn survival(&self, j: i64) -> Result<f64> {
        Ok(self.ln_survival(j)?.exp())
    }

    /// `P(j) = h_j F̄(j−1)`.
    pub fn pmf(&self, j: u64) -> Result<f64> {
        Ok(self.hazard(j)? * self.survival(j as i64 - 1)?)
    }

    /// `P(0) … P(J)` and `F̄(0) … F̄(J)` over the listed range.
    pub fn pmf_and_survival(&self) -> (Vec<f64>, Vec<f64>) {
        let mut surv = 1.0;
        let mut pmf = Vec::with_capacity(self.h.len());
        let mut sf = Vec::with_capacity(self.h.len());
        for &h in &self.h {
            pmf.push(h * surv);
            surv *= 1.0 - h;
            sf.push(surv);
        }
        (pmf, sf)
    }

    /// Inverse of [`Self::pmf_and_survival`]: `h_j = P(j) / (P(j) + F̄(j))`.
    pub fn from_pmf_and_survival(pmf: &[f64], survival: &[f64], offset: u64) -> Result<Self> {
        if pmf.len() != survival.len() {
            return Err(Error::InvalidParameter(
                "pmf and survival lengths differ".into(),
            ));
        }
        let h = pmf
            .iter()
            .zip(survival)
            .map(|(&p, &s)| if p + s > 0.0 { p / (p + s) } else { 0.0 })
            .collect();
        Self::new(h, offset)
    }

    /// Recovers hazards from a pmf: `h_j = P(j) / (1 − Σ_{i<j} P(i))`.
    /// Loses relative accuracy once the survival is small; prefer
    /// [`Self::from_pmf_and_survival`] when the survival is known.
    pub fn from_pmf(pmf: &[f64], offset: u64) -> Result<Self> {
        let mut surv = 1.0;
        let mut h = Vec::with_capacity(pmf.len());
        for &p in pmf {
            h.push(if surv > 0.0 { p / surv } else { 0.0 });
            surv -= p;
        }
        Self::new(h, offset)
    }

    pub fn conditional_quantities(&self, j: u64, k: u32) -> Result<ConditionalQuantities> {
        let mut hazards = Vec::with_capacity(k as usize + 1);
        let mut surv = 1.0;
        for i in 0..=u64::from(k) {
            let h = self.hazard(j + i)?;
            hazards.push(h * surv);
            surv *= 1.0 - h;
        }
        Ok(ConditionalQuantities {
            d: hazards[0] + surv,
            hazards,
            survival: surv,
        })
    }

    /// `d_{j,k}`.
    pub fn d(&self, j: u64, k: u32) -> Result<f64> {
        Ok(self.conditional_quantities(j, k)?.d)
    }
}

/// `x ln y` with `0 ln 0 = 0`.
pub(crate) fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// `Σ_j v_j ln h_j + (n_j − v_j) ln(1 − h_j)` over `(v, n)` columns.
pub(crate) fn log_likelihood_columns(
    columns: &[(u64, u64)],
    h: impl Fn(u64) -> Result<f64>,
) -> Result<f64> {
    let mut ll = 0.0;
    for (j, &(v, n)) in columns.iter().enumerate() {
        let hj = h(j as u64)?;
        ll += xlny(v as f64, hj) + xlny((n - v) as f64, 1.0 - hj);
    }
    Ok(ll)
}

/// The supremum of the hazard-form log-likelihood, attained at `h_j = v/n`.
pub fn max_log_likelihood(counts: &CountTable, likelihood: Likelihood) -> f64 {
    counts
        .columns(likelihood)
        .iter()
        .map(|&(v, n)| {
            let (v, n) = (v as f64, n as f64);
            xlny(v, v / n) + xlny(n - v, (n - v) / n)
        })
        .sum()
}

/// Log-likelihood of the counts under `hv` in hazard form:
/// `Σ_{j≤r_n} v(j,k) ln h_j + (N_j − v(j,k)) ln(1 − h_j)`.
///
/// Returns `-inf` when the data are impossible under `hv`.
pub fn log_likelihood(
    counts: &CountTable,
    hv: &HazardVector,
    likelihood: Likelihood,
) -> Result<f64> {
    log_likelihood_columns(&counts.columns(likelihood), |j| hv.hazard(j))
}

/// The same likelihood evaluated as a product of pmf and survival ratios
/// over the δ-records in observation order.
pub fn log_likelihood_product(
    sample: &DeltaRecordSample,
    hv: &HazardVector,
    likelihood: Likelihood,
) -> Result<f64> {
    let k = i64::from(sample.k());
    let ln_pmf = |x: u64| -> Result<f64> { Ok(hv.pmf(x)?.ln()) };
    let records = sample.records();
    let mut ll = ln_pmf(records[0])?;
    for (i, (&r, block)) in records.iter().zip(sample.near_values()).enumerate() {
        let base = hv.ln_survival(r as i64 - k - 1)?;
        for &y in block {
            ll += ln_pmf(y)? - base;
        }
        match records.get(i + 1) {
            Some(&next) => ll += ln_pmf(next)? - base,
            None => {
                let end = match likelihood {
                    Likelihood::Complete => r as i64,
                    Likelihood::Incomplete => r as i64 - k,
                };
                ll += hv.ln_survival(end)? - base;
            }
        }
    }
    Ok(ll)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::{count_table, extract_delta_records, IntSequence};

    #[test]
    fn geometric_hazard_is_constant() {
        let hv = HazardVector::of_family(ParametricFamily::geometric(0.8).unwrap(), 20).unwrap();
        assert!(hv.values().iter().all(|&h| (h - 0.8).abs() < 1e-15));
        for j in 0..5 {
            for k in 0..5 {
                let d = hv.d(j, k).unwrap();
                assert!((d - (0.8 + 0.2f64.powi(k as i32 + 1))).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn negbinom_hazard_at_six() {
        let fam: ParametricFamily = "negbinom:m=5,p=0.8".parse().unwrap();
        assert!((fam.hazard(6) - 0.6914).abs() < 5e-5);
    }

    #[test]
    fn poisson_hazards() {
        let fam: ParametricFamily = "poisson:lambda=4.108".parse().unwrap();
        assert!((fam.hazard(0) - 0.016).abs() < 5e-4);
        assert!((fam.hazard(6) - 0.473).abs() < 5e-4);
    }

    #[test]
    fn poisson_far_tail_is_finite() {
        let fam = ParametricFamily::poisson(4.0).unwrap();
        let h = fam.hazard(400);
        // h_j ~ 1 − λ/(j+1) for j ≫ λ
        assert!(h.is_finite() && h > 0.98 && h < 1.0);
    }

    #[test]
    fn k_zero_gives_unit_d() {
        let hv = HazardVector::new(vec![0.3, 0.5, 0.1], 0).unwrap();
        for j in 0..3 {
            assert!((hv.d(j, 0).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn d_two_ways() {
        let hv = HazardVector::of_family("negbinom:m=5,p=0.8".parse().unwrap(), 30).unwrap();
        let c = hv.conditional_quantities(6, 3).unwrap();
        let alt = 1.0 - c.hazards[1..].iter().sum::<f64>();
        assert!((c.d - alt).abs() < 1e-12);
    }

    #[test]
    fn bare_vector_refuses_beyond_range() {
        let hv = HazardVector::new(vec![0.2, 0.4], 0).unwrap();
        assert_eq!(
            hv.hazard(2),
            Err(Error::HazardOutOfRange {
                needed: 2,
                len_max: 1
            })
        );
        assert!(HazardVector::new(vec![0.2, 1.0], 0).is_err());
    }

    #[test]
    fn single_record_likelihood() {
        let seq = IntSequence::new(vec![0], 0).unwrap();
        let sample = extract_delta_records(&seq, 0)
            .unwrap()
            .with_last_record_complete(true);
        let counts = count_table(&sample);
        let hv = HazardVector::new(vec![0.3], 0).unwrap();
        let ll = log_likelihood(&counts, &hv, Likelihood::Complete).unwrap();
        assert!((ll - (0.3f64.ln() + 0.7f64.ln())).abs() < 1e-15);
        let prod = log_likelihood_product(&sample, &hv, Likelihood::Complete).unwrap();
        assert!((ll - prod).abs() < 1e-15);
    }

    #[test]
    fn family_parsing_errors() {
        assert!("geometric".parse::<ParametricFamily>().is_err());
        assert!("geometric:p=1.5".parse::<ParametricFamily>().is_err());
        assert!("poisson:lambda=-1".parse::<ParametricFamily>().is_err());
        assert!("weibull:p=0.5".parse::<ParametricFamily>().is_err());
        assert!("negbinom:m=0,p=0.5".parse::<ParametricFamily>().is_err());
        let f: ParametricFamily = "poisson:lambda=2".parse().unwrap();
        assert_eq!(f.to_string().parse::<ParametricFamily>().unwrap(), f);
    }
}
