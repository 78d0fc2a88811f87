//! Confidence intervals by inversion of the exact law, and likelihood-ratio
//! goodness-of-fit tests calibrated by the parametric bootstrap.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{EstimatorLaw, RationalQ};
use crate::hazard::{
    log_likelihood_columns, max_log_likelihood, HazardVector, Likelihood, ParametricFamily,
};
use crate::npmle::geometric_mle;
use crate::records::{count_table, CountTable, DeltaRecordSample};
use crate::sim::{replicate_rng, simulate_counts, Sampler, StopRule, DEFAULT_ITERATION_CAP};

pub const DEFAULT_BOOTSTRAP: usize = 999;
const BISECTION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConfidenceInterval {
    /// Value on the original scale.
    pub j: u64,
    pub k: u32,
    pub alpha: f64,
    pub estimate: f64,
    pub numerator: u64,
    pub denominator: u64,
    pub lower: f64,
    pub upper: f64,
    pub method: &'static str,
}

/// `(P(ĥ < q), P(ĥ ≤ q))` under `h` with `d = h + (1−h)^{k+1}`.
fn tails(h: f64, k: u32, q: RationalQ) -> (f64, f64) {
    let gap = (1.0 - h).powi(k as i32 + 1);
    match EstimatorLaw::with_gap(h, gap) {
        Ok(law) => (law.cdf_strict(q), law.cdf_rational(q)),
        // The gap vanished numerically: ĥ sits at h.
        Err(_) => {
            let x = q.value();
            (f64::from(h < x), f64::from(h <= x))
        }
    }
}

/// Largest point of `(lo, hi)` where `holds` is still true, assuming it is
/// true at `lo` and false at `hi` and switches once.
fn bisect(mut lo: f64, mut hi: f64, holds: impl Fn(f64) -> bool) -> (f64, f64) {
    while hi - lo > BISECTION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Equal-tailed interval for `h_j` (internal `j`) by inverting the exact
/// law of `ĥ_{j,k}`, with the nuisance `d_{j,k}` replaced by
/// `h + (1−h)^{k+1}`. The tails include the atom at the observed value.
pub fn confidence_interval(counts: &CountTable, j: u64, alpha: f64) -> Result<ConfidenceInterval> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha {alpha} outside (0, 1)"
        )));
    }
    let k = counts.k();
    let max = counts.max_value();
    if j + u64::from(k) > max {
        return Err(Error::OutsideExactRegime {
            sum: j + u64::from(k) + counts.offset(),
            max: max + counts.offset(),
            max_k: max as i64 - j as i64,
        });
    }
    let v = counts.v(j, k);
    let n = counts.n_stat(j, k);
    let (lower, upper) = exact_interval(v, n, k, alpha)?;
    Ok(ConfidenceInterval {
        j: j + counts.offset(),
        k,
        alpha,
        estimate: v as f64 / n as f64,
        numerator: v,
        denominator: n,
        lower,
        upper,
        method: "geometric-d",
    })
}

/// Interval endpoints for an observed `ĥ_{j,k} = v/n`.
pub fn exact_interval(v: u64, n: u64, k: u32, alpha: f64) -> Result<(f64, f64)> {
    let q = RationalQ::new(v, n)?;
    let half = alpha / 2.0;
    let lower = if v == 0 {
        0.0
    } else {
        // P_h(ĥ ≥ q) grows with h; keep the side where it is still too small.
        bisect(0.0, 1.0, |h| 1.0 - tails(h, k, q).0 < half).0
    };
    // P_h(ĥ ≤ q) shrinks with h.
    let upper = bisect(0.0, 1.0, |h| tails(h, k, q).1 >= half).1;
    Ok((lower, upper))
}

/// `ln LR` of a fully specified null hazard vector.
pub fn lr_statistic_simple(
    counts: &CountTable,
    null: &HazardVector,
    likelihood: Likelihood,
) -> Result<f64> {
    let num = log_likelihood_columns(&counts.columns(likelihood), |j| null.hazard(j))?;
    Ok(lr_from(num, max_log_likelihood(counts, likelihood)))
}

fn lr_from(numerator: f64, supremum: f64) -> f64 {
    if numerator == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        (numerator - supremum).min(0.0)
    }
}

/// Families with a composite (parameter-free) null.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Geometric,
    Poisson,
}

fn poisson_log_likelihood(columns: &[(u64, u64)], lambda: f64) -> f64 {
    let h = ParametricFamily::Poisson { lambda }.hazards(columns.len() as u64 - 1);
    log_likelihood_columns(columns, |j| Ok(h[j as usize])).unwrap_or(f64::NEG_INFINITY)
}

/// Maximizes a function on `[lo, hi]` by golden-section search.
fn golden_section(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// `ln LR` with the family parameter fitted by maximum likelihood, and the
/// fitted family.
pub fn lr_statistic_composite(
    counts: &CountTable,
    kind: FamilyKind,
    likelihood: Likelihood,
) -> Result<(f64, ParametricFamily)> {
    let columns = counts.columns(likelihood);
    let sup = max_log_likelihood(counts, likelihood);
    match kind {
        FamilyKind::Geometric => {
            let fit = geometric_mle(counts, likelihood);
            let (v, n) = (fit.numerator as f64, fit.denominator as f64);
            let num = crate::hazard::xlny(v, fit.p) + crate::hazard::xlny(n - v, 1.0 - fit.p);
            // A boundary fit (p̂ = 1) is reported as the closest valid family.
            let p = fit.p.clamp(1e-12, 1.0 - 1e-12);
            Ok((lr_from(num, sup), ParametricFamily::Geometric { p }))
        }
        FamilyKind::Poisson => {
            let hi = 10.0 * (counts.max_value() as f64 + 1.0);
            let lambda = golden_section(1e-6, hi, 1e-8, |l| poisson_log_likelihood(&columns, l));
            let num = poisson_log_likelihood(&columns, lambda);
            Ok((lr_from(num, sup), ParametricFamily::Poisson { lambda }))
        }
    }
}

/// The null hypothesis of a goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase", tag = "type", content = "family")]
pub enum NullSpec {
    Simple(ParametricFamily),
    Composite(FamilyKind),
}

impl FromStr for NullSpec {
    type Err = Error;

    /// `geometric` and `poisson` are composite; a family with parameters,
    /// such as `geometric:p=0.3`, is simple.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "geometric" | "geom" => Ok(Self::Composite(FamilyKind::Geometric)),
            "poisson" => Ok(Self::Composite(FamilyKind::Poisson)),
            other => Ok(Self::Simple(other.parse()?)),
        }
    }
}

impl fmt::Display for NullSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Simple(fam) => write!(f, "{fam}"),
            Self::Composite(FamilyKind::Geometric) => write!(f, "geometric"),
            Self::Composite(FamilyKind::Poisson) => write!(f, "poisson"),
        }
    }
}

/// How the observed data were collected; bootstrap samples copy it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase", tag = "scheme", content = "value")]
pub enum Design {
    /// A raw sequence of this length.
    RawLength(u64),
    /// Observation until this many records, all near-records of the last one
    /// included.
    Records(usize),
}

impl Design {
    fn stop_rule(self) -> StopRule {
        match self {
            Self::RawLength(n) => StopRule::FixedLength(n),
            Self::Records(n) => StopRule::NRecords(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GofTestResult {
    pub statistic: f64,
    pub log_statistic: f64,
    pub p_value: f64,
    #[serde(rename = "B")]
    pub b: usize,
    pub seed: u64,
    pub k: u32,
    pub null: String,
    pub fitted: Option<ParametricFamily>,
    pub design: Design,
    /// Replicates that hit the iteration cap and were redrawn.
    pub capped_redraws: u64,
}

fn statistic(counts: &CountTable, null: NullSpec) -> Result<(f64, ParametricFamily)> {
    let lik = counts.default_likelihood();
    match null {
        NullSpec::Simple(fam) => {
            let hv = HazardVector::of_family(fam, counts.max_value())?;
            Ok((lr_statistic_simple(counts, &hv, lik)?, fam))
        }
        NullSpec::Composite(kind) => lr_statistic_composite(counts, kind, lik),
    }
}

/// Parametric-bootstrap p-value `(1 + #{LR_b ≤ LR_obs}) / (B + 1)`.
///
/// Replicate `b` uses the random stream `(seed, b)`, so the result does not
/// depend on the thread count.
pub fn bootstrap_pvalue(
    sample: &DeltaRecordSample,
    design: Design,
    null: NullSpec,
    b: usize,
    seed: u64,
) -> Result<GofTestResult> {
    bootstrap_pvalue_counts(&count_table(sample), design, null, b, seed)
}

/// [`bootstrap_pvalue`] on the count statistics of a sample.
pub fn bootstrap_pvalue_counts(
    counts: &CountTable,
    design: Design,
    null: NullSpec,
    b: usize,
    seed: u64,
) -> Result<GofTestResult> {
    if b == 0 {
        return Err(Error::InvalidParameter("B must be ≥ 1".into()));
    }
    let (observed, fitted) = statistic(counts, null)?;
    let sampler = Sampler::new(fitted);
    let k = counts.k();
    let stop = design.stop_rule();

    let outcomes: Vec<Result<(bool, u64)>> = (0..b)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(seed, i as u64);
            let mut redraws = 0;
            let replicate = loop {
                match simulate_counts(&sampler, k, stop, &mut rng, DEFAULT_ITERATION_CAP) {
                    Ok(c) => break c,
                    Err(Error::IterationCap { cap }) => {
                        redraws += 1;
                        if redraws >= 10 {
                            return Err(Error::IterationCap { cap });
                        }
                    }
                    Err(e) => return Err(e),
                }
            };
            let (lr, _) = statistic(&replicate, null)?;
            Ok((lr <= observed, redraws))
        })
        .collect();

    let mut hits = 0usize;
    let mut capped = 0u64;
    for outcome in outcomes {
        let (hit, redraws) = outcome?;
        hits += usize::from(hit);
        capped += redraws;
    }
    Ok(GofTestResult {
        statistic: observed.exp(),
        log_statistic: observed,
        p_value: (1 + hits) as f64 / (b + 1) as f64,
        b,
        seed,
        k,
        null: null.to_string(),
        fitted: matches!(null, NullSpec::Composite(_)).then_some(fitted),
        design,
        capped_redraws: capped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::{extract_delta_records, IntSequence};

    fn counts(values: &[u64], k: u32) -> CountTable {
        let seq = IntSequence::new(values.to_vec(), 0).unwrap();
        count_table(&extract_delta_records(&seq, k).unwrap())
    }

    #[test]
    fn zero_estimate_has_zero_lower() {
        let c = counts(&[3, 5, 6, 9], 1);
        let ci = confidence_interval(&c, 0, 0.05).unwrap();
        assert_eq!(ci.estimate, 0.0);
        assert_eq!(ci.lower, 0.0);
        assert!(ci.upper > 0.0 && ci.upper < 1.0);
    }

    #[test]
    fn interval_contains_estimate() {
        let c = counts(&[1, 1, 2, 1, 3, 2, 3, 5, 4, 5, 8], 2);
        for j in 0..=6 {
            let ci = confidence_interval(&c, j, 0.05).unwrap();
            assert!(ci.lower <= ci.estimate && ci.estimate <= ci.upper, "{ci:?}");
        }
    }

    #[test]
    fn outside_regime_is_an_error() {
        let c = counts(&[1, 4, 3], 2);
        assert!(matches!(
            confidence_interval(&c, 3, 0.05),
            Err(Error::OutsideExactRegime { max_k: 1, .. })
        ));
    }

    #[test]
    fn b_zero_is_rejected() {
        let seq = IntSequence::new(vec![1, 2, 0, 3], 0).unwrap();
        let s = extract_delta_records(&seq, 1).unwrap();
        let err = bootstrap_pvalue(&s, Design::RawLength(4), "geometric".parse().unwrap(), 0, 1);
        assert_eq!(err, Err(Error::InvalidParameter("B must be ≥ 1".into())));
    }

    #[test]
    fn null_spec_parsing() {
        assert_eq!(
            "poisson".parse::<NullSpec>().unwrap(),
            NullSpec::Composite(FamilyKind::Poisson)
        );
        assert!(matches!(
            "geometric:p=0.3".parse::<NullSpec>().unwrap(),
            NullSpec::Simple(_)
        ));
        assert!("cauchy".parse::<NullSpec>().is_err());
    }

    #[test]
    fn golden_section_finds_peak() {
        let x = golden_section(0.0, 10.0, 1e-9, |x| -(x - 3.3) * (x - 3.3));
        assert!((x - 3.3).abs() < 1e-8);
    }
}
