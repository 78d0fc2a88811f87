//! Nonparametric maximum likelihood estimates of the hazard rates.

use std::fmt::Write as _;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hazard::Likelihood;
use crate::records::{CountTable, DeltaRecordBuilder, DeltaRecordSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Plain,
    Incomplete,
    IsotonicIncreasing,
    IsotonicDecreasing,
}

/// Where `j` sits relative to the largest record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `j ≤ r_n − k`: the counts are those of the full sequence.
    Exact,
    /// `r_n − k < j < r_n`, or `j = r_n` under the complete likelihood.
    Censored,
    /// `j = r_n` under the incomplete likelihood, where the estimate is 1.
    Terminal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// One estimate `numerator / denominator` at internal value `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimateEntry {
    pub j: u64,
    pub numerator: u64,
    pub denominator: u64,
    pub regime: Regime,
}

impl EstimateEntry {
    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.numerator, self.denominator)
    }

    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

/// Hazard estimates for `j = 0..=r_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HazardEstimate {
    pub k: u32,
    pub offset: u64,
    pub variant: Variant,
    pub likelihood: Likelihood,
    pub entries: Vec<EstimateEntry>,
}

impl HazardEstimate {
    pub fn get(&self, j: u64) -> Option<&EstimateEntry> {
        self.entries.get(j as usize)
    }

    /// Estimate at internal value `j`; `None` beyond `r_n`.
    pub fn value(&self, j: u64) -> Option<f64> {
        self.get(j).map(EstimateEntry::value)
    }

    pub fn ratio(&self, j: u64) -> Option<Ratio<u64>> {
        self.get(j).map(EstimateEntry::ratio)
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(EstimateEntry::value).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,numerator,denominator,value,regime\n");
        for e in &self.entries {
            let regime = match e.regime {
                Regime::Exact => "exact",
                Regime::Censored => "censored",
                Regime::Terminal => "terminal",
            };
            let _ = writeln!(
                out,
                "{},{},{},{:.3},{}",
                e.j + self.offset,
                e.numerator,
                e.denominator,
                e.value(),
                regime
            );
        }
        out
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct EntryWire {
    j: u64,
    numerator: u64,
    denominator: u64,
    value: f64,
    regime: Regime,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct EstimateWire {
    k: u32,
    offset: u64,
    variant: Variant,
    likelihood: Likelihood,
    estimates: Vec<EntryWire>,
}

impl Serialize for HazardEstimate {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        EstimateWire {
            k: self.k,
            offset: self.offset,
            variant: self.variant,
            likelihood: self.likelihood,
            estimates: self
                .entries
                .iter()
                .map(|e| EntryWire {
                    j: e.j + self.offset,
                    numerator: e.numerator,
                    denominator: e.denominator,
                    value: e.value(),
                    regime: e.regime,
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

fn regime(counts: &CountTable, j: u64, likelihood: Likelihood) -> Regime {
    if (j as i64) <= counts.censor_boundary() {
        Regime::Exact
    } else if j == counts.max_value() && likelihood == Likelihood::Incomplete {
        Regime::Terminal
    } else {
        Regime::Censored
    }
}

fn from_columns(
    counts: &CountTable,
    likelihood: Likelihood,
    variant: Variant,
    columns: &[(u64, u64)],
) -> HazardEstimate {
    HazardEstimate {
        k: counts.k(),
        offset: counts.offset(),
        variant,
        likelihood,
        entries: columns
            .iter()
            .enumerate()
            .map(|(j, &(v, n))| EstimateEntry {
                j: j as u64,
                numerator: v,
                denominator: n,
                regime: regime(counts, j as u64, likelihood),
            })
            .collect(),
    }
}

/// `ĥ_{j,k} = V_j^k / N_j^k` under the complete likelihood.
pub fn npmle_plain(counts: &CountTable) -> HazardEstimate {
    let cols = counts.columns(Likelihood::Complete);
    from_columns(counts, Likelihood::Complete, Variant::Plain, &cols)
}

/// The estimator for samples that may miss near-records of the last record.
/// The denominators of `r_n − k < j ≤ r_n` lose their "+1", so `ĥ_{r_n} = 1`
/// whenever `k ≥ 1`.
pub fn npmle_incomplete(counts: &CountTable) -> HazardEstimate {
    let cols = counts.columns(Likelihood::Incomplete);
    from_columns(counts, Likelihood::Incomplete, Variant::Incomplete, &cols)
}

/// Estimator matching the sample's completeness flag.
pub fn npmle(counts: &CountTable) -> HazardEstimate {
    match counts.default_likelihood() {
        Likelihood::Complete => npmle_plain(counts),
        Likelihood::Incomplete => npmle_incomplete(counts),
    }
}

fn out_of_order(direction: Direction, left: Ratio<u64>, right: Ratio<u64>) -> bool {
    match direction {
        Direction::Increasing => left > right,
        Direction::Decreasing => left < right,
    }
}

/// Weighted isotonic fit of `v/n` by pool-adjacent-violators.
pub fn pool_adjacent_violators(columns: &[(u64, u64)], direction: Direction) -> Vec<(u64, u64)> {
    // (v, n, width)
    let mut blocks: Vec<(u64, u64, usize)> = Vec::with_capacity(columns.len());
    for &(v, n) in columns {
        blocks.push((v, n, 1));
        while blocks.len() > 1 {
            let (rv, rn, rw) = blocks[blocks.len() - 1];
            let (lv, ln, lw) = blocks[blocks.len() - 2];
            if !out_of_order(direction, Ratio::new(lv, ln), Ratio::new(rv, rn)) {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (lv + rv, ln + rn, lw + rw);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(v, n, w)| std::iter::repeat_n((v, n), w))
        .collect()
}

/// The same fit from the max-min (increasing) or min-max (decreasing)
/// formula over window ratios. Quadratic per value; meant for checking.
pub fn isotonic_max_min(columns: &[(u64, u64)], direction: Direction) -> Vec<Ratio<u64>> {
    let len = columns.len();
    let mut pv = vec![0u64; len + 1];
    let mut pn = vec![0u64; len + 1];
    for (i, &(v, n)) in columns.iter().enumerate() {
        pv[i + 1] = pv[i] + v;
        pn[i + 1] = pn[i] + n;
    }
    let window = |l: usize, m: usize| Ratio::new(pv[m + 1] - pv[l], pn[m + 1] - pn[l]);
    (0..len)
        .map(|j| {
            let inner = |l: usize| {
                let it = (j..len).map(|m| window(l, m));
                match direction {
                    Direction::Increasing => it.min(),
                    Direction::Decreasing => it.max(),
                }
                .unwrap()
            };
            let outer = (0..=j).map(inner);
            match direction {
                Direction::Increasing => outer.max(),
                Direction::Decreasing => outer.min(),
            }
            .unwrap()
        })
        .collect()
}

/// Monotone hazard estimate under the given likelihood.
pub fn npmle_isotonic(
    counts: &CountTable,
    direction: Direction,
    likelihood: Likelihood,
) -> HazardEstimate {
    let cols = pool_adjacent_violators(&counts.columns(likelihood), direction);
    let variant = match direction {
        Direction::Increasing => Variant::IsotonicIncreasing,
        Direction::Decreasing => Variant::IsotonicDecreasing,
    };
    from_columns(counts, likelihood, variant, &cols)
}

/// Pooled geometric estimate `Σ V / Σ N`; the numerator is Δ_k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GeometricFit {
    pub numerator: u64,
    pub denominator: u64,
    pub p: f64,
}

pub fn geometric_mle(counts: &CountTable, likelihood: Likelihood) -> GeometricFit {
    let (v, n) = counts
        .columns(likelihood)
        .iter()
        .fold((0, 0), |(sv, sn), &(v, n)| (sv + v, sn + n));
    GeometricFit {
        numerator: v,
        denominator: n,
        p: v as f64 / n as f64,
    }
}

/// Re-extracts the sample at a smaller `k` from its δ-record values.
pub fn reduce_k(sample: &DeltaRecordSample, k: u32) -> Result<DeltaRecordSample> {
    if k > sample.k() {
        return Err(Error::InvalidParameter(format!(
            "cannot raise k from {} to {k}",
            sample.k()
        )));
    }
    let mut builder = DeltaRecordBuilder::new(k);
    for x in sample.flattened() {
        builder.push(x);
    }
    builder.finish(sample.offset(), sample.last_record_complete())
}
