//! Integer observation sequences, δ-record extraction and the per-value
//! count statistics consumed by every estimator.
//!
//! Values are stored internally shifted by the support offset, so index `0`
//! always denotes the smallest possible value. Serialized forms shift back.
//!
//! With `k = -δ - 1 ≥ 0`, an observation `X_i` (i ≥ 2) is a δ-record iff
//! `X_i ≥ M_{i-1} - k`, where `M_{i-1}` is the running maximum. It is a new
//! record iff `X_i > M_{i-1}`, otherwise a near-record attached to the
//! current record. The first observation is always a record.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hazard::Likelihood;

/// An i.i.d. sequence of nonnegative integers with a known support offset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntSequence {
    values: Vec<u64>,
    offset: u64,
}

impl IntSequence {
    /// Builds a sequence from values on the original scale.
    pub fn new(values: Vec<u64>, offset: u64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(&value) = values.iter().find(|&&v| v < offset) {
            return Err(Error::BelowOffset { value, offset });
        }
        Ok(Self { values, offset })
    }

    /// Parses whitespace- or comma-separated integers. Text after `#` on a
    /// line is ignored.
    pub fn parse(text: &str, offset: u64) -> Result<Self> {
        let mut values = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            for token in line.split(|c: char| c == ',' || c.is_whitespace()) {
                if token.is_empty() {
                    continue;
                }
                let value: i64 = token
                    .parse()
                    .map_err(|_| Error::Parse(format!("not an integer: {token:?}")))?;
                if value < 0 {
                    return Err(Error::Parse(format!("negative value {value}")));
                }
                values.push(value as u64);
            }
        }
        Self::new(values, offset)
    }

    /// Values on the original scale.
    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values shifted so that the smallest possible value is zero.
    pub fn internal(&self) -> impl Iterator<Item = u64> + '_ {
        self.values.iter().map(move |&v| v - self.offset)
    }
}

/// How an observation was classified by [`DeltaRecordBuilder::push`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observation {
    Record,
    NearRecord,
    Ignored,
}

/// Incremental δ-record extraction over a stream of (internal) values.
#[derive(Debug, Clone)]
pub struct DeltaRecordBuilder {
    k: u32,
    records: Vec<u64>,
    near_values: Vec<Vec<u64>>,
}

impl DeltaRecordBuilder {
    pub fn new(k: u32) -> Self {
        Self {
            k,
            records: Vec::new(),
            near_values: Vec::new(),
        }
    }

    pub fn push(&mut self, x: u64) -> Observation {
        match self.records.last() {
            Some(&max) if x <= max => {
                if x + u64::from(self.k) >= max {
                    self.near_values
                        .last_mut()
                        .expect("one block per record")
                        .push(x);
                    Observation::NearRecord
                } else {
                    Observation::Ignored
                }
            }
            _ => {
                self.records.push(x);
                self.near_values.push(Vec::new());
                Observation::Record
            }
        }
    }

    pub fn current_max(&self) -> Option<u64> {
        self.records.last().copied()
    }

    pub fn record_count(&self) -> usize {
        self.records.len()
    }

    /// Drops the most recent record and its block. Used by stopping rules
    /// that observe one record more than they keep.
    pub(crate) fn pop_record(&mut self) {
        self.records.pop();
        self.near_values.pop();
    }

    pub fn finish(self, offset: u64, last_record_complete: bool) -> Result<DeltaRecordSample> {
        DeltaRecordSample::new(
            self.k,
            self.records,
            self.near_values,
            offset,
            last_record_complete,
        )
    }
}

/// Extracts the δ-records (δ = −k−1) of a raw sequence.
///
/// The result is marked incomplete: nothing guarantees that all near-records
/// of the last record were observed.
pub fn extract_delta_records(seq: &IntSequence, k: u32) -> Result<DeltaRecordSample> {
    if seq.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut builder = DeltaRecordBuilder::new(k);
    for x in seq.internal() {
        builder.push(x);
    }
    builder.finish(seq.offset(), false)
}

/// A sample of records, their near-record counts and near-record values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "SampleWire", try_from = "SampleWire")]
pub struct DeltaRecordSample {
    k: u32,
    records: Vec<u64>,
    near_values: Vec<Vec<u64>>,
    offset: u64,
    last_record_complete: bool,
}

impl DeltaRecordSample {
    /// Builds a sample from internal (offset-shifted) values, checking the
    /// δ-record invariants.
    pub fn new(
        k: u32,
        records: Vec<u64>,
        near_values: Vec<Vec<u64>>,
        offset: u64,
        last_record_complete: bool,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyInput);
        }
        if records.len() != near_values.len() {
            return Err(Error::InvalidSample(format!(
                "{} records but {} near-record blocks",
                records.len(),
                near_values.len()
            )));
        }
        if records.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSample(
                "records must be strictly increasing".into(),
            ));
        }
        for (&r, block) in records.iter().zip(&near_values) {
            if let Some(&y) = block.iter().find(|&&y| y > r || y + u64::from(k) < r) {
                return Err(Error::InvalidSample(format!(
                    "near-record {y} outside [{}, {r}] for record {r}",
                    r.saturating_sub(u64::from(k)),
                )));
            }
        }
        Ok(Self {
            k,
            records,
            near_values,
            offset,
            last_record_complete,
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn delta(&self) -> i64 {
        -(i64::from(self.k) + 1)
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    /// Record values (internal scale).
    pub fn records(&self) -> &[u64] {
        &self.records
    }

    /// Near-record values per record, in observation order (internal scale).
    pub fn near_values(&self) -> &[Vec<u64>] {
        &self.near_values
    }

    pub fn near_counts(&self) -> Vec<usize> {
        self.near_values.iter().map(Vec::len).collect()
    }

    pub fn record_count(&self) -> usize {
        self.records.len()
    }

    /// The largest record `r_n` (internal scale).
    pub fn max_value(&self) -> u64 {
        *self.records.last().expect("samples are nonempty")
    }

    /// Δ_k, the number of δ-records.
    pub fn total(&self) -> usize {
        self.records.len() + self.near_values.iter().map(Vec::len).sum::<usize>()
    }

    pub fn last_record_complete(&self) -> bool {
        self.last_record_complete
    }

    pub fn with_last_record_complete(mut self, complete: bool) -> Self {
        self.last_record_complete = complete;
        self
    }

    /// All δ-record values in observation order (internal scale).
    pub fn flattened(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.total());
        for (&r, block) in self.records.iter().zip(&self.near_values) {
            out.push(r);
            out.extend_from_slice(block);
        }
        out
    }

    /// All δ-record values in observation order on the original scale.
    pub fn flattened_original(&self) -> Vec<u64> {
        self.flattened()
            .into_iter()
            .map(|v| v + self.offset)
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct SampleWire {
    k: u32,
    delta: i64,
    #[serde(default)]
    offset: u64,
    records: Vec<u64>,
    near_counts: Vec<usize>,
    near_values: Vec<Vec<u64>>,
    #[serde(default)]
    last_record_complete: bool,
    #[serde(default)]
    totals: Option<Totals>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Totals {
    records: usize,
    near_records: usize,
    delta_records: usize,
}

impl From<DeltaRecordSample> for SampleWire {
    fn from(s: DeltaRecordSample) -> Self {
        let shift = |v: &u64| v + s.offset;
        Self {
            k: s.k,
            delta: s.delta(),
            offset: s.offset,
            records: s.records.iter().map(shift).collect(),
            near_counts: s.near_counts(),
            near_values: s
                .near_values
                .iter()
                .map(|b| b.iter().map(shift).collect())
                .collect(),
            last_record_complete: s.last_record_complete,
            totals: Some(Totals {
                records: s.record_count(),
                near_records: s.total() - s.record_count(),
                delta_records: s.total(),
            }),
        }
    }
}

impl TryFrom<SampleWire> for DeltaRecordSample {
    type Error = Error;

    fn try_from(w: SampleWire) -> Result<Self> {
        if w.delta != -(i64::from(w.k) + 1) {
            return Err(Error::InvalidSample(format!(
                "delta {} inconsistent with k {}",
                w.delta, w.k
            )));
        }
        if w.near_counts.len() != w.near_values.len()
            || w.near_counts
                .iter()
                .zip(&w.near_values)
                .any(|(&c, b)| c != b.len())
        {
            return Err(Error::InvalidSample(
                "nearCounts does not match nearValues".into(),
            ));
        }
        let unshift = |v: u64| {
            v.checked_sub(w.offset).ok_or(Error::BelowOffset {
                value: v,
                offset: w.offset,
            })
        };
        let records = w.records.into_iter().map(unshift).collect::<Result<_>>()?;
        let near_values = w
            .near_values
            .into_iter()
            .map(|b| b.into_iter().map(unshift).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        DeltaRecordSample::new(w.k, records, near_values, w.offset, w.last_record_complete)
    }
}

/// The a/v/n statistics of a δ-record sample.
///
/// * `a(m, 0)`: how often `m` was a weak record;
/// * `a(m, ℓ)`, ℓ ≥ 1: how often `m` equalled the current record minus ℓ;
/// * `v(m, ℓ) = Σ_{i≤ℓ} a(m, i)`;
/// * `n(m, ℓ) = 1 + Σ_{i≤ℓ} v(m+i, ℓ−i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    k: u32,
    max_value: u64,
    offset: u64,
    complete: bool,
    total: u64,
    a: BTreeMap<(u64, u32), u64>,
}

/// Computes the count statistics of a sample.
pub fn count_table(sample: &DeltaRecordSample) -> CountTable {
    let mut a: BTreeMap<(u64, u32), u64> = BTreeMap::new();
    for (&r, block) in sample.records().iter().zip(sample.near_values()) {
        *a.entry((r, 0)).or_default() += 1;
        for &y in block {
            *a.entry((y, (r - y) as u32)).or_default() += 1;
        }
    }
    CountTable {
        k: sample.k(),
        max_value: sample.max_value(),
        offset: sample.offset(),
        complete: sample.last_record_complete(),
        total: sample.total() as u64,
        a,
    }
}

impl CountTable {
    /// A table from `a(m, ℓ)` counts gathered without a sample.
    pub(crate) fn from_counts(
        k: u32,
        max_value: u64,
        complete: bool,
        a: BTreeMap<(u64, u32), u64>,
    ) -> Self {
        CountTable {
            k,
            max_value,
            offset: 0,
            complete,
            total: a.values().sum(),
            a,
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// `r_n` on the internal scale.
    pub fn max_value(&self) -> u64 {
        self.max_value
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    /// Whether the sample is known to hold every near-record of its last record.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// The likelihood that applies to the underlying sample.
    pub fn default_likelihood(&self) -> Likelihood {
        if self.complete {
            Likelihood::Complete
        } else {
            Likelihood::Incomplete
        }
    }

    /// `r_n − k`: values at or below it are uncensored.
    pub fn censor_boundary(&self) -> i64 {
        self.max_value as i64 - i64::from(self.k)
    }

    /// Δ_k.
    pub fn delta_total(&self) -> u64 {
        self.total
    }

    pub fn a(&self, m: u64, l: u32) -> u64 {
        self.a.get(&(m, l)).copied().unwrap_or(0)
    }

    pub fn v(&self, m: u64, l: u32) -> u64 {
        self.a.range((m, 0)..=(m, l)).map(|(_, &c)| c).sum()
    }

    pub fn n_stat(&self, m: u64, l: u32) -> u64 {
        1 + (0..=l)
            .map(|i| self.v(m + u64::from(i), l - i))
            .sum::<u64>()
    }

    /// Whether the `(1 − h_j)` factor of `j` carries the "+1" contributed by
    /// the survival term of the likelihood.
    ///
    /// Under the incomplete likelihood the values `r_n − k < j ≤ r_n` lose it.
    pub fn has_survival_term(&self, j: u64, likelihood: Likelihood) -> bool {
        match likelihood {
            Likelihood::Complete => true,
            Likelihood::Incomplete => (j as i64) <= self.censor_boundary(),
        }
    }

    /// Denominator of the hazard estimate at `j` under the given likelihood.
    pub fn denominator(&self, j: u64, likelihood: Likelihood) -> u64 {
        let n = self.n_stat(j, self.k);
        if self.has_survival_term(j, likelihood) {
            n
        } else {
            n - 1
        }
    }

    /// `(v(j,k), denominator(j))` for `j = 0..=r_n`.
    pub fn columns(&self, likelihood: Likelihood) -> Vec<(u64, u64)> {
        // One pass over the sparse table, then prefix sums per value.
        let len = self.max_value as usize + 1;
        let k = self.k as usize;
        let mut v = vec![vec![0u64; k + 1]; len + k + 1];
        for (&(m, l), &c) in &self.a {
            for entry in &mut v[m as usize][l as usize..] {
                *entry += c;
            }
        }
        (0..len)
            .map(|j| {
                let s: u64 = (0..=k).map(|i| v[j + i][k - i]).sum();
                let plus = u64::from(self.has_survival_term(j as u64, likelihood));
                (v[j][k], s + plus)
            })
            .collect()
    }

    /// Nonzero `a` entries as `((m, ℓ), count)`.
    pub fn entries(&self) -> impl Iterator<Item = ((u64, u32), u64)> + '_ {
        self.a.iter().map(|(&key, &c)| (key, c))
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CountRow {
    value: u64,
    a: Vec<u64>,
    v: Vec<u64>,
    n: Vec<u64>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CountTableWire {
    k: u32,
    delta: i64,
    offset: u64,
    max_value: u64,
    censor_boundary: i64,
    last_record_complete: bool,
    totals: CountTotals,
    rows: Vec<CountRow>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CountTotals {
    delta_records: u64,
}

impl Serialize for CountTable {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let rows = (0..=self.max_value)
            .map(|m| CountRow {
                value: m + self.offset,
                a: (0..=self.k).map(|l| self.a(m, l)).collect(),
                v: (0..=self.k).map(|l| self.v(m, l)).collect(),
                n: (0..=self.k).map(|l| self.n_stat(m, l)).collect(),
            })
            .collect();
        CountTableWire {
            k: self.k,
            delta: -(i64::from(self.k) + 1),
            offset: self.offset,
            max_value: self.max_value + self.offset,
            censor_boundary: self.censor_boundary() + self.offset as i64,
            last_record_complete: self.complete,
            totals: CountTotals {
                delta_records: self.total,
            },
            rows,
        }
        .serialize(serializer)
    }
}

/// Counts of a raw sequence stopped at the first observation above `j + k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StoppedView {
    pub threshold: u64,
    /// 1-based index of the first observation exceeding the threshold.
    pub stop_index: usize,
    pub hit_count_at_j: u64,
    pub at_least_j_count: u64,
}

/// Scans `seq` up to the first value exceeding `j + k` (internal scale) and
/// counts the observations equal to, and at least, `j`.
pub fn stopped_view(seq: &IntSequence, j: u64, k: u32) -> Result<StoppedView> {
    let threshold = j + u64::from(k);
    let mut hits = 0;
    let mut at_least = 0;
    for (i, x) in seq.internal().enumerate() {
        if x == j {
            hits += 1;
        }
        if x >= j {
            at_least += 1;
        }
        if x > threshold {
            return Ok(StoppedView {
                threshold,
                stop_index: i + 1,
                hit_count_at_j: hits,
                at_least_j_count: at_least,
            });
        }
    }
    Err(Error::ThresholdNeverExceeded {
        threshold: threshold + seq.offset(),
    })
}

impl fmt::Display for DeltaRecordSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let values: Vec<String> = self
            .flattened_original()
            .iter()
            .map(u64::to_string)
            .collect();
        write!(
            f,
            "k={} [{}] total={}",
            self.k,
            values.join(","),
            self.total()
        )
    }
}
