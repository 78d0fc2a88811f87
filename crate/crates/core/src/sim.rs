//! Seeded simulation of δ-record samples and a brute-force law oracle.
//!
//! Every replicate draws from its own ChaCha8 stream: the generator is
//! seeded with the run seed and the stream id is the replicate index, so
//! results do not depend on how replicates are scheduled across threads.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{geomstar_pmf, GeomStarParams, RationalQ};
use crate::hazard::{HazardVector, ParametricFamily};
use crate::records::{count_table, CountTable, DeltaRecordBuilder, DeltaRecordSample, Observation};

pub const DEFAULT_ITERATION_CAP: u64 = 10_000_000;

/// The generator for replicate `index` of a run seeded with `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// When a simulated sequence stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "rule", content = "value")]
pub enum StopRule {
    /// A raw sequence of this many observations.
    FixedLength(u64),
    /// Stop when record `n+1` arrives and discard it; the last kept record
    /// has all its near-records.
    NRecords(usize),
    /// Stop at the first observation above the threshold, which becomes the
    /// last record.
    ExceedThreshold(u64),
}

impl FromStr for StopRule {
    type Err = Error;

    /// `length:87`, `nrecords:3`, `threshold:9`.
    fn from_str(s: &str) -> Result<Self> {
        let (rule, value) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected rule:value, got {s:?}")))?;
        let n: u64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad stop value {value:?}")))?;
        match rule.trim() {
            "length" if n >= 1 => Ok(Self::FixedLength(n)),
            "nrecords" if n >= 1 => Ok(Self::NRecords(n as usize)),
            "threshold" => Ok(Self::ExceedThreshold(n)),
            "length" | "nrecords" => Err(Error::Parse(format!("{rule} must be at least 1"))),
            other => Err(Error::Parse(format!("unknown stop rule {other:?}"))),
        }
    }
}

impl fmt::Display for StopRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FixedLength(n) => write!(f, "length:{n}"),
            Self::NRecords(n) => write!(f, "nrecords:{n}"),
            Self::ExceedThreshold(t) => write!(f, "threshold:{t}"),
        }
    }
}

/// Inverse-CDF sampler over a cached survival table.
#[derive(Debug, Clone)]
pub struct Sampler {
    family: ParametricFamily,
    survival: Vec<f64>,
}

impl Sampler {
    pub fn new(family: ParametricFamily) -> Self {
        let mut survival = Vec::new();
        let mut s = 1.0;
        let mut j = 0;
        while s > 1e-18 && survival.len() < 1_000_000 {
            s *= 1.0 - family.hazard(j);
            survival.push(s);
            j += 1;
        }
        Self { family, survival }
    }

    pub fn family(&self) -> ParametricFamily {
        self.family
    }

    /// `min{j : F̄(j) ≤ u}` for `u` uniform on `[0, 1)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let idx = self.survival.partition_point(|&s| s > u);
        if idx < self.survival.len() {
            return idx as u64;
        }
        let mut s = *self.survival.last().unwrap();
        let mut j = self.survival.len() as u64;
        loop {
            s *= 1.0 - self.family.hazard(j);
            if s <= u {
                return j;
            }
            j += 1;
        }
    }
}

impl Sampler {
    /// `P(X > j)`.
    fn tail(&self, j: u64) -> f64 {
        if let Some(&s) = self.survival.get(j as usize) {
            return s;
        }
        let mut s = *self.survival.last().unwrap();
        for i in self.survival.len() as u64..=j {
            s *= 1.0 - self.family.hazard(i);
        }
        s
    }

    /// `P(X = j)`.
    fn mass(&self, j: u64) -> f64 {
        let before = if j == 0 { 1.0 } else { self.tail(j - 1) };
        before * self.family.hazard(j)
    }

    /// A draw conditioned on exceeding `r`.
    fn sample_above<R: Rng + ?Sized>(&self, r: u64, rng: &mut R) -> u64 {
        let u = 1.0 - rng.random::<f64>();
        let target = u * self.tail(r);
        let idx = self.survival.partition_point(|&s| s > target);
        if idx < self.survival.len() {
            return (idx as u64).max(r + 1);
        }
        let mut j = (self.survival.len() as u64).max(r + 1);
        let mut s = self.tail(j);
        while s > target {
            j += 1;
            s *= 1.0 - self.family.hazard(j);
        }
        j
    }
}

/// Failures before the first success, by inversion.
fn geometric_failures<R: Rng + ?Sized>(success: f64, rng: &mut R) -> Result<u64> {
    if success >= 1.0 {
        return Ok(0);
    }
    let u = 1.0 - rng.random::<f64>();
    let x = (u.ln() / (-success).ln_1p()).floor();
    if success > 0.0 && x < 9.0e18 {
        Ok(x as u64)
    } else {
        Err(Error::Numerical(format!(
            "near-record count overflows at success probability {success:e}"
        )))
    }
}

/// Draws the count table of one sample without materializing the
/// observations.
///
/// While the current record is `r`, an observation either beats it, is a
/// near-record at lag `0..=k`, or is ignored. The near-records before the
/// next record are therefore geometric in number and multinomial over lags,
/// so each record costs `O(k)` draws however long it takes to arrive. This
/// matters for near-degenerate families, where a record can take millions
/// of observations. `cap` bounds the number of records generated.
///
/// A fixed-length design has no such shortcut and falls back to
/// [`simulate_one`].
pub fn simulate_counts<R: Rng + ?Sized>(
    sampler: &Sampler,
    k: u32,
    stop: StopRule,
    rng: &mut R,
    cap: u64,
) -> Result<CountTable> {
    let keep = match stop {
        StopRule::FixedLength(_) => {
            return Ok(count_table(&simulate_one(sampler, k, stop, rng, cap)?))
        }
        StopRule::NRecords(n) => n as u64,
        StopRule::ExceedThreshold(_) => u64::MAX,
    };
    let mut a: BTreeMap<(u64, u32), u64> = BTreeMap::new();
    let mut r = sampler.sample(rng);
    let mut records = 1u64;
    let mut weights = vec![0.0; k as usize + 1];
    loop {
        *a.entry((r, 0)).or_default() += 1;
        if let StopRule::ExceedThreshold(t) = stop {
            if r > t {
                return Ok(CountTable::from_counts(k, r, false, a));
            }
        }
        for (l, w) in weights.iter_mut().enumerate() {
            *w = if l as u64 <= r {
                sampler.mass(r - l as u64)
            } else {
                0.0
            };
        }
        let near: f64 = weights.iter().sum();
        let above = sampler.tail(r);
        let mut left = geometric_failures(above / (above + near), rng)?;
        let mut mass_left = near;
        for (l, &w) in weights.iter().enumerate() {
            if left == 0 {
                break;
            }
            let c = if l == k as usize || w >= mass_left {
                left
            } else {
                Binomial::new(left, (w / mass_left).clamp(0.0, 1.0))
                    .map_err(|e| Error::Numerical(e.to_string()))?
                    .sample(rng)
            };
            if c > 0 {
                *a.entry((r - l as u64, l as u32)).or_default() += c;
            }
            left -= c;
            mass_left -= w;
        }
        if records == keep {
            return Ok(CountTable::from_counts(k, r, true, a));
        }
        if records >= cap {
            return Err(Error::IterationCap { cap });
        }
        r = sampler.sample_above(r, rng);
        records += 1;
    }
}

/// Draws one δ-record sample from `sampler`.
pub fn simulate_one<R: Rng + ?Sized>(
    sampler: &Sampler,
    k: u32,
    stop: StopRule,
    rng: &mut R,
    cap: u64,
) -> Result<DeltaRecordSample> {
    let mut builder = DeltaRecordBuilder::new(k);
    let mut draws = 0u64;
    let mut draw = |rng: &mut R| {
        draws += 1;
        if draws > cap {
            Err(Error::IterationCap { cap })
        } else {
            Ok(sampler.sample(rng))
        }
    };
    match stop {
        StopRule::FixedLength(n) => {
            for _ in 0..n {
                builder.push(draw(rng)?);
            }
            builder.finish(0, false)
        }
        StopRule::NRecords(n) => loop {
            if builder.push(draw(rng)?) == Observation::Record && builder.record_count() > n {
                builder.pop_record();
                return builder.finish(0, true);
            }
        },
        StopRule::ExceedThreshold(t) => loop {
            let x = draw(rng)?;
            builder.push(x);
            if x > t {
                return builder.finish(0, false);
            }
        },
    }
}

/// Raw observations, for checks that need the full sequence.
pub fn simulate_sequence<R: Rng + ?Sized>(sampler: &Sampler, len: usize, rng: &mut R) -> Vec<u64> {
    (0..len).map(|_| sampler.sample(rng)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SimSpec {
    pub family: ParametricFamily,
    pub k: u32,
    pub stop: StopRule,
    pub seed: u64,
    pub replicates: usize,
    #[serde(default = "default_cap")]
    pub iteration_cap: u64,
}

fn default_cap() -> u64 {
    DEFAULT_ITERATION_CAP
}

impl SimSpec {
    pub fn new(
        family: ParametricFamily,
        k: u32,
        stop: StopRule,
        seed: u64,
        replicates: usize,
    ) -> Self {
        Self {
            family,
            k,
            stop,
            seed,
            replicates,
            iteration_cap: DEFAULT_ITERATION_CAP,
        }
    }
}

/// Replicates in index order; a replicate that hits the iteration cap is an
/// `Err` in its slot.
pub fn simulate(spec: &SimSpec) -> Result<Vec<Result<DeltaRecordSample>>> {
    if spec.replicates == 0 {
        return Err(Error::InvalidParameter(
            "replicates must be at least 1".into(),
        ));
    }
    let sampler = Sampler::new(spec.family);
    Ok((0..spec.replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(spec.seed, i as u64);
            simulate_one(&sampler, spec.k, spec.stop, &mut rng, spec.iteration_cap)
        })
        .collect())
}

/// Probability mass of `ĥ_{j,k}` gathered by enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceLaw {
    pub masses: BTreeMap<RationalQ, f64>,
    pub captured: f64,
}

/// Enumerates `(V_j^k, V_{j+1}^{k−1}, ..., V_{j+k}^0)` with component sum at
/// most `max_total` under its multidimensional geometric law and accumulates
/// the mass of `ĥ = V_j^k / (1 + ΣV)`.
pub fn brute_force_law(hv: &HazardVector, j: u64, k: u32, max_total: u64) -> Result<BruteForceLaw> {
    let cq = hv.conditional_quantities(j, k)?;
    let params = GeomStarParams::new(cq.hazards)?;
    let mut out = BruteForceLaw {
        masses: BTreeMap::new(),
        captured: 0.0,
    };
    let mut z = vec![0u64; k as usize + 1];
    enumerate(&params, &mut z, 0, max_total, &mut out)?;
    Ok(out)
}

fn enumerate(
    params: &GeomStarParams,
    z: &mut [u64],
    pos: usize,
    budget: u64,
    out: &mut BruteForceLaw,
) -> Result<()> {
    if pos == z.len() {
        let p = geomstar_pmf(params, z)?;
        let total: u64 = z.iter().sum();
        let q = RationalQ::new(z[0], total + 1)?;
        *out.masses.entry(q).or_default() += p;
        out.captured += p;
        return Ok(());
    }
    for c in 0..=budget {
        z[pos] = c;
        enumerate(params, z, pos + 1, budget - c, out)?;
    }
    z[pos] = 0;
    Ok(())
}
