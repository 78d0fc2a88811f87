//! Independent reference computations and published values shared by the
//! integration tests. Nothing here calls into the library's algorithms.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_rational::Ratio;

/// Table 3: δ-records of the inspection data in observation order, k = 1..3.
pub const XIE_GOH_DELTA_RECORDS: [&[u64]; 3] = [
    &[1, 5, 4, 6, 9, 10],
    &[1, 5, 3, 4, 3, 3, 3, 3, 6, 4, 9, 10, 8],
    &[1, 5, 3, 2, 4, 3, 2, 3, 3, 3, 6, 4, 9, 6, 10, 7, 8],
];

/// Table 8: δ-records of the earthquake data, k = 1..4.
pub const EARTHQUAKE_DELTA_RECORDS: [&[u64]; 4] = [
    &[7, 6, 6, 8, 8, 7, 7, 10],
    &[7, 6, 6, 8, 6, 6, 8, 6, 6, 7, 7, 6, 10, 8, 8],
    &[
        7, 6, 4, 6, 8, 6, 5, 6, 5, 8, 6, 5, 5, 5, 6, 7, 7, 6, 5, 5, 5, 10, 8, 8, 7, 7,
    ],
    &[
        7, 3, 3, 6, 4, 6, 8, 6, 5, 6, 4, 5, 4, 8, 4, 6, 4, 5, 4, 5, 5, 6, 4, 4, 4, 7, 7, 6, 5, 5,
        5, 10, 8, 6, 6, 6, 8, 7, 7, 6, 6,
    ],
];

/// Table 4: estimates for j = 1..10 (original scale), k = 1..3.
pub const TABLE4: [[&str; 10]; 3] = [
    [
        "0.500", "0.000", "0.000", "0.333", "0.333", "0.500", "0.000", "0.000", "0.333", "1",
    ],
    [
        "0.500", "0.000", "0.625", "0.400", "0.333", "0.500", "0.000", "0.250", "0.500", "1",
    ],
    [
        "0.500", "0.200", "0.500", "0.400", "0.333", "0.500", "0.200", "0.333", "0.500", "1",
    ],
];

/// Table 9: increasing estimates for j = 0..10, k = 1..4.
pub const TABLE9: [[&str; 11]; 4] = [
    [
        "0.000", "0.000", "0.000", "0.000", "0.000", "0.000", "0.500", "0.500", "0.600", "0.600",
        "1",
    ],
    [
        "0.000", "0.000", "0.000", "0.000", "0.000", "0.000", "0.538", "0.538", "0.714", "0.714",
        "1",
    ],
    [
        "0.000", "0.000", "0.000", "0.000", "0.200", "0.381", "0.538", "0.538", "0.714", "0.714",
        "1",
    ],
    [
        "0.000", "0.000", "0.000", "0.286", "0.300", "0.381", "0.545", "0.545", "0.714", "0.714",
        "1",
    ],
];

/// Table 9, last row: Poisson(4.108) hazards for j = 0..10.
pub const POISSON_4108_HAZARDS: [f64; 11] = [
    0.016, 0.069, 0.151, 0.244, 0.332, 0.409, 0.473, 0.527, 0.572, 0.610, 0.642,
];

/// Table 5 and Table 7 bootstrap p-values.
pub const TABLE5: [f64; 3] = [0.961, 0.615, 0.918];
pub const TABLE7: [f64; 4] = [0.906, 0.361, 0.812, 0.888];

/// Formats like the published tables: three decimals, but a bare "1".
pub fn table_format(x: f64) -> String {
    if x == 1.0 {
        "1".to_string()
    } else {
        format!("{x:.3}")
    }
}

/// δ-records straight from the definition: each observation is compared
/// with the maximum of everything before it. Returns (index, value, is_record).
pub fn naive_delta_records(xs: &[u64], k: u64) -> Vec<(usize, u64, bool)> {
    let mut out = vec![(0, xs[0], true)];
    for i in 1..xs.len() {
        let max = *xs[..i].iter().max().unwrap();
        if xs[i] > max {
            out.push((i, xs[i], true));
        } else if xs[i] + k >= max {
            out.push((i, xs[i], false));
        }
    }
    out
}

/// a(m, ℓ) from the indicator sums over the raw sequence.
pub fn naive_a(xs: &[u64], k: u64) -> BTreeMap<(u64, u64), u64> {
    let mut a = BTreeMap::new();
    for i in 0..xs.len() {
        let prev_max = xs[..i].iter().max().copied();
        let x = xs[i];
        let current = prev_max.map_or(x, |m| m.max(x));
        // weak record: X_i ≥ M_{i-1}; otherwise a near-record at distance ℓ
        if prev_max.is_none_or(|m| x >= m) {
            *a.entry((x, 0)).or_insert(0) += 1;
        } else if current - x <= k {
            *a.entry((x, current - x)).or_insert(0) += 1;
        }
    }
    a
}

pub fn naive_v(a: &BTreeMap<(u64, u64), u64>, m: u64, l: u64) -> u64 {
    (0..=l).map(|i| a.get(&(m, i)).copied().unwrap_or(0)).sum()
}

pub fn naive_n(a: &BTreeMap<(u64, u64), u64>, m: u64, l: u64) -> u64 {
    1 + (0..=l).map(|i| naive_v(a, m + i, l - i)).sum::<u64>()
}

pub fn multinomial(ns: &[u64]) -> u128 {
    let mut total = 0u64;
    let mut out = 1u128;
    for &n in ns {
        for i in 1..=n {
            total += 1;
            out = out * u128::from(total) / u128::from(i);
        }
    }
    out
}

/// Both sides of the multinomial convolution identity for `ns` (last ≥ 1).
pub fn lemma3_sides(ns: &[u64]) -> (u128, u128) {
    let (head, last) = ns.split_at(ns.len() - 1);
    let k = head.len();
    let mut lhs = 0u128;
    let mut idx = vec![0u64; k];
    loop {
        let rest: Vec<u64> = head
            .iter()
            .zip(&idx)
            .map(|(n, i)| n - i)
            .chain(std::iter::once(last[0] - 1))
            .collect();
        lhs += multinomial(&idx) * multinomial(&rest);
        // odometer
        let mut p = 0;
        loop {
            if p == k {
                return (lhs, multinomial(ns));
            }
            if idx[p] < head[p] {
                idx[p] += 1;
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}

pub type Q = Ratio<i128>;

/// Exact multidimensional geometric pmf for rational parameters.
pub fn geomstar_exact(pis: &[Q], m: &[u64]) -> Q {
    let rho = Q::from_integer(1) - pis.iter().copied().sum::<Q>();
    let mut p = rho * Q::from_integer(multinomial(m) as i128);
    for (&pi, &mi) in pis.iter().zip(m) {
        p *= pi.pow(mi as i32);
    }
    p
}

/// P(V > ℓ) for V the number of failures (probability h) before the
/// (m+1)-th success, as suffix sums of the pmf evaluated in log space.
pub fn negbin_upper_tails(m: u64, h: f64) -> Vec<f64> {
    use statrs::function::gamma::ln_gamma;
    let mf = m as f64;
    let mode = (mf * h / (1.0 - h)).ceil() as usize;
    let mut pmf = Vec::new();
    let mut l = 0usize;
    loop {
        let lf = l as f64;
        let ln = ln_gamma(mf + lf + 1.0) - ln_gamma(lf + 1.0) - ln_gamma(mf + 1.0)
            + lf * h.ln()
            + (mf + 1.0) * (1.0 - h).ln();
        let p = ln.exp();
        if l > mode && p < 1e-20 {
            break;
        }
        pmf.push(p);
        l += 1;
    }
    let mut tails = vec![0.0; pmf.len()];
    let mut acc = 0.0;
    for i in (0..pmf.len()).rev() {
        tails[i] = acc;
        acc += pmf[i];
    }
    tails
}

/// `(∫(1−G), ∫2x(1−G))` over [0, 1), integrating the step function
/// `1 − G` exactly on each interval where it is constant.
pub fn integrated_moments(h: f64, d: f64) -> (f64, f64) {
    let r = (1.0 - d) / (1.0 - h);
    let mut weight = (d - h) / (1.0 - h);
    let mut tail = 1.0;
    let (mut m1, mut m2) = (0.0, 0.0);
    let mut m = 0u64;
    while tail > 1e-16 {
        let mut e1 = 0.0;
        let mut e2 = 0.0;
        let tails = negbin_upper_tails(m, h);
        for (l, &t) in tails.iter().enumerate() {
            let lo = l as f64 / (l as f64 + m as f64 + 1.0);
            let hi = (l as f64 + 1.0) / (l as f64 + m as f64 + 2.0);
            e1 += t * (hi - lo);
            e2 += t * (hi * hi - lo * lo);
        }
        m1 += weight * e1;
        m2 += weight * e2;
        weight *= r;
        tail *= r;
        m += 1;
    }
    (m1, m2)
}

/// Kolmogorov distance between an empirical sample of rationals and a CDF
/// given through `(cdf(q−), cdf(q))` at the observed atoms.
pub fn ks_distance(samples: &[Ratio<u64>], tails: impl Fn(Ratio<u64>) -> (f64, f64)) -> f64 {
    let mut counts: BTreeMap<Ratio<u64>, usize> = BTreeMap::new();
    for &s in samples {
        *counts.entry(s).or_insert(0) += 1;
    }
    let n = samples.len() as f64;
    let mut below = 0usize;
    let mut dist: f64 = 0.0;
    for (&q, &c) in &counts {
        let (left, at) = tails(q);
        dist = dist.max((below as f64 / n - left).abs());
        below += c;
        dist = dist.max((below as f64 / n - at).abs());
    }
    dist
}

/// Chi-square goodness of fit of values on {1, 2, ...} to the geometric law
/// with success probability `p`, pooling the upper tail so that every cell
/// expects at least 5. Returns the p-value.
pub fn chi_square_geometric(values: &[u64], p: f64) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let n = values.len() as f64;
    let mut cells = Vec::new();
    let mut surv = 1.0;
    let mut x = 1u64;
    loop {
        let prob = surv * p;
        if n * (surv - prob) < 5.0 {
            cells.push((x, u64::MAX, surv));
            break;
        }
        cells.push((x, x, prob));
        surv -= prob;
        x += 1;
    }
    let mut stat = 0.0;
    for &(lo, hi, prob) in &cells {
        let obs = values.iter().filter(|&&v| v >= lo && v <= hi).count() as f64;
        let exp = n * prob;
        stat += (obs - exp).powi(2) / exp;
    }
    let df = (cells.len() - 1) as f64;
    1.0 - ChiSquared::new(df).unwrap().cdf(stat)
}

/// The closed-form geometric likelihood ratio from the pooled and per-value
/// (v, n) columns.
pub fn geometric_lr_closed_form(columns: &[(u64, u64)]) -> f64 {
    let xlnx = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
    let sv: f64 = columns.iter().map(|c| c.0 as f64).sum();
    let sn: f64 = columns.iter().map(|c| c.1 as f64).sum();
    let mut ln = xlnx(sv) + xlnx(sn - sv) - xlnx(sn);
    for &(v, n) in columns {
        let (v, n) = (v as f64, n as f64);
        ln += xlnx(n) - xlnx(v) - xlnx(n - v);
    }
    ln.exp()
}

pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Left side of the first series identity, truncated.
pub fn lemma6a_series(m: u64, x: f64, terms: u64) -> f64 {
    let mut coef = 1.0; // C(m+ℓ, ℓ) x^ℓ
    let mut sum = 0.0;
    for l in 0..terms {
        sum += coef / (l + m + 1) as f64;
        coef *= x * (m + l + 1) as f64 / (l + 1) as f64;
    }
    sum
}

pub fn lemma6b_series(m: u64, x: f64, terms: u64) -> f64 {
    let mut coef = 1.0;
    let mut sum = 0.0;
    for l in 0..terms {
        let lf = l as f64;
        sum += coef * lf * lf / ((lf + m as f64 + 1.0).powi(2));
        coef *= x * (m + l + 1) as f64 / (l + 1) as f64;
    }
    sum
}

pub fn lemma6a_integral(m: u64, x: f64) -> f64 {
    let mi = m as i32;
    let f = |u: f64| u.powi(mi) / (1.0 - u).powi(mi + 1);
    quadrature::double_exponential::integrate(f, 0.0, x, 1e-14).integral / x.powi(mi + 1)
}

pub fn lemma6b_integral(m: u64, x: f64) -> f64 {
    let mi = m as i32;
    let mf = m as f64;
    let lx = x.ln();
    let f1 = |u: f64| u.powi(mi + 1) * (lx - u.ln()) / (1.0 - u).powi(mi + 3);
    let f2 = |u: f64| u.powi(mi + 2) * (lx - u.ln()) / (1.0 - u).powi(mi + 3);
    let i1 = quadrature::double_exponential::integrate(f1, 0.0, x, 1e-14).integral;
    let i2 = quadrature::double_exponential::integrate(f2, 0.0, x, 1e-14).integral;
    ((mf + 1.0) * i1 + (mf + 1.0).powi(2) * i2) / x.powi(mi + 1)
}
