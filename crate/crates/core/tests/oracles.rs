mod common;

use common::*;
use deltahazard::*;

#[test]
fn pmf_matches_enumeration() {
    let hv = HazardVector::new(vec![0.5, 0.5], 0).unwrap();
    let brute = brute_force_law(&hv, 0, 1, 60).unwrap();
    let law = EstimatorLaw::new(0.5, 0.75).unwrap();
    let q = RationalQ::new(1, 2).unwrap();
    assert!((brute.masses[&q] - law.pmf(q)).abs() < 1e-9);
    for (&q, &p) in &brute.masses {
        if q.denom() <= 20 {
            assert!((p - law.pmf(q)).abs() < 1e-9, "{q:?}");
        }
    }
}

#[test]
fn pmf_sums_to_one() {
    for (h, d) in [(0.3, 0.6), (0.5, 0.75), (0.2, 0.9)] {
        let law = EstimatorLaw::new(h, d).unwrap();
        let mut total = 0.0;
        for b in 1..=400u64 {
            for a in 0..b {
                if num_integer::gcd(a, b) == 1 && (a > 0 || b == 1) {
                    total += law.pmf(RationalQ::new(a, b).unwrap());
                }
            }
        }
        assert!(total > 0.999, "({h}, {d}): {total}");
        assert!(total < 1.0 + 1e-9);
    }
}

#[test]
fn cdf_matches_pmf_summation() {
    let law = EstimatorLaw::new(0.4, 0.8).unwrap();
    // Dyadic points, so that `a/b ≤ x` is decided exactly.
    for x in [0.125, 0.25, 0.5, 0.6875] {
        let mut below = 0.0;
        for b in 1..=2000u64 {
            let top = ((x * b as f64).floor() as u64).min(b - 1);
            for a in 0..=top {
                if num_integer::gcd(a, b) == 1 && (a > 0 || b == 1) {
                    below += law.pmf(RationalQ::new(a, b).unwrap());
                }
            }
        }
        let cdf = law.cdf(x).unwrap();
        assert!(below <= cdf + 1e-9);
        assert!(cdf - below < 1e-4, "x = {x}: {cdf} vs {below}");
    }
}

#[test]
fn dilog_against_long_series() {
    let x: f64 = 0.5;
    let series: f64 = (1..=1_000_000u32)
        .map(|n| x.powi(n as i32) / f64::from(n).powi(2))
        .sum();
    assert!((dilog(x).unwrap() - series).abs() < 1e-14);
    let reference = std::f64::consts::PI.powi(2) / 12.0 - 0.5 * 2f64.ln().powi(2);
    assert!((dilog(0.5).unwrap() - reference).abs() < 1e-14);
}

#[test]
fn law_depends_only_on_h_and_d() {
    // Two different hazard vectors with the same (h, d) at j = 0.
    let a = HazardVector::new(vec![0.3, 0.2, 0.5], 0).unwrap();
    let d = a.d(0, 2).unwrap();
    let rest = 1.0 - (d - 0.3) / 0.7;
    let b = HazardVector::new(vec![0.3, rest, 0.0], 0).unwrap();
    assert!((b.d(0, 2).unwrap() - d).abs() < 1e-14);
    let la = brute_force_law(&a, 0, 2, 40).unwrap();
    let lb = brute_force_law(&b, 0, 2, 40).unwrap();
    for (q, p) in &la.masses {
        if q.denom() <= 8 {
            let other = lb.masses.get(q).copied().unwrap_or(0.0);
            assert!((p - other).abs() < 1e-6, "{q:?}");
        }
    }
}

#[test]
fn geomstar_matches_exact_rationals() {
    let pis = [Q::new(1, 5), Q::new(1, 3), Q::new(1, 4)];
    let params = GeomStarParams::new(
        pis.iter()
            .map(|p| *p.numer() as f64 / *p.denom() as f64)
            .collect(),
    )
    .unwrap();
    for m in [[0, 0, 0], [1, 2, 0], [3, 1, 2], [0, 4, 1]] {
        let exact = geomstar_exact(&pis, &m);
        let want = *exact.numer() as f64 / *exact.denom() as f64;
        assert!((geomstar_pmf(&params, &m).unwrap() - want).abs() < 1e-15);
    }
}

#[test]
fn moments_match_integrated_cdf() {
    for (h, d) in [(0.3, 0.6), (0.5, 0.75), (0.6, 1.0)] {
        let m = EstimatorLaw::new(h, d).unwrap().moments().unwrap();
        let (m1, m2) = integrated_moments(h, d);
        assert!((m.mean - m1).abs() < 1e-9, "({h}, {d})");
        assert!((m.variance - (m2 - m1 * m1)).abs() < 1e-9, "({h}, {d})");
    }
}

#[test]
fn count_statistics_match_indicator_sums() {
    let raw = [3u64, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8, 9, 7, 9];
    for k in 0..=3u32 {
        let seq = IntSequence::new(raw.to_vec(), 0).unwrap();
        let counts = count_table(&extract_delta_records(&seq, k).unwrap());
        let a = naive_a(&raw, u64::from(k));
        for m in 0..=9u64 {
            for l in 0..=k {
                assert_eq!(
                    counts.a(m, l),
                    a.get(&(m, u64::from(l))).copied().unwrap_or(0)
                );
                assert_eq!(counts.v(m, l), naive_v(&a, m, u64::from(l)));
                assert_eq!(counts.n_stat(m, l), naive_n(&a, m, u64::from(l)));
            }
        }
    }
}

#[test]
fn geometric_lr_has_closed_form() {
    let seq = deltahazard::datasets::xie_goh();
    for k in 1..=3 {
        let counts = count_table(&extract_delta_records(&seq, k).unwrap());
        for lik in [Likelihood::Complete, Likelihood::Incomplete] {
            let (ln, _) = lr_statistic_composite(&counts, FamilyKind::Geometric, lik).unwrap();
            let want = geometric_lr_closed_form(&counts.columns(lik));
            assert!(
                (ln.exp() - want).abs() < 1e-10 * want.max(1e-300),
                "k = {k}"
            );
        }
    }
}
