use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `Σ_{n≥1} x^n / n²`, accurate for `|x| ≤ 1/2`.
fn series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut pow = x;
    for n in 1..200u32 {
        let term = pow / f64::from(n * n);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        pow *= x;
    }
    sum
}

/// The dilogarithm `Li₂(x)` on `[−1, 1]`.
pub fn dilog(x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!(
            "dilog argument {x} outside [-1, 1]"
        )));
    }
    Ok(if x == 1.0 {
        PI * PI / 6.0
    } else if x > 0.5 {
        // Euler reflection
        PI * PI / 6.0 - x.ln() * (-x).ln_1p() - series(1.0 - x)
    } else if x < -0.5 {
        // Landen: x/(x−1) lands in [1/3, 1/2)
        let l = (-x).ln_1p();
        -series(x / (x - 1.0)) - 0.5 * l * l
    } else {
        series(x)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_points() {
        assert_eq!(dilog(0.0).unwrap(), 0.0);
        assert!((dilog(1.0).unwrap() - PI * PI / 6.0).abs() < 1e-15);
        assert!((dilog(-1.0).unwrap() + PI * PI / 12.0).abs() < 1e-14);
        // Li₂(1/2) = π²/12 − ln²2 / 2
        let ln2 = 2f64.ln();
        assert!((dilog(0.5).unwrap() - (PI * PI / 12.0 - ln2 * ln2 / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn rejects_outside_unit_interval() {
        assert!(dilog(1.0001).is_err());
        assert!(dilog(-1.5).is_err());
    }

    #[test]
    fn continuous_across_branch_points() {
        for &b in &[0.5, -0.5] {
            let lo = dilog(b - 1e-12).unwrap();
            let hi = dilog(b + 1e-12).unwrap();
            assert!((lo - hi).abs() < 1e-11);
        }
    }
}
