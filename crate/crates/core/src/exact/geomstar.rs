//! The multidimensional geometric law: counts of failure types `1..=n`
//! (probabilities `π_i`) seen before the first success (probability `ρ`).

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GeomStarParams {
    pis: Vec<f64>,
    rho: f64,
}

impl GeomStarParams {
    pub fn new(pis: Vec<f64>) -> Result<Self> {
        if pis.iter().any(|p| !(0.0..1.0).contains(p)) {
            return Err(Error::InvalidParameter("each π must lie in [0, 1)".into()));
        }
        let total: f64 = pis.iter().sum();
        if total >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "Σπ = {total} must be below 1"
            )));
        }
        Ok(Self {
            pis,
            rho: 1.0 - total,
        })
    }

    pub fn pis(&self) -> &[f64] {
        &self.pis
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

/// `ρ Π π_i^{m_i} · (Σm)! / Π m_i!`.
pub fn geomstar_pmf(params: &GeomStarParams, m: &[u64]) -> Result<f64> {
    if m.len() != params.pis.len() {
        return Err(Error::InvalidParameter(format!(
            "expected {} counts, got {}",
            params.pis.len(),
            m.len()
        )));
    }
    let mut ln = params.rho.ln();
    let mut total = 0u64;
    for (&mi, &p) in m.iter().zip(&params.pis) {
        if mi == 0 {
            continue;
        }
        if p == 0.0 {
            return Ok(0.0);
        }
        ln += mi as f64 * p.ln() - ln_gamma(mi as f64 + 1.0);
        total += mi;
    }
    ln += ln_gamma(total as f64 + 1.0);
    Ok(ln.exp())
}
