//! Exact finite-sample distribution theory for the hazard estimator.

mod dilog;
mod geomstar;
mod law;

pub use dilog::dilog;
pub use geomstar::{geomstar_pmf, GeomStarParams};
pub use law::{EstimatorLaw, Moments, RationalQ, DEFAULT_TOLERANCE};
