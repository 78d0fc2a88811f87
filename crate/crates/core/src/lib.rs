//! Nonparametric inference on discrete hazard rates from δ-records.
//!
//! Values are handled on an internal scale starting at 0; samples and
//! sequences carry their support offset and add it back when serialized.

pub mod datasets;
pub mod error;
pub mod exact;
pub mod hazard;
pub mod inference;
pub mod npmle;
pub mod records;
pub mod sim;

pub use error::{Error, Result};
pub use exact::{dilog, geomstar_pmf, EstimatorLaw, GeomStarParams, Moments, RationalQ};
pub use hazard::{
    log_likelihood, log_likelihood_product, max_log_likelihood, ConditionalQuantities,
    HazardVector, Likelihood, ParametricFamily,
};
pub use inference::{
    bootstrap_pvalue, bootstrap_pvalue_counts, confidence_interval, exact_interval,
    lr_statistic_composite, lr_statistic_simple, ConfidenceInterval, Design, FamilyKind,
    GofTestResult, NullSpec,
};
pub use npmle::{
    geometric_mle, isotonic_max_min, npmle, npmle_incomplete, npmle_isotonic, npmle_plain,
    pool_adjacent_violators, reduce_k, Direction, EstimateEntry, GeometricFit, HazardEstimate,
    Regime, Variant,
};
pub use records::{
    count_table, extract_delta_records, stopped_view, CountTable, DeltaRecordBuilder,
    DeltaRecordSample, IntSequence, Observation, StoppedView,
};
pub use sim::{
    brute_force_law, replicate_rng, simulate, simulate_counts, simulate_one, BruteForceLaw,
    Sampler, SimSpec, StopRule,
};
