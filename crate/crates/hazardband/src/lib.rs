//! Nonparametric inference on cumulative hazard functions in general
//! multistate event-history models.
//!
//! The crate estimates cumulative transition hazards by the Nelson-Aalen
//! estimator from left-truncated, right-censored multistate data and
//! quantifies simultaneous uncertainty two ways: classical time-transformed
//! Brownian-bridge quantiles, and a wild bootstrap that perturbs every
//! observed jump with an independent mean-0/variance-1 multiplier. On top of
//! those quantiles sit equal-precision, Hall-Wellner and linear confidence
//! bands, difference bands, simultaneous intervals, and tests for
//! equivalence, equality and two-sample hazard proportionality, plus Monte
//! Carlo study harnesses for coverage and test size.
//!
//! All randomness is seeded through [`SeedSpec`]; results are bit-identical
//! across thread counts. Monte Carlo inner loops run on rayon when the
//! default `parallel` feature is enabled and sequentially otherwise.

pub mod bands;
pub mod brownian;
pub mod curve;
pub mod error;
pub mod estimator;
pub mod event;
pub mod exec;
pub mod hypotest;
pub mod math;
pub mod seed;
pub mod simulate;
pub mod study;
pub mod wildboot;

pub use bands::{band, difference_band, sidak_region, simultaneous_intervals, BandKind, BandOptions, BandResult, PointInterval};
pub use brownian::{bridge_band_critical_value, bridge_quantile, phi_hat, BridgeQuantileSpec, BridgeWeight};
pub use curve::StepCurve;
pub use error::{HazardError, Result};
pub use estimator::{nelson_aalen, NelsonAalenFit, VarianceKind};
pub use event::{
    build_counting_paths, parse_event_csv, paths_from_json, paths_to_json, validate_records,
    CountingPath, SubjectRecord, TransitionKey, CENSORED_TOKEN,
};
pub use hypotest::{
    equivalence_test, inferiority_test, ks_equality_test, ks_equality_two_sample, prop_cvm_statistic,
    prop_hazards_test, prop_ks_statistic, superiority_test, MarginSpec, RhoKind, TestKind, TestResult,
};
pub use seed::SeedSpec;
pub use simulate::{
    censoring_cutoff, expected_event_counts_constant, expected_event_counts_model,
    simulate_competing_risks_constant, simulate_multistate, ConstantHazardScenario, Group,
    IncrementModel, ScenarioId,
};
pub use study::{
    run_coverage_study, run_size_study, CoverageStudyConfig, SizeStudyConfig, StudyCell, StudyReport,
};
pub use wildboot::{
    bootstrap_quantile, bootstrap_sup_draws, draw_replicate, replicate_from_multipliers,
    BootstrapReplicate, MultiplierLaw, SupSpec, SupWeight, Tail,
};
