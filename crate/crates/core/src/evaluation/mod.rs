//! Orderings are judged by cost-cognizant APFD (APFD_C): every failing test
//! is one fault, and a fault found after a larger share of the total test
//! time scores lower.
//!
//! [`run_pipeline_eval`] replays a history: for each of the latest failed
//! builds it trains on all earlier failed builds and scores the ranking.
//! [`decay_experiment`] keeps each model and its preprocessed snapshot fixed
//! and tests them on later failed builds.

mod apfdc;
mod decay;
mod outliers;
mod pipeline;
mod timing;

pub use apfdc::{apfdc, apfdc_values, optimal_ordering};
pub use decay::{least_squares_slope, DecayCurve, DecayPair, DecayPoint};
pub use outliers::{failure_counts, remove_frequent_failers, three_sigma_threshold};
pub use pipeline::{
    decay_experiment, expected_random_apfdc, measure_builds, run_pipeline_eval, train_until, BuildResult, EvalInputs, EvalOptions,
    EvaluationReport, Strategy, StrategySummary,
};
pub use timing::{GroupTiming, PrepCost, TimingReport};
