//! Estimation for a two-component mixture of linear regressions in which one
//! component is fully known.
//!
//! The observable pairs (X, Ỹ) follow, with probability 1 − π₀, a completely
//! specified linear regression with known error law, and with probability π₀
//! an unknown regression Ỹ = α̃ + β̃X + ε.  Subtracting the known line reduces
//! the model to a canonical form in which the known component is pure noise;
//! everything in this crate works on that canonical scale.
//!
//! What the crate estimates:
//! * the Euclidean parameters (α, β, π) by a method-of-moments map with a
//!   joint sandwich covariance ([`euclidean`]);
//! * a closed-form family of nine auxiliary estimators useful for
//!   cross-checking ([`euclidean::lambda_param_family`]);
//! * the unknown error distribution function and density by plug-in
//!   inversion of the mixture structure ([`functional`], [`density`]);
//! * uniform confidence bands for the distribution function by a multiplier
//!   bootstrap ([`bootstrap`]);
//! * finite-sample behaviour of all of the above through a deterministic
//!   Monte Carlo harness ([`mc`]).
//!
//! Start with the `examples/` directory — each example is a runnable tour of
//! one capability — or with the thin `semimix` binary for file-based use.

pub mod bootstrap;
pub mod cli;
pub mod density;
pub mod error;
pub mod euclidean;
pub mod functional;
pub mod io;
pub mod mc;
pub mod model;
pub mod moments;
pub mod rng;
pub mod simulate;

pub use bootstrap::{confidence_band, BandResult, BootstrapConfig};
pub use error::{Error, Result};
pub use euclidean::{fit_model, EuclideanFit, ModelFit};
pub use functional::{estimate_curves, CurveBundle, EvaluationGrid, FunctionalFit};
pub use mc::{run_bias_study, run_coverage_study, run_se_study, McConfig, McReport};
pub use model::{Dataset, ErrorDistribution, EuclideanParams, KnownComponent, Observation};
pub use moments::{accumulate_moments, MomentSummary};
pub use simulate::{builtin_scenario, simulate, ScenarioConfig, SimulatedData};
