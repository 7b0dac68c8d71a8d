//! Bachelier price dynamics, drift verification and quantized at-the-money
//! interest rates.
//!
//! The numeric core is generic over [`Scalar`] (`f32`, `f64`). `f64`
//! aliases for the main types are exported at the crate root.

// `!(x >= 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cli;
pub mod error;
pub mod format;
pub mod model;
pub mod ode;
pub mod payoff;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod spectrum;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use model::{
    exact_marginal, first_hitting_time, hitting_frequency, hitting_probability, simulate_paths,
    validate_params,
};
pub use ode::{
    characteristic_roots_full, characteristic_roots_hedged, delta_gamma, general_solution,
    residual, sine_solution, Evaluate, OdeForm, RootCase,
};
pub use payoff::{call_payoff, discounted_value, moneyness, put_payoff, DiscountSign, OptionKind};
pub use spectrum::{
    boundary_residual, mode_index, normalization_constant, payoff_surface, quantized_rate,
    rate_spectrum,
};
pub use verify::{analytic_drift, classify, drift_estimate, integrability_check, Classification};

pub type ModelParams = model::ModelParams<f64>;
pub type TimeGrid = model::TimeGrid<f64>;
pub type PathSet = model::PathSet<f64>;
pub type GaussianLaw = model::GaussianLaw<f64>;
pub type HittingTime = model::HittingTime<f64>;
pub type PayoffSpec = payoff::PayoffSpec<f64>;
pub type Moneyness = payoff::Moneyness<f64>;
pub type OdeProblem = ode::OdeProblem<f64>;
pub type CharacteristicRoots = ode::CharacteristicRoots<f64>;
pub type SolutionEvaluator = ode::SolutionEvaluator<f64>;
pub type DeltaGamma = ode::DeltaGamma<f64>;
pub type ModeSpec = spectrum::ModeSpec<f64>;
pub type RateSpectrum = spectrum::RateSpectrum<f64>;
pub type NormalizationResult = spectrum::NormalizationResult<f64>;
pub type PayoffSurface = spectrum::PayoffSurface<f64>;
pub type DriftReport = verify::DriftReport<f64>;
pub type MartingaleVerdict = verify::MartingaleVerdict<f64>;

pub type ModelParamsF32 = model::ModelParams<f32>;
pub type PathSetF32 = model::PathSet<f32>;
pub type ModeSpecF32 = spectrum::ModeSpec<f32>;
pub type SolutionEvaluatorF32 = ode::SolutionEvaluator<f32>;
