//! Detection-theoretic checks of designed quantizers.

pub mod monte_carlo;
pub mod stein;

pub use monte_carlo::{simulate_monte_carlo, MonteCarloOptions, MonteCarloSummary, TrialRecord};
pub use stein::{exact_np_miss, np_test, stein_curve, ExponentCurvePoint};
