//! Exact Gaussian dynamics of a mechanical resonator coupled to a cavity
//! through a time-dependent coupling `g(t)`, each mode damped by its own
//! Drude-regularised Ohmic bath, plus optimal control of `g(t)`.
//!
//! Units: `ħ = m = ω_m = 1`, so the mechanical period is `τ_m = 2π`.
//! The numerical core is generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the control and scenario layers work in `f64`.

pub mod bath;
pub mod config;
pub mod control;
pub mod error;
pub mod io;
pub mod linalg;
pub mod propagator;
pub mod quadrature;
pub mod scalar;
pub mod scenario;

pub use error::{Error, Result};

pub type Bath = bath::DrudeBath<f64>;
pub type Mode = bath::ModeParams<f64>;
pub type Grid = config::TimeGrid<f64>;
pub type Config = config::SystemConfig<f64>;
pub type Covariance = propagator::CovarianceState<f64>;
pub type Fundamental = propagator::FundamentalTable<f64>;
pub type Engine = propagator::Propagator<f64>;
pub type Matrix = linalg::Mat6<f64>;
