//! Parameterised couplings, objectives and their minimisation.

pub mod maintenance;
pub mod objective;
pub mod optimizer;
pub mod waveform;

pub use maintenance::{optimize_maintenance, reset_config, window_spec, CarriedObjective};
pub use objective::{evaluate_objective, fd_step, gradient_fd, Cost, Objective, ObjectiveSpec};
pub use optimizer::{initial_waveforms, optimize, optimize_with, template_for, OptimizationResult, OptimizeOptions, StartReport};
pub use waveform::{compose_coupling, Basis, CompositeCoupling, Waveform};
