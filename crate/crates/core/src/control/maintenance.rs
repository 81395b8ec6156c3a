//! Second control phase: holding the phonon number after cooling.

use super::objective::{Cost, Objective, ObjectiveSpec};
use super::optimizer::{optimize_with, template_for, OptimizationResult, OptimizeOptions};
use super::waveform::{compose_coupling, Waveform};
use crate::config::{tau_m, SystemConfig};
use crate::error::{Error, Result};
use crate::propagator::{EvolutionState, Propagator};

/// Samples per mechanical period used for the window average.
pub const SAMPLES_PER_PERIOD: usize = 20;

/// Configuration of a thermal reset: mechanical mode at `n_start`, both
/// cutoffs at `markovian_cutoff`, bath temperatures unchanged, grid covering
/// `[0, window]`.
pub fn reset_config(
    config: &SystemConfig<f64>,
    n_start: f64,
    window: f64,
    markovian_cutoff: f64,
) -> Result<SystemConfig<f64>> {
    if !(n_start >= 0.0) || !n_start.is_finite() {
        return Err(Error::invalid("n_start", format!("must be >= 0, got {n_start}")));
    }
    let mut c = *config;
    c.n_t = n_start;
    c.mech_bath = c.mech_bath.with_cutoff(markovian_cutoff);
    c.opt_bath = c.opt_bath.with_cutoff(markovian_cutoff);
    c.validate()?;
    c.with_t_final(window)
}

/// Window-average objective over `[t_start, t_end]` sampled
/// [`SAMPLES_PER_PERIOD`] times per period (at least every step).
pub fn window_spec(config: &SystemConfig<f64>, t_start: f64, t_end: f64) -> ObjectiveSpec {
    let per_period = (tau_m::<f64>() / config.grid.dt).round() as usize;
    ObjectiveSpec::MaintenanceAverage {
        t_start,
        t_end,
        sample_stride: (per_period / SAMPLES_PER_PERIOD).max(1),
    }
}

/// Optimized maintenance waveform in local time `[0, window]`, starting from a
/// fresh thermal state at `n_start`. Shift by `t_cool` before composing.
pub fn optimize_maintenance(
    config: &SystemConfig<f64>,
    n_start: f64,
    window: f64,
    markovian_cutoff: f64,
    options: &OptimizeOptions,
) -> Result<(OptimizationResult, Objective)> {
    let cfg = reset_config(config, n_start, window, markovian_cutoff)?;
    let spec = window_spec(&cfg, 0.0, cfg.grid.t_final());
    let objective = Objective::from_config(&cfg, spec)?;
    let template = template_for(&spec, options)?;
    let result = optimize_with(&objective, &template, options)?;
    Ok((result, objective))
}

/// Maintenance objective that continues the exact cooling trajectory instead
/// of resetting: phase two starts from the full propagation state at
/// `t_cool`, and the candidate waveform is composed after the cooling one.
#[derive(Clone, Debug)]
pub struct CarriedObjective {
    pub prop: Propagator<f64>,
    pub cool: Waveform,
    pub t_cool: f64,
    start: EvolutionState<f64>,
    window: ObjectiveSpec,
}

impl CarriedObjective {
    /// `config` must cover `[0, t_cool + window]`.
    pub fn new(config: &SystemConfig<f64>, cool: &Waveform, t_cool: f64) -> Result<Self> {
        let prop = Propagator::new(*config)?;
        let j = config
            .grid
            .index_of(t_cool)
            .ok_or_else(|| Error::InvalidWindow(format!("t_cool = {t_cool} is not a grid point")))?;
        let mut start = prop.start();
        for _ in 0..j {
            prop.advance(&mut start, cool)?;
        }
        let window = window_spec(config, t_cool, config.grid.t_final());
        Ok(CarriedObjective {
            prop,
            cool: cool.clone(),
            t_cool,
            start,
            window,
        })
    }

    pub fn spec(&self) -> ObjectiveSpec {
        self.window
    }

    /// Window mean of `n_mech` under `cool` then `maintain`.
    pub fn average(&self, maintain: &Waveform) -> Result<f64> {
        let ObjectiveSpec::MaintenanceAverage { t_end, sample_stride, .. } = self.window else {
            unreachable!("carried objective always averages")
        };
        let coupling = compose_coupling(&self.cool, maintain, self.t_cool)?;
        let grid = self.prop.config.grid;
        let end = grid.index_of(t_end).expect("window end on grid");
        let first = self.start.step;
        let mut state = self.start.clone();
        let mut sum = 0.0;
        let mut count = 0;
        let mut sample = |state: &EvolutionState<f64>| -> Result<()> {
            let snap = crate::propagator::CovarianceState {
                sigma: self.prop.covariance(state),
                time: grid.time(state.step),
            };
            snap.check_admissible()?;
            sum += snap.phonon_number(crate::bath::ModeLabel::Mechanical, &self.prop.config);
            count += 1;
            Ok(())
        };
        sample(&state)?;
        while state.step < end {
            self.prop.advance(&mut state, &coupling)?;
            if (state.step - first) % sample_stride == 0 || state.step == end {
                sample(&state)?;
            }
        }
        Ok(sum / count as f64)
    }
}

impl Cost for CarriedObjective {
    fn value(&self, w: &Waveform) -> Result<f64> {
        w.check_feasible(&self.prop.config.grid)?;
        self.average(w)
    }
}
