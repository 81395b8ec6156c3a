//! Cooling and maintenance objectives and their finite-difference gradients.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::waveform::{Basis, Waveform};
use crate::bath::ModeLabel;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::propagator::{phonon_number_of, CovarianceState, Coupling, EvolutionState, Propagator};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveSpec {
    /// `n_mech(t_cool)`.
    Terminal { t_cool: f64 },
    /// Mean of `n_mech` sampled every `sample_stride` steps over `[t_start, t_end]`.
    MaintenanceAverage {
        t_start: f64,
        t_end: f64,
        sample_stride: usize,
    },
}

/// Partial evaluation that can be resumed.
#[derive(Clone, Debug)]
struct Progress {
    state: EvolutionState<f64>,
    sum: f64,
    count: usize,
}

/// An objective bound to a propagator with precomputed noise weights.
#[derive(Clone, Debug)]
pub struct Objective {
    pub prop: Propagator<f64>,
    pub spec: ObjectiveSpec,
    first_sample: usize,
    last_step: usize,
    stride: usize,
}

impl Objective {
    pub fn new(prop: Propagator<f64>, spec: ObjectiveSpec) -> Result<Self> {
        let grid = prop.config.grid;
        let on_grid = |t: f64, what: &str| {
            grid.index_of(t).ok_or_else(|| {
                Error::InvalidWindow(format!(
                    "{what} = {t} is not a grid point of the {}-step grid with dt = {}",
                    grid.n_steps, grid.dt
                ))
            })
        };
        let (first_sample, last_step, stride) = match spec {
            ObjectiveSpec::Terminal { t_cool } => {
                let j = on_grid(t_cool, "t_cool")?;
                if j == 0 {
                    return Err(Error::InvalidWindow("t_cool must be positive".into()));
                }
                (j, j, 1)
            }
            ObjectiveSpec::MaintenanceAverage {
                t_start,
                t_end,
                sample_stride,
            } => {
                let a = on_grid(t_start, "t_start")?;
                let b = on_grid(t_end, "t_end")?;
                if b <= a {
                    return Err(Error::InvalidWindow(format!("empty window [{t_start}, {t_end}]")));
                }
                if sample_stride == 0 {
                    return Err(Error::InvalidWindow("sample_stride must be positive".into()));
                }
                (a, b, sample_stride)
            }
        };
        Ok(Objective {
            prop,
            spec,
            first_sample,
            last_step,
            stride,
        })
    }

    pub fn from_config(config: &SystemConfig<f64>, spec: ObjectiveSpec) -> Result<Self> {
        Self::new(Propagator::new(*config)?, spec)
    }

    pub fn config(&self) -> &SystemConfig<f64> {
        &self.prop.config
    }

    /// Objective value of a feasible waveform.
    pub fn evaluate(&self, w: &Waveform) -> Result<f64> {
        w.check_feasible(&self.prop.config.grid)?;
        self.evaluate_coupling(w)
    }

    /// Objective value for an arbitrary coupling (no bound check).
    pub fn evaluate_coupling<C: Coupling<f64> + ?Sized>(&self, coupling: &C) -> Result<f64> {
        let (value, _) = self.run(coupling, self.start()?, &[])?;
        Ok(value)
    }

    fn start(&self) -> Result<Progress> {
        let mut p = Progress {
            state: self.prop.start(),
            sum: 0.0,
            count: 0,
        };
        if self.first_sample == 0 {
            self.sample(&mut p)?;
        }
        Ok(p)
    }

    fn is_sample(&self, j: usize) -> bool {
        j >= self.first_sample && j <= self.last_step && ((j - self.first_sample) % self.stride == 0 || j == self.last_step)
    }

    fn sample(&self, p: &mut Progress) -> Result<()> {
        let j = p.state.step;
        let snap = CovarianceState {
            sigma: self.prop.covariance(&p.state),
            time: self.prop.config.grid.time(j),
        };
        snap.check_admissible()?;
        p.sum += phonon_number_of(&snap.sigma, ModeLabel::Mechanical, &self.prop.config);
        p.count += 1;
        Ok(())
    }

    /// Runs to the end of the objective window, saving a copy of the progress
    /// at each requested step index (ascending).
    fn run<C: Coupling<f64> + ?Sized>(
        &self,
        coupling: &C,
        mut p: Progress,
        save_at: &[usize],
    ) -> Result<(f64, Vec<Progress>)> {
        let mut saved = Vec::with_capacity(save_at.len());
        let mut next = save_at.iter().peekable();
        loop {
            while next.peek().is_some_and(|&&s| s == p.state.step) {
                saved.push(p.clone());
                next.next();
            }
            if p.state.step == self.last_step {
                break;
            }
            self.prop.advance(&mut p.state, coupling)?;
            if self.is_sample(p.state.step) {
                self.sample(&mut p)?;
            }
        }
        let value = p.sum / p.count as f64;
        if !value.is_finite() {
            return Err(Error::NonFinite { step: p.state.step });
        }
        Ok((value, saved))
    }

    /// First step whose couplings can change when coefficient `k` moves.
    fn first_affected_step(&self, w: &Waveform, k: usize) -> usize {
        match w.basis {
            Basis::PiecewiseLinear { knots } if k > 0 => {
                let h = (w.span.1 - w.span.0) / (knots - 1) as f64;
                let left = w.span.0 + h * (k - 1) as f64;
                let x = (left / self.prop.config.grid.dt).floor() - 1.0;
                if x <= 0.0 {
                    0
                } else {
                    (x as usize).min(self.last_step)
                }
            }
            _ => 0,
        }
    }

    /// Objective value and central-difference gradient with step
    /// `1e-5·max(1, |c_k|)`. Pinned coordinates get a zero entry.
    pub fn value_and_gradient(&self, w: &Waveform) -> Result<(f64, Vec<f64>)> {
        w.check_feasible(&self.prop.config.grid)?;
        let free: Vec<usize> = w.free_indices().collect();
        let mut starts: Vec<usize> = free.iter().map(|&k| self.first_affected_step(w, k)).collect();
        starts.sort_unstable();
        starts.dedup();
        let (value, saved) = self.run(w, self.start()?, &starts)?;
        let partials: Vec<Result<f64>> = free
            .par_iter()
            .map(|&k| {
                let s = self.first_affected_step(w, k);
                let from = &saved[starts.binary_search(&s).expect("checkpoint saved")];
                let h = fd_step(w.coefficients[k]);
                let mut plus = w.clone();
                plus.coefficients[k] += h;
                let mut minus = w.clone();
                minus.coefficients[k] -= h;
                let (fp, _) = self.run(&plus, from.clone(), &[])?;
                let (fm, _) = self.run(&minus, from.clone(), &[])?;
                Ok((fp - fm) / (2.0 * h))
            })
            .collect();
        let mut grad = vec![0.0; w.coefficients.len()];
        for (&k, d) in free.iter().zip(partials) {
            grad[k] = d?;
        }
        Ok((value, grad))
    }

    pub fn gradient(&self, w: &Waveform) -> Result<Vec<f64>> {
        self.value_and_gradient(w).map(|(_, g)| g)
    }
}

/// A scalar cost over waveforms, minimised by [`super::optimize_with`].
pub trait Cost: Sync {
    fn value(&self, w: &Waveform) -> Result<f64>;

    /// Value and central-difference gradient with step `1e-5·max(1, |c_k|)`
    /// per free coordinate; pinned coordinates get a zero entry.
    fn value_and_gradient(&self, w: &Waveform) -> Result<(f64, Vec<f64>)> {
        let value = self.value(w)?;
        let free: Vec<usize> = w.free_indices().collect();
        let partials: Vec<Result<f64>> = free
            .par_iter()
            .map(|&k| {
                let h = fd_step(w.coefficients[k]);
                let mut plus = w.clone();
                plus.coefficients[k] += h;
                let mut minus = w.clone();
                minus.coefficients[k] -= h;
                Ok((self.value(&plus)? - self.value(&minus)?) / (2.0 * h))
            })
            .collect();
        let mut grad = vec![0.0; w.coefficients.len()];
        for (&k, d) in free.iter().zip(partials) {
            grad[k] = d?;
        }
        Ok((value, grad))
    }
}

pub fn fd_step(c: f64) -> f64 {
    1e-5 * c.abs().max(1.0)
}

impl Cost for Objective {
    fn value(&self, w: &Waveform) -> Result<f64> {
        self.evaluate(w)
    }

    fn value_and_gradient(&self, w: &Waveform) -> Result<(f64, Vec<f64>)> {
        Objective::value_and_gradient(self, w)
    }
}

/// `n_mech(t_cool)` or the window mean for `w` under `config`.
pub fn evaluate_objective(config: &SystemConfig<f64>, w: &Waveform, spec: ObjectiveSpec) -> Result<f64> {
    Objective::from_config(config, spec)?.evaluate(w)
}

/// Central-difference gradient of [`evaluate_objective`].
pub fn gradient_fd(config: &SystemConfig<f64>, w: &Waveform, spec: ObjectiveSpec) -> Result<Vec<f64>> {
    Objective::from_config(config, spec)?.gradient(w)
}
