//! Exact second-moment dynamics of the two driven, damped modes.

pub mod covariance;
pub mod drift;
pub mod engine;
pub mod noise;

pub use covariance::{initial_extended_covariance, phonon_number_of, CovarianceState};
pub use drift::{drift_matrix, rk4_step, step_propagator, Constant, Coupling};
pub use engine::{EvolutionState, Propagator};
pub use noise::{noise_double_sum, noise_spectral_sum, NoiseKernel, NoisePlan};

use crate::bath::ModeLabel;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{det4, Mat6};
use crate::scalar::Scalar;

/// Fundamental matrices `Φ(t_j)` and the one-step propagators between them.
#[derive(Clone, Debug)]
pub struct FundamentalTable<T: Scalar> {
    pub phi: Vec<Mat6<T>>,
    /// `steps[j]` maps `t_j` to `t_{j+1}`.
    pub steps: Vec<Mat6<T>>,
}

impl<T: Scalar> FundamentalTable<T> {
    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// `G(t_j, t_k) = Φ(t_j) Φ(t_k)⁻¹` via explicit inversion. Only usable when
    /// `Φ` stays well conditioned (no stiff auxiliaries over long spans).
    pub fn green_by_inverse(&self, j: usize, k: usize) -> Result<Mat6<T>> {
        let inv = self.phi[k]
            .inverse()
            .ok_or(Error::SingularFundamental { step: k })?;
        Ok(self.phi[j] * inv)
    }

    /// `G(t_j, t_k)` as the ordered product of one-step propagators.
    pub fn green(&self, j: usize, k: usize) -> Mat6<T> {
        let mut g = Mat6::identity();
        for s in k..j {
            g = self.steps[s] * g;
        }
        g
    }

    /// `det` of the physical 4×4 block of `Φ(t_j)`.
    pub fn physical_determinant(&self, j: usize) -> T {
        det4(&self.phi[j].physical_block())
    }
}

/// Integrates `Φ̇ = A(t) Φ`, `Φ(0) = 1` with RK4 over the configured grid.
pub fn propagate_fundamental<T: Scalar, C: Coupling<T> + ?Sized>(
    config: &SystemConfig<T>,
    coupling: &C,
) -> Result<FundamentalTable<T>> {
    config.validate()?;
    let n = config.grid.n_steps;
    let mut phi = Vec::with_capacity(n + 1);
    let mut steps = Vec::with_capacity(n);
    let mut current = Mat6::identity();
    phi.push(current);
    for j in 0..n {
        let u = step_propagator(config, coupling, j);
        current = u * current;
        if !current.is_finite() {
            return Err(Error::NonFinite { step: j + 1 });
        }
        steps.push(u);
        phi.push(current);
    }
    Ok(FundamentalTable { phi, steps })
}

/// Noise contribution `I(t_j)` for a stored table (explicit double sum).
pub fn noise_covariance<T: Scalar>(
    config: &SystemConfig<T>,
    fund: &FundamentalTable<T>,
    j: usize,
) -> Result<Mat6<T>> {
    if j >= fund.len() {
        return Err(Error::invalid("j", format!("index {j} beyond table of {} points", fund.len())));
    }
    let plan = NoisePlan::new(config)?;
    Ok(noise_double_sum(&plan, &fund.steps, j))
}

/// Covariance snapshots at indices `0, stride, 2·stride, …` (and the final
/// index). Every snapshot is checked for symmetry and the uncertainty bound.
pub fn evolve_covariance<T: Scalar, C: Coupling<T> + ?Sized>(
    config: &SystemConfig<T>,
    coupling: &C,
    sample_stride: usize,
) -> Result<Vec<CovarianceState<T>>> {
    let prop = Propagator::new(*config)?;
    evolve_with(&prop, coupling, sample_stride)
}

pub fn evolve_with<T: Scalar, C: Coupling<T> + ?Sized>(
    prop: &Propagator<T>,
    coupling: &C,
    sample_stride: usize,
) -> Result<Vec<CovarianceState<T>>> {
    if sample_stride == 0 {
        return Err(Error::invalid("sample_stride", "must be positive"));
    }
    let grid = prop.config.grid;
    let mut state = prop.start();
    let mut out = Vec::with_capacity(grid.n_steps / sample_stride + 2);
    let emit = |state: &EvolutionState<T>, out: &mut Vec<CovarianceState<T>>| -> Result<()> {
        let snap = CovarianceState {
            sigma: prop.covariance(state),
            time: grid.time(state.step),
        };
        snap.check_admissible()?;
        out.push(snap);
        Ok(())
    };
    emit(&state, &mut out)?;
    for j in 0..grid.n_steps {
        prop.advance(&mut state, coupling)?;
        if (j + 1) % sample_stride == 0 || j + 1 == grid.n_steps {
            emit(&state, &mut out)?;
        }
    }
    Ok(out)
}

pub fn phonon_number<T: Scalar>(state: &CovarianceState<T>, which: ModeLabel, config: &SystemConfig<T>) -> T {
    state.phonon_number(which, config)
}

/// Sampled phonon numbers of a trajectory.
#[derive(Clone, Debug)]
pub struct Trajectory<T: Scalar> {
    pub times: Vec<T>,
    pub n_mech: Vec<T>,
    pub n_opt: Vec<T>,
    pub coupling: Vec<T>,
    pub final_state: CovarianceState<T>,
}

pub fn simulate<T: Scalar, C: Coupling<T> + ?Sized>(
    config: &SystemConfig<T>,
    coupling: &C,
    sample_stride: usize,
) -> Result<Trajectory<T>> {
    let prop = Propagator::new(*config)?;
    simulate_with(&prop, coupling, sample_stride)
}

pub fn simulate_with<T: Scalar, C: Coupling<T> + ?Sized>(
    prop: &Propagator<T>,
    coupling: &C,
    sample_stride: usize,
) -> Result<Trajectory<T>> {
    let snaps = evolve_with(prop, coupling, sample_stride)?;
    let cfg = &prop.config;
    let final_state = *snaps.last().expect("at least the initial snapshot");
    Ok(Trajectory {
        times: snaps.iter().map(|s| s.time).collect(),
        n_mech: snaps.iter().map(|s| s.phonon_number(ModeLabel::Mechanical, cfg)).collect(),
        n_opt: snaps.iter().map(|s| s.phonon_number(ModeLabel::Optical, cfg)).collect(),
        coupling: snaps.iter().map(|s| coupling.value(s.time)).collect(),
        final_state,
    })
}
