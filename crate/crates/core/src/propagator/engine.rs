//! Streaming propagation of `Σ(t) = Φ(t) Σ(0) Φ(t)ᵀ + I(t)`.
//!
//! The noise term is accumulated step by step. With `v_k = G(t_N, t_k) e_b`,
//! the pairs whose indices are both below `N` form `P_N`, which obeys
//!
//! `P_{N+1} = U_N (P_N + e s_Nᵀ + s_N eᵀ + d_N e eᵀ) U_Nᵀ`,
//!
//! where `s_N` sums the lag weights against the stored responses. Closing the
//! right end at a snapshot adds the right-end pairs. Each step costs
//! `O(max_lag)`.

use std::collections::VecDeque;

use super::covariance::thermal_extended;
use super::drift::{step_propagator, Coupling};
use super::noise::{NoisePlan, NOISE_ROWS};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{Mat6, Vec6};
use crate::scalar::Scalar;

/// Configuration plus precomputed noise weights; reusable across couplings.
#[derive(Clone, Debug)]
pub struct Propagator<T: Scalar> {
    pub config: SystemConfig<T>,
    pub plan: NoisePlan<T>,
    sigma0: Mat6<T>,
}

/// Everything needed to continue a trajectory from grid index `step`.
#[derive(Clone, Debug)]
pub struct EvolutionState<T: Scalar> {
    pub step: usize,
    pub phi: Mat6<T>,
    pairs: Mat6<T>,
    /// `(k, [G(t_N,t_k) e_p1, G(t_N,t_k) e_p2])` for `N − max_lag ≤ k < N`.
    window: VecDeque<(usize, [Vec6<T>; 2])>,
}

impl<T: Scalar> Propagator<T> {
    pub fn new(config: SystemConfig<T>) -> Result<Self> {
        config.validate()?;
        let plan = NoisePlan::new(&config)?;
        let sigma0 = thermal_extended(&config, config.n_t, config.n_c);
        Ok(Propagator { config, plan, sigma0 })
    }

    /// Same dynamics and noise weights, different initial occupations.
    pub fn with_initial_occupations(&self, n_mech: T, n_opt: T) -> Result<Self> {
        let mut config = self.config;
        config.n_t = n_mech;
        config.n_c = n_opt;
        config.validate()?;
        let sigma0 = thermal_extended(&config, n_mech, n_opt);
        Ok(Propagator {
            config,
            plan: self.plan.clone(),
            sigma0,
        })
    }

    /// Starts from an arbitrary extended covariance instead of the thermal state.
    pub fn with_initial_covariance(&self, sigma0: Mat6<T>) -> Self {
        Propagator {
            config: self.config,
            plan: self.plan.clone(),
            sigma0,
        }
    }

    pub fn initial_covariance(&self) -> &Mat6<T> {
        &self.sigma0
    }

    pub fn start(&self) -> EvolutionState<T> {
        EvolutionState {
            step: 0,
            phi: Mat6::identity(),
            pairs: Mat6::zeros(),
            window: VecDeque::new(),
        }
    }

    /// Advances one grid step under `coupling`.
    pub fn advance<C: Coupling<T> + ?Sized>(&self, state: &mut EvolutionState<T>, coupling: &C) -> Result<()> {
        let u = step_propagator(&self.config, coupling, state.step);
        self.advance_with(state, &u)
    }

    /// Advances one grid step with a precomputed one-step propagator.
    pub fn advance_with(&self, state: &mut EvolutionState<T>, u: &Mat6<T>) -> Result<()> {
        let n = state.step;
        if !u.is_finite() {
            return Err(Error::NonFinite { step: n + 1 });
        }
        for (b, kernel) in self.plan.kernels.iter().enumerate() {
            let Some(kernel) = kernel else { continue };
            let row = NOISE_ROWS[b];
            let mut s = [T::zero(); 6];
            for (k, v) in state.window.iter() {
                let w = kernel.interior_weight(n, *k);
                for r in 0..6 {
                    s[r] += w * v[b][r];
                }
            }
            let d = kernel.diagonal_weight(n);
            add_rank_two(&mut state.pairs, row, &s, d);
        }
        let mut fresh = [[T::zero(); 6]; 2];
        fresh[0][NOISE_ROWS[0]] = T::one();
        fresh[1][NOISE_ROWS[1]] = T::one();
        if !self.plan.is_silent() {
            state.window.push_back((n, fresh));
        }
        state.pairs = u.sandwich(&state.pairs);
        state.phi = *u * state.phi;
        for (b, kernel) in self.plan.kernels.iter().enumerate() {
            if kernel.is_none() {
                continue;
            }
            for (_, v) in state.window.iter_mut() {
                v[b] = u.mul_vec(&v[b]);
            }
        }
        let horizon = self.plan.max_lag();
        while let Some((k, _)) = state.window.front() {
            if n + 1 - *k > horizon {
                state.window.pop_front();
            } else {
                break;
            }
        }
        state.step = n + 1;
        if !state.phi.is_finite() || !state.pairs.is_finite() {
            return Err(Error::NonFinite { step: n + 1 });
        }
        Ok(())
    }

    /// Noise contribution `I(t_N)` at the state's current index.
    pub fn noise(&self, state: &EvolutionState<T>) -> Mat6<T> {
        let n = state.step;
        if n == 0 {
            return Mat6::zeros();
        }
        let mut out = state.pairs;
        for (b, kernel) in self.plan.kernels.iter().enumerate() {
            let Some(kernel) = kernel else { continue };
            let mut s = [T::zero(); 6];
            for (k, v) in state.window.iter() {
                let w = kernel.right_weight(n, *k);
                for r in 0..6 {
                    s[r] += w * v[b][r];
                }
            }
            add_rank_two(&mut out, NOISE_ROWS[b], &s, kernel.ee);
        }
        out.symmetrize();
        out
    }

    /// Full extended covariance at the state's current index.
    pub fn covariance(&self, state: &EvolutionState<T>) -> Mat6<T> {
        let mut sigma = state.phi.sandwich(&self.sigma0) + self.noise(state);
        sigma.symmetrize();
        sigma
    }
}

/// `m += e sᵀ + s eᵀ + d e eᵀ` with `e` the unit vector of `row`.
fn add_rank_two<T: Scalar>(m: &mut Mat6<T>, row: usize, s: &Vec6<T>, d: T) {
    for c in 0..6 {
        m[(row, c)] += s[c];
        m[(c, row)] += s[c];
    }
    m[(row, row)] += d;
}
