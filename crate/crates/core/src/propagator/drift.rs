//! Drift of the extended linear dynamics and its RK4 one-step propagator.

use crate::config::SystemConfig;
use crate::linalg::{Mat6, P1, P2, Q1, Q2, U1, U2};
use crate::scalar::Scalar;

/// A time-dependent optomechanical coupling `g(t)`.
pub trait Coupling<T: Scalar>: Sync {
    fn value(&self, t: T) -> T;
}

impl<T: Scalar, F: Fn(T) -> T + Sync> Coupling<T> for F {
    fn value(&self, t: T) -> T {
        self(t)
    }
}

/// `g(t) = g0` for all `t`.
#[derive(Clone, Copy, Debug)]
pub struct Constant<T>(pub T);

impl<T: Scalar> Coupling<T> for Constant<T> {
    fn value(&self, _t: T) -> T {
        self.0
    }
}

/// Drift `A(g)` of `ṡ = A s` for `s = (q1, p1, u1, q2, p2, u2)`:
///
/// `q̇ = p`, `ṗ = -ω² q + u - λ q_other`, `u̇ = -cutoff·u - rate·cutoff·p`,
/// with `λ = 2 g √(ω₁ω₂)`. An uncoupled bath (`rate = 0`) leaves its
/// auxiliary rows and column zero.
pub fn drift_matrix<T: Scalar>(config: &SystemConfig<T>, g: T) -> Mat6<T> {
    let mut a = Mat6::zeros();
    let w1 = config.mech.frequency;
    let w2 = config.opt.frequency;
    let lambda = T::lit(2.0) * g * (w1 * w2).sqrt();
    let modes = [
        (Q1, P1, U1, Q2, w1, &config.mech_bath),
        (Q2, P2, U2, Q1, w2, &config.opt_bath),
    ];
    for (q, p, u, other_q, w, bath) in modes {
        a[(q, p)] = T::one();
        a[(p, q)] = -w * w;
        a[(p, other_q)] = -lambda;
        if bath.is_coupled() {
            a[(p, u)] = T::one();
            a[(u, u)] = -bath.cutoff;
            a[(u, p)] = -bath.rate * bath.cutoff;
        }
    }
    a
}

/// Classical RK4 applied to `Φ̇ = A(t)Φ` over one step, starting from the identity.
pub fn rk4_step<T: Scalar>(config: &SystemConfig<T>, g_start: T, g_mid: T, g_end: T, dt: T) -> Mat6<T> {
    let a0 = drift_matrix(config, g_start);
    let ah = drift_matrix(config, g_mid);
    let a1 = drift_matrix(config, g_end);
    let half = dt * T::lit(0.5);
    let id = Mat6::identity();
    let k1 = a0;
    let k2 = ah * (id + k1.scale(half));
    let k3 = ah * (id + k2.scale(half));
    let k4 = a1 * (id + k3.scale(dt));
    let sum = k1 + k2.scale(T::lit(2.0)) + k3.scale(T::lit(2.0)) + k4;
    id + sum.scale(dt / T::lit(6.0))
}

/// One-step propagator from grid point `j` to `j + 1`.
pub fn step_propagator<T: Scalar, C: Coupling<T> + ?Sized>(
    config: &SystemConfig<T>,
    coupling: &C,
    j: usize,
) -> Mat6<T> {
    let dt = config.grid.dt;
    let t0 = config.grid.time(j);
    rk4_step(
        config,
        coupling.value(t0),
        coupling.value(t0 + dt * T::lit(0.5)),
        coupling.value(config.grid.time(j + 1)),
        dt,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SystemConfig;

    fn closed() -> SystemConfig<f64> {
        SystemConfig::resonant(0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn uncoupled_closed_drift_is_block_diagonal() {
        let a = drift_matrix(&closed(), 0.0);
        let mut want = Mat6::zeros();
        want[(Q1, P1)] = 1.0;
        want[(P1, Q1)] = -1.0;
        want[(Q2, P2)] = 1.0;
        want[(P2, Q2)] = -1.0;
        assert_eq!(a, want);
    }

    #[test]
    fn coupling_enters_off_diagonal() {
        let a = drift_matrix(&closed(), 0.05);
        assert!((a[(P1, Q2)] + 0.1).abs() < 1e-15);
        assert!((a[(P2, Q1)] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn embedding_entries() {
        let c = SystemConfig::resonant(1e-3, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0).unwrap();
        let a = drift_matrix(&c, 0.0);
        assert_eq!(a[(U1, U1)], -1.0);
        assert!((a[(U1, P1)] + 1e-3f64).abs() < 1e-18);
        assert_eq!(a[(U2, U2)], 0.0);
        assert_eq!(a[(P2, U2)], 0.0);
    }

    #[test]
    fn rk4_matches_exact_rotation_for_small_step() {
        let c = closed();
        let dt = 1e-2;
        let u = rk4_step(&c, 0.0, 0.0, 0.0, dt);
        assert!((u[(Q1, Q1)] - dt.cos()).abs() < 1e-11);
        assert!((u[(Q1, P1)] - dt.sin()).abs() < 1e-11);
        assert!((u[(P1, Q1)] + dt.sin()).abs() < 1e-11);
    }
}
