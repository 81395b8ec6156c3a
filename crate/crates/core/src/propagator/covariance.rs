use crate::bath::ModeLabel;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{symplectic_eigenvalues, Mat6, P1, P2, Q1, Q2, U1, U2};
use crate::scalar::Scalar;

/// Extended covariance `⟨{s_a, s_b}⟩/2` over `(q1, p1, u1, q2, p2, u2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceState<T: Scalar> {
    pub sigma: Mat6<T>,
    pub time: T,
}

pub const ASYMMETRY_TOL: f64 = 1e-12;
pub const UNCERTAINTY_TOL: f64 = 1e-8;

impl<T: Scalar> CovarianceState<T> {
    pub fn symplectic_eigenvalues(&self) -> (T, T) {
        symplectic_eigenvalues(&self.sigma.physical_block())
    }

    /// Checks symmetry and the uncertainty bound `ν ≥ 1/2`. The tolerance is
    /// `1e-8` plus the round-off floor of the invariants, which grows with the
    /// square of the covariance scale.
    pub fn check_admissible(&self) -> Result<()> {
        let asym = self.sigma.max_asymmetry();
        if asym > T::lit(ASYMMETRY_TOL) * self.sigma.max_abs().max(T::one()) {
            return Err(Error::Inadmissible {
                time: self.time.to_f64_lossy(),
                what: "symmetry",
                value: asym.to_f64_lossy(),
            });
        }
        let (lo, _) = self.symplectic_eigenvalues();
        let scale = self.sigma.physical_block().iter().flatten().fold(T::zero(), |a, x| a.max(x.abs()));
        let tol = T::lit(UNCERTAINTY_TOL) + T::lit(64.0) * T::epsilon() * scale * scale;
        if !(lo >= T::lit(0.5) - tol) {
            return Err(Error::Inadmissible {
                time: self.time.to_f64_lossy(),
                what: "uncertainty bound",
                value: lo.to_f64_lossy(),
            });
        }
        Ok(())
    }

    pub fn phonon_number(&self, which: ModeLabel, config: &SystemConfig<T>) -> T {
        phonon_number_of(&self.sigma, which, config)
    }
}

/// `n = (⟨p²⟩ + ω²⟨q²⟩)/(2ω) − 1/2`.
pub fn phonon_number_of<T: Scalar>(sigma: &Mat6<T>, which: ModeLabel, config: &SystemConfig<T>) -> T {
    let (q, p) = match which {
        ModeLabel::Mechanical => (Q1, P1),
        ModeLabel::Optical => (Q2, P2),
    };
    let w = config.mode(which).frequency;
    (sigma[(p, p)] + w * w * sigma[(q, q)]) / (T::lit(2.0) * w) - T::lit(0.5)
}

/// Thermal physical block, with each auxiliary set to `u_i = -rate_i·cutoff_i·q_i`.
pub fn initial_extended_covariance<T: Scalar>(config: &SystemConfig<T>) -> Result<CovarianceState<T>> {
    config.validate()?;
    Ok(CovarianceState {
        sigma: thermal_extended(config, config.n_t, config.n_c),
        time: T::zero(),
    })
}

pub(crate) fn thermal_extended<T: Scalar>(config: &SystemConfig<T>, n1: T, n2: T) -> Mat6<T> {
    let mut s = Mat6::zeros();
    for (q, p, u, w, n, bath) in [
        (Q1, P1, U1, config.mech.frequency, n1, &config.mech_bath),
        (Q2, P2, U2, config.opt.frequency, n2, &config.opt_bath),
    ] {
        let level = T::lit(2.0) * n + T::one();
        let qq = level / (T::lit(2.0) * w);
        let slip = -bath.rate * bath.cutoff;
        s[(q, q)] = qq;
        s[(p, p)] = level * w * T::lit(0.5);
        s[(u, q)] = slip * qq;
        s[(q, u)] = slip * qq;
        s[(u, u)] = slip * slip * qq;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_initial_state() {
        let c = SystemConfig::resonant(0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0f64).unwrap();
        let s = initial_extended_covariance(&c).unwrap();
        assert_eq!(s.sigma, Mat6::from_diagonal(&[0.5, 0.5, 0.0, 0.5, 0.5, 0.0]));
        assert_eq!(s.phonon_number(ModeLabel::Mechanical, &c), 0.0);
        s.check_admissible().unwrap();
    }

    #[test]
    fn thermal_initial_state_and_slip() {
        let c = SystemConfig::resonant(1e-3, 0.0, 1.0, 1.0, 100.0, 0.0, 1.0f64).unwrap();
        let s = initial_extended_covariance(&c).unwrap();
        assert!((s.sigma[(Q1, Q1)] - 100.5).abs() < 1e-12);
        assert!((s.sigma[(U1, Q1)] + 1e-3 * 100.5).abs() < 1e-15);
        assert!((s.phonon_number(ModeLabel::Mechanical, &c) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn squeezed_phonon_number() {
        let c = SystemConfig::resonant(0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0f64).unwrap();
        let mut sigma = Mat6::zeros();
        let e2 = (2.0f64).exp();
        sigma[(Q1, Q1)] = 1.0 / (2.0 * e2);
        sigma[(P1, P1)] = e2 / 2.0;
        sigma[(Q2, Q2)] = 0.5;
        sigma[(P2, P2)] = 0.5;
        let s = CovarianceState { sigma, time: 0.0 };
        let want = 1f64.sinh().powi(2);
        assert!((s.phonon_number(ModeLabel::Mechanical, &c) - want).abs() < 1e-12);
        assert!((want - 1.381097).abs() < 1e-6);
        s.check_admissible().unwrap();
    }

    #[test]
    fn sub_vacuum_state_is_rejected() {
        let mut sigma = Mat6::from_diagonal(&[0.5, 0.5, 0.0, 0.5, 0.5, 0.0]);
        sigma[(Q1, Q1)] = 0.4;
        let s = CovarianceState { sigma, time: 0.0f64 };
        assert!(matches!(s.check_admissible(), Err(Error::Inadmissible { .. })));
    }
}
