//! System configuration and the uniform time grid.

use crate::bath::{DrudeBath, ModeLabel, ModeParams};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Mechanical period `τ_m = 2π/ω_m` in the unit system where `ω_m = 1`.
pub fn tau_m<T: Scalar>() -> T {
    T::lit(2.0) * T::PI()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid<T: Scalar> {
    pub dt: T,
    pub n_steps: usize,
}

impl<T: Scalar> TimeGrid<T> {
    pub fn new(dt: T, n_steps: usize) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        if n_steps == 0 {
            return Err(Error::invalid("n_steps", "must be at least 1"));
        }
        Ok(TimeGrid { dt, n_steps })
    }

    /// Smallest uniform grid with step `<= dt_max` that lands exactly on `t_final`.
    pub fn covering(t_final: T, dt_max: T) -> Result<Self> {
        if !(t_final > T::zero()) {
            return Err(Error::invalid("t_final", format!("must be positive, got {t_final}")));
        }
        let ratio = t_final / dt_max;
        let mut n = ratio.ceil().to_usize().unwrap_or(1).max(1);
        // float noise in ratio must not add a step
        if n > 1 && (T::from_usize_lossy(n - 1) - ratio).abs() < T::lit(1e-9) * ratio {
            n -= 1;
        }
        Self::new(t_final / T::from_usize_lossy(n), n)
    }

    pub fn time(&self, j: usize) -> T {
        self.dt * T::from_usize_lossy(j)
    }

    pub fn t_final(&self) -> T {
        self.time(self.n_steps)
    }

    /// Grid index of `t` if `t` lies on the grid (relative tolerance 1e-9).
    pub fn index_of(&self, t: T) -> Option<usize> {
        let x = t / self.dt;
        let j = x.round();
        if j < T::zero() || (x - j).abs() > T::lit(1e-9) * x.abs().max(T::one()) {
            return None;
        }
        let j = j.to_usize()?;
        (j <= self.n_steps).then_some(j)
    }
}

/// Numerical knobs of the exact propagator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Numerics<T: Scalar> {
    /// Outer frequency integral runs to `omega_max_factor · max(coupled cutoffs, mode frequencies)`.
    pub omega_max_factor: T,
    /// Gauss-Legendre nodes per frequency panel.
    pub panel_nodes: usize,
    /// Lag beyond which the noise kernel is dropped; `None` picks
    /// `max(10, 25/min(cutoff))` in units of `1/ω_m`.
    pub memory_horizon: Option<T>,
    /// Recompute the frequency integral with doubled panels and fail if the
    /// lag weights move by more than `quadrature_tol` (relative).
    pub check_convergence: bool,
    pub quadrature_tol: T,
}

impl<T: Scalar> Default for Numerics<T> {
    fn default() -> Self {
        Numerics {
            omega_max_factor: T::lit(50.0),
            panel_nodes: 16,
            memory_horizon: None,
            check_convergence: true,
            quadrature_tol: T::lit(1e-6),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemConfig<T: Scalar> {
    pub mech: ModeParams<T>,
    pub opt: ModeParams<T>,
    pub mech_bath: DrudeBath<T>,
    pub opt_bath: DrudeBath<T>,
    /// Initial mechanical occupation.
    pub n_t: T,
    /// Initial optical occupation.
    pub n_c: T,
    pub grid: TimeGrid<T>,
    pub numerics: Numerics<T>,
}

impl<T: Scalar> SystemConfig<T> {
    /// Default-step grid covering `[0, t_final]`.
    pub fn new(
        mech: ModeParams<T>,
        opt: ModeParams<T>,
        mech_bath: DrudeBath<T>,
        opt_bath: DrudeBath<T>,
        n_t: T,
        n_c: T,
        t_final: T,
    ) -> Result<Self> {
        let dt = default_dt(&mech, &opt, &mech_bath, &opt_bath, t_final);
        let cfg = SystemConfig {
            mech,
            opt,
            mech_bath,
            opt_bath,
            n_t,
            n_c,
            grid: TimeGrid::covering(t_final, dt)?,
            numerics: Numerics::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Resonant modes (`ω_om = ω_mm = 1`), bath temperatures tied to the initial
    /// occupations, default grid covering `[0, t_final]`.
    pub fn resonant(
        gamma: T,
        kappa: T,
        cutoff_mech: T,
        cutoff_opt: T,
        n_t: T,
        n_c: T,
        t_final: T,
    ) -> Result<Self> {
        Self::new(
            ModeParams::new(ModeLabel::Mechanical, T::one())?,
            ModeParams::new(ModeLabel::Optical, T::one())?,
            DrudeBath::new(gamma, cutoff_mech, n_t)?,
            DrudeBath::new(kappa, cutoff_opt, n_c)?,
            n_t,
            n_c,
            t_final,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.mech_bath.validate()?;
        self.opt_bath.validate()?;
        for m in [&self.mech, &self.opt] {
            if !(m.frequency > T::zero()) {
                return Err(Error::invalid("frequency", "must be positive"));
            }
        }
        if !(self.n_t >= T::zero()) || !self.n_t.is_finite() {
            return Err(Error::invalid("n_T", format!("must be >= 0, got {}", self.n_t)));
        }
        if !(self.n_c >= T::zero()) || !self.n_c.is_finite() {
            return Err(Error::invalid("n_c", format!("must be >= 0, got {}", self.n_c)));
        }
        if self.numerics.panel_nodes < 2 {
            return Err(Error::invalid("panel_nodes", "need at least 2"));
        }
        Ok(())
    }

    pub fn mode(&self, label: ModeLabel) -> &ModeParams<T> {
        match label {
            ModeLabel::Mechanical => &self.mech,
            ModeLabel::Optical => &self.opt,
        }
    }

    pub fn bath(&self, label: ModeLabel) -> &DrudeBath<T> {
        match label {
            ModeLabel::Mechanical => &self.mech_bath,
            ModeLabel::Optical => &self.opt_bath,
        }
    }

    /// Replaces the grid with the default-step grid covering `[0, t_final]`.
    pub fn with_t_final(mut self, t_final: T) -> Result<Self> {
        let dt = default_dt(&self.mech, &self.opt, &self.mech_bath, &self.opt_bath, t_final);
        self.grid = TimeGrid::covering(t_final, dt)?;
        Ok(self)
    }

    pub fn with_grid(mut self, grid: TimeGrid<T>) -> Self {
        self.grid = grid;
        self
    }

    /// Default step for the current grid length.
    pub fn default_dt(&self) -> T {
        default_dt(&self.mech, &self.opt, &self.mech_bath, &self.opt_bath, self.grid.t_final())
    }

    pub fn memory_horizon(&self) -> T {
        self.numerics.memory_horizon.unwrap_or_else(|| {
            let cmin = [&self.mech_bath, &self.opt_bath]
                .into_iter()
                .filter(|b| b.is_coupled())
                .fold(T::infinity(), |a, b| a.min(b.cutoff));
            T::lit(10.0).max(T::lit(25.0) / cmin)
        })
    }

    pub fn omega_max(&self) -> T {
        let top = [&self.mech_bath, &self.opt_bath]
            .into_iter()
            .filter(|b| b.is_coupled())
            .fold(self.mech.frequency.max(self.opt.frequency), |a, b| a.max(b.cutoff));
        self.numerics.omega_max_factor * top
    }
}

/// Largest accumulated RK4 contraction of a free oscillator over a run. Each
/// step scales the phase-space area by `1 - (ω dt)^6/72`.
pub const RK4_CONTRACTION_BUDGET: f64 = 1.6e-9;

/// Smallest of `τ_m/(200 ω)`, `2/max(coupled cutoff)` and the step that keeps the
/// accumulated RK4 contraction over `[0, t_final]` below
/// [`RK4_CONTRACTION_BUDGET`]. The cutoff clamp keeps the auxiliary decay
/// inside the RK4 stability region, the last one keeps pure states above the
/// uncertainty bound on long runs.
pub fn default_dt<T: Scalar>(
    mech: &ModeParams<T>,
    opt: &ModeParams<T>,
    mech_bath: &DrudeBath<T>,
    opt_bath: &DrudeBath<T>,
    t_final: T,
) -> T {
    let w = mech.frequency.max(opt.frequency);
    let by_period = tau_m::<T>() / (T::lit(200.0) * w);
    let stiffest = [mech_bath, opt_bath]
        .into_iter()
        .filter(|b| b.is_coupled())
        .fold(T::zero(), |a, b| a.max(b.cutoff));
    let by_cutoff = T::lit(2.0) / stiffest;
    let mut dt = by_period.min(by_cutoff);
    if t_final > T::zero() {
        // t_final/dt · (ω dt)^6 / 72 ≤ budget
        let budget = T::lit(72.0 * RK4_CONTRACTION_BUDGET) / (t_final * w.powi(6));
        dt = dt.min(budget.powf(T::lit(0.2)));
    }
    dt
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_covers_t_final_exactly() {
        let g = TimeGrid::covering(0.55 * tau_m::<f64>(), tau_m::<f64>() / 200.0).unwrap();
        assert_eq!(g.n_steps, 110);
        assert!((g.t_final() - 0.55 * tau_m::<f64>()).abs() < 1e-12);
        assert_eq!(g.index_of(0.55 * tau_m::<f64>()), Some(110));
        assert_eq!(g.index_of(0.123), None);
    }

    #[test]
    fn rejects_bad_grid() {
        assert!(TimeGrid::new(0.0f64, 10).is_err());
        assert!(TimeGrid::new(0.1f64, 0).is_err());
    }

    #[test]
    fn default_step_respects_stiff_cutoff() {
        let c = SystemConfig::resonant(1e-6, 1e-4, 100.0, 100.0, 100.0, 0.0, 1.0f64).unwrap();
        assert!((c.default_dt() - 0.02).abs() < 1e-15);
        let c = SystemConfig::resonant(1e-6, 1e-4, 1.0, 1.0, 100.0, 0.0, 1.0f64).unwrap();
        assert!((c.default_dt() - tau_m::<f64>() / 200.0).abs() < 1e-15);
    }

    #[test]
    fn default_step_shrinks_for_long_runs() {
        let tau = tau_m::<f64>();
        let short = SystemConfig::resonant(1e-2, 0.0, 1.0, 1.0, 1.0, 0.0, 0.5 * tau).unwrap();
        let long = SystemConfig::resonant(1e-2, 0.0, 1.0, 1.0, 1.0, 0.0, 200.0 * tau).unwrap();
        assert!((short.grid.dt - tau / 200.0).abs() < 1e-12);
        assert!(long.grid.dt < 0.01);
        let n = long.grid.n_steps as f64;
        assert!(n * long.grid.dt.powi(6) / 72.0 <= 1.61e-9);
    }

    #[test]
    fn rejects_negative_occupations() {
        assert!(SystemConfig::resonant(0.0, 0.0, 1.0, 1.0, -1.0, 0.0, 1.0f64).is_err());
        assert!(SystemConfig::resonant(0.0, 0.0, 1.0, 1.0, 1.0, -0.1, 1.0f64).is_err());
    }
}
