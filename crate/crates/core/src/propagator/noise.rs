//! Symmetrised bath-noise contribution to the covariance.
//!
//! The noise enters `ṗ_b` with correlation `K(τ) = (1/π)∫ J(ω) coth(…) cos(ωτ) dω`.
//! Its covariance contribution at `t` is
//!
//! `I(t) = Σ_b ∫₀^{ω_max} dω/π · J_b(ω) w_b(ω) · Re[F_b(t,ω) F_b(t,ω)†]`,
//! `F_b(t,ω) = ∫₀^t G(t,s) e_b e^{iωs} ds`, `G(t,s) = Φ(t)Φ(s)⁻¹`.
//!
//! The response `s ↦ G(t,s) e_b` is represented by its piecewise-linear
//! interpolant on the time grid and the `e^{iωs}` factor is integrated exactly
//! against each hat function. The double integral then collapses to
//! `Σ_jk W(j,k) v_j v_kᵀ` with lag weights `W` that depend only on the hat
//! types (left end, interior, right end) and on `|j-k|`. Those weights are the
//! only place the frequency integral appears and are computed once per bath by
//! composite Gauss-Legendre panels.

use num_complex::Complex;

use crate::bath::{inverse_temperature_scaled, noise_spectrum, DrudeBath, InverseTemperature};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{Mat6, Vec6, P1, P2};
use crate::quadrature::GaussLegendre;
use crate::scalar::Scalar;

/// Lag weights of one bath on a grid of step `dt`.
#[derive(Clone, Debug)]
pub struct NoiseKernel<T: Scalar> {
    pub dt: T,
    /// Largest lag kept; weights beyond it are dropped.
    pub max_lag: usize,
    /// Interior–interior weights, index = lag.
    pub ii: Vec<T>,
    /// End–interior weights, index = lag (index 0 unused).
    pub ei: Vec<T>,
    /// Left end–right end weights, index = lag (index 0 unused).
    pub lr: Vec<T>,
    /// End–same end weight.
    pub ee: T,
    /// Panels used by the accepted frequency quadrature.
    pub panels: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct KernelSpec<T: Scalar> {
    pub bath: DrudeBath<T>,
    pub mode_frequency: T,
    pub dt: T,
    pub max_lag: usize,
    pub omega_max: T,
    pub panel_nodes: usize,
}

/// Fourier transforms of the hat functions at `a = ω·dt`, scaled by `1/dt`:
/// interior `sinc²(a/2)` and left end `(e^{ia} - 1 - ia)/(ia)²`.
fn hat_transforms<T: Scalar>(a: T) -> (T, Complex<T>) {
    let half = a * T::lit(0.5);
    let interior = if half.abs() < T::lit(1e-4) {
        T::one() - half * half / T::lit(3.0)
    } else {
        let s = half.sin() / half;
        s * s
    };
    let left = if a.abs() < T::lit(0.2) {
        // Σ_{k≥0} (ia)^k / (k+2)!
        let ia = Complex::new(T::zero(), a);
        let mut term = Complex::new(T::lit(0.5), T::zero());
        let mut acc = term;
        for k in 1..12 {
            term = term * ia / T::from_usize_lossy(k + 2);
            acc += term;
        }
        acc
    } else {
        let ia = Complex::new(T::zero(), a);
        let e = Complex::new(a.cos(), a.sin());
        (e - Complex::new(T::one(), T::zero()) - ia) / (ia * ia)
    };
    (interior, left)
}

impl<T: Scalar> NoiseKernel<T> {
    /// Panel width resolving the spectrum (cutoff, thermal scale), the hat
    /// transforms and the oscillation at the largest lag.
    fn base_panel_width(spec: &KernelSpec<T>) -> T {
        let tau_max = spec.dt * T::from_usize_lossy(spec.max_lag.max(1));
        let mut h = T::lit(4.0) * T::PI() / tau_max;
        h = h.min(spec.bath.cutoff * T::lit(0.5));
        h = h.min(T::PI() / spec.dt);
        if let InverseTemperature::Finite(beta) = inverse_temperature_scaled(spec.bath.occupation) {
            h = h.min(spec.mode_frequency / beta);
        }
        h
    }

    fn integrate(spec: &KernelSpec<T>, rule: &GaussLegendre<T>, panels: usize) -> Self {
        let n = spec.max_lag;
        let dt = spec.dt;
        let mut ii = vec![T::zero(); n + 1];
        let mut ei = vec![T::zero(); n + 1];
        let mut lr = vec![T::zero(); n + 1];
        let mut ee = T::zero();
        let width = spec.omega_max / T::from_usize_lossy(panels);
        let inv_pi = T::one() / T::PI();
        let dt2 = dt * dt;
        for p in 0..panels {
            let lo = width * T::from_usize_lossy(p);
            let half = width * T::lit(0.5);
            let mid = lo + half;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let omega = mid + half * *x;
                let f = *w * half * inv_pi * noise_spectrum(&spec.bath, spec.mode_frequency, omega) * dt2;
                if f == T::zero() {
                    continue;
                }
                let a = omega * dt;
                let (psi, h0) = hat_transforms(a);
                let h0sq = h0 * h0;
                ee += f * h0.norm_sqr();
                ii[0] += f * psi * psi;
                // z = e^{-iωm·dt}, advanced by rotation and renormalised periodically.
                let rot = Complex::new(a.cos(), -a.sin());
                let mut z = Complex::new(T::one(), T::zero());
                let fpsi = f * psi;
                let fpsi2 = fpsi * psi;
                for m in 1..=n {
                    z = z * rot;
                    if m % 64 == 0 {
                        z = Complex::new((a * T::from_usize_lossy(m)).cos(), -(a * T::from_usize_lossy(m)).sin());
                    }
                    ii[m] += fpsi2 * z.re;
                    ei[m] += fpsi * (h0.re * z.re - h0.im * z.im);
                    lr[m] += f * (h0sq.re * z.re - h0sq.im * z.im);
                }
            }
        }
        NoiseKernel {
            dt,
            max_lag: n,
            ii,
            ei,
            lr,
            ee,
            panels,
        }
    }

    fn max_change(&self, finer: &Self) -> T {
        let mut scale = finer.ee.abs();
        let mut diff = (finer.ee - self.ee).abs();
        for (a, b) in [
            (&self.ii, &finer.ii),
            (&self.ei, &finer.ei),
            (&self.lr, &finer.lr),
        ] {
            for (x, y) in a.iter().zip(b.iter()) {
                scale = scale.max(y.abs());
                diff = diff.max((*x - *y).abs());
            }
        }
        if scale > T::zero() {
            diff / scale
        } else {
            T::zero()
        }
    }

    /// Builds the lag weights; with `check` the panel count is doubled until
    /// the weights are stable to `tol` relative (at most three doublings).
    pub fn build(spec: &KernelSpec<T>, check: bool, tol: T) -> Result<Self> {
        let rule = GaussLegendre::new(spec.panel_nodes);
        let h = Self::base_panel_width(spec);
        let mut panels = (spec.omega_max / h).ceil().to_usize().unwrap_or(1).max(1);
        let mut current = Self::integrate(spec, &rule, panels);
        if !check {
            return Ok(current);
        }
        let mut change = T::zero();
        for _ in 0..3 {
            panels *= 2;
            let finer = Self::integrate(spec, &rule, panels);
            change = current.max_change(&finer);
            current = finer;
            if change <= tol {
                return Ok(current);
            }
        }
        Err(Error::QuadratureNotConverged {
            change: change.to_f64_lossy(),
            panels,
        })
    }

    /// Weight of the pair (interior or left end at `k`, interior at `n`), `k < n`.
    #[inline]
    pub fn interior_weight(&self, n: usize, k: usize) -> T {
        let lag = n - k;
        if lag > self.max_lag {
            T::zero()
        } else if k == 0 {
            self.ei[lag]
        } else {
            self.ii[lag]
        }
    }

    /// Weight of the pair (interior or left end at `k`, right end at `n`), `k < n`.
    #[inline]
    pub fn right_weight(&self, n: usize, k: usize) -> T {
        let lag = n - k;
        if lag > self.max_lag {
            T::zero()
        } else if k == 0 {
            self.lr[lag]
        } else {
            self.ei[lag]
        }
    }

    /// Diagonal weight of index `k` when it is not the right end.
    #[inline]
    pub fn diagonal_weight(&self, k: usize) -> T {
        if k == 0 {
            self.ee
        } else {
            self.ii[0]
        }
    }
}

/// Per-bath lag weights for a configuration; `None` entries are uncoupled baths.
#[derive(Clone, Debug)]
pub struct NoisePlan<T: Scalar> {
    pub kernels: [Option<NoiseKernel<T>>; 2],
}

/// Row of the extended state where bath `b`'s force acts.
pub const NOISE_ROWS: [usize; 2] = [P1, P2];

impl<T: Scalar> NoisePlan<T> {
    pub fn new(config: &SystemConfig<T>) -> Result<Self> {
        let dt = config.grid.dt;
        let horizon = config.memory_horizon();
        let by_horizon = (horizon / dt).ceil().to_usize().unwrap_or(usize::MAX);
        let max_lag = by_horizon.min(config.grid.n_steps).max(1);
        let omega_max = config.omega_max();
        let mut kernels = [None, None];
        for (slot, (bath, mode)) in kernels.iter_mut().zip([
            (&config.mech_bath, &config.mech),
            (&config.opt_bath, &config.opt),
        ]) {
            if bath.is_coupled() {
                let spec = KernelSpec {
                    bath: *bath,
                    mode_frequency: mode.frequency,
                    dt,
                    max_lag,
                    omega_max,
                    panel_nodes: config.numerics.panel_nodes,
                };
                *slot = Some(NoiseKernel::build(
                    &spec,
                    config.numerics.check_convergence,
                    config.numerics.quadrature_tol,
                )?);
            }
        }
        Ok(NoisePlan { kernels })
    }

    pub fn is_silent(&self) -> bool {
        self.kernels.iter().all(|k| k.is_none())
    }

    pub fn max_lag(&self) -> usize {
        self.kernels
            .iter()
            .flatten()
            .map(|k| k.max_lag)
            .max()
            .unwrap_or(0)
    }
}

/// `I(t_j)` by the explicit double sum over stored one-step propagators.
///
/// `steps[k]` propagates grid point `k` to `k + 1`. Costs `O(j · max_lag)`.
pub fn noise_double_sum<T: Scalar>(plan: &NoisePlan<T>, steps: &[Mat6<T>], j: usize) -> Mat6<T> {
    let mut out = Mat6::zeros();
    if j == 0 || plan.is_silent() {
        return out;
    }
    let lag_cap = plan.max_lag();
    let first = j.saturating_sub(lag_cap);
    // G(t_j, t_k) for k = j down to `first`; only columns hit by noise are kept.
    let mut cols: Vec<[Vec6<T>; 2]> = vec![[[T::zero(); 6]; 2]; j - first + 1];
    let mut g = Mat6::identity();
    for k in (first..=j).rev() {
        if k < j {
            g = g * steps[k];
        }
        cols[k - first] = [g.column(P1), g.column(P2)];
    }
    let kind = |k: usize| -> u8 {
        if k == 0 {
            0
        } else if k == j {
            2
        } else {
            1
        }
    };
    for (b, kernel) in plan.kernels.iter().enumerate() {
        let Some(kernel) = kernel else { continue };
        for a in first..=j {
            let mut y = [T::zero(); 6];
            for c in first..=j {
                let (lo, hi) = if a <= c { (a, c) } else { (c, a) };
                let lag = hi - lo;
                if lag > kernel.max_lag {
                    continue;
                }
                let w = pair_weight(kernel, kind(lo), kind(hi), lag);
                if w == T::zero() {
                    continue;
                }
                let v = &cols[c - first][b];
                for r in 0..6 {
                    y[r] += w * v[r];
                }
            }
            let v = &cols[a - first][b];
            for r in 0..6 {
                for s in 0..6 {
                    out[(r, s)] += v[r] * y[s];
                }
            }
        }
    }
    out.symmetrize();
    out
}

/// Hat types: 0 left end, 1 interior, 2 right end. `lo_kind` belongs to the earlier index.
fn pair_weight<T: Scalar>(k: &NoiseKernel<T>, lo_kind: u8, hi_kind: u8, lag: usize) -> T {
    match (lo_kind, hi_kind) {
        (0, 0) | (2, 2) => k.ee,
        (1, 1) => k.ii[lag],
        (0, 1) | (1, 2) => k.ei[lag],
        (0, 2) => k.lr[lag],
        _ => unreachable!("earlier index cannot be a right end"),
    }
}

/// `I(t_j)` straight from the frequency integral: `F_b(ω)` is assembled from
/// the hat transforms of the sampled response and `Re[F F†]` is integrated by
/// the same composite Gauss-Legendre panels. Ignores the memory horizon;
/// `O(nodes · j)`, intended for cross-checks on short runs.
pub fn noise_spectral_sum<T: Scalar>(
    config: &SystemConfig<T>,
    steps: &[Mat6<T>],
    j: usize,
    panels: usize,
) -> Mat6<T> {
    let mut out = Mat6::zeros();
    if j == 0 {
        return out;
    }
    let dt = config.grid.dt;
    let mut cols: Vec<[Vec6<T>; 2]> = vec![[[T::zero(); 6]; 2]; j + 1];
    let mut g = Mat6::identity();
    for k in (0..=j).rev() {
        if k < j {
            g = g * steps[k];
        }
        cols[k] = [g.column(P1), g.column(P2)];
    }
    let rule = GaussLegendre::<T>::new(config.numerics.panel_nodes);
    let omega_max = config.omega_max();
    let width = omega_max / T::from_usize_lossy(panels);
    for (b, (bath, mode)) in [(&config.mech_bath, &config.mech), (&config.opt_bath, &config.opt)]
        .into_iter()
        .enumerate()
    {
        if !bath.is_coupled() {
            continue;
        }
        for p in 0..panels {
            let half = width * T::lit(0.5);
            let mid = width * T::from_usize_lossy(p) + half;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let omega = mid + half * *x;
                let f = *w * half / T::PI() * noise_spectrum(bath, mode.frequency, omega);
                let a = omega * dt;
                let (psi, h0) = hat_transforms(a);
                let mut fvec = [Complex::new(T::zero(), T::zero()); 6];
                for (k, col) in cols.iter().enumerate() {
                    let phase = a * T::from_usize_lossy(k);
                    let e = Complex::new(phase.cos(), phase.sin());
                    let shape = if k == 0 {
                        h0
                    } else if k == j {
                        h0.conj()
                    } else {
                        Complex::new(psi, T::zero())
                    };
                    let coef = e * shape * dt;
                    for r in 0..6 {
                        fvec[r] += coef * col[b][r];
                    }
                }
                for r in 0..6 {
                    for s in 0..6 {
                        out[(r, s)] += f * (fvec[r] * fvec[s].conj()).re;
                    }
                }
            }
        }
    }
    out.symmetrize();
    out
}
