//! Reference solutions written independently of the `optocool` numerics:
//! closed-form dynamics, a separate quadrature and a separate symplectic
//! spectrum, used as oracles by the test suites.

use std::f64::consts::PI;

/// `n`-point Gauss-Legendre rule on `[-1, 1]` from Newton iteration on `P_n`.
pub struct Legendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Legendre {
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Legendre { nodes, weights }
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        half * self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(mid + half * x)).sum::<f64>()
    }
}

/// `(2/π)∫₀^∞ J(ω)/ω cos(ωτ) dω` for `J = rate·ω·c²/(ω²+c²)`.
///
/// Panels widen geometrically until they reach the oscillation scale; the
/// region past `top` is closed with the integration-by-parts tail series.
pub fn friction_transform(rate: f64, cutoff: f64, tau: f64) -> f64 {
    let f = |w: f64| rate * cutoff * cutoff / (w * w + cutoff * cutoff);
    let gl = Legendre::new(24);
    let top = if tau > 0.0 { (1e3 * cutoff).max(2e3 / tau) } else { 1e3 * cutoff };
    let osc = if tau > 0.0 { PI / (2.0 * tau) } else { f64::INFINITY };
    let mut lo = 0.0;
    let mut acc = 0.0;
    while lo < top {
        let width = (cutoff / 8.0).max(lo / 8.0).min(osc).min(top - lo);
        acc += gl.integrate(lo, lo + width, |w| f(w) * (w * tau).cos());
        lo += width;
    }
    let tail = if tau > 0.0 {
        // ∫_T^∞ f cos = -f sin/τ - f' cos/τ² + f'' sin/τ³ + f''' cos/τ⁴
        let t = top;
        let d = t * t + cutoff * cutoff;
        let k = rate * cutoff * cutoff;
        let f0 = k / d;
        let f1 = -2.0 * k * t / (d * d);
        let f2 = k * (6.0 * t * t - 2.0 * cutoff * cutoff) / (d * d * d);
        let f3 = k * 24.0 * t * (cutoff * cutoff - t * t) / (d * d * d * d);
        let (s, c) = (t * tau).sin_cos();
        -f0 * s / tau - f1 * c / tau.powi(2) + f2 * s / tau.powi(3) + f3 * c / tau.powi(4)
    } else {
        rate * cutoff * (PI / 2.0 - (top / cutoff).atan())
    };
    2.0 / PI * (acc + tail)
}

/// Exact phase-space map over `(q1, p1, q2, p2)` for two unit-frequency
/// oscillators with `q̇ = p`, `ṗ_1 = -q_1 - λ q_2`, `ṗ_2 = -q_2 - λ q_1`,
/// `λ = 2g`, built in the normal-mode basis `q± = (q1 ± q2)/√2`.
pub fn normal_mode_map(g: f64, t: f64) -> [[f64; 4]; 4] {
    let lambda = 2.0 * g;
    let block = |w: f64| {
        let (s, c) = (w * t).sin_cos();
        [[c, s / w], [-w * s, c]]
    };
    let plus = block((1.0 + lambda).sqrt());
    let minus = block((1.0 - lambda).sqrt());
    // (q1,p1) = ((q+ + q-)/√2, ...), (q2,p2) = ((q+ - q-)/√2, ...)
    let mut m = [[0.0; 4]; 4];
    for a in 0..2 {
        for b in 0..2 {
            let sum = 0.5 * (plus[a][b] + minus[a][b]);
            let diff = 0.5 * (plus[a][b] - minus[a][b]);
            m[a][b] = sum;
            m[a + 2][b + 2] = sum;
            m[a][b + 2] = diff;
            m[a + 2][b] = diff;
        }
    }
    m
}

/// `M S Mᵀ` for 4×4 matrices.
pub fn sandwich4(m: &[[f64; 4]; 4], s: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    acc += m[i][a] * s[a][b] * m[j][b];
                }
            }
            out[i][j] = acc;
        }
    }
    out
}

/// Thermal covariance over `(q1, p1, q2, p2)` for unit frequencies.
pub fn thermal4(n1: f64, n2: f64) -> [[f64; 4]; 4] {
    let mut s = [[0.0; 4]; 4];
    s[0][0] = n1 + 0.5;
    s[1][1] = n1 + 0.5;
    s[2][2] = n2 + 0.5;
    s[3][3] = n2 + 0.5;
    s
}

/// Lindblad decay of the occupation towards the bath value.
pub fn lindblad_occupation(n0: f64, n_bath: f64, rate: f64, t: f64) -> f64 {
    n_bath + (n0 - n_bath) * (-rate * t).exp()
}

/// Symplectic eigenvalues of a two-mode covariance over `(q1, p1, q2, p2)`
/// as the moduli of the eigenvalues of `iΩσ`, from the characteristic
/// polynomial `x⁴ - Δ x² + det σ` with `Δ = -tr((Ωσ)²)/2`.
pub fn symplectic_spectrum(s: &[[f64; 4]; 4]) -> (f64, f64) {
    // Ωσ with Ω = diag(J, J), J = [[0, 1], [-1, 0]]
    let mut w = [[0.0; 4]; 4];
    for m in 0..2 {
        for c in 0..4 {
            w[2 * m][c] = s[2 * m + 1][c];
            w[2 * m + 1][c] = -s[2 * m][c];
        }
    }
    let mut tr = 0.0;
    for i in 0..4 {
        for k in 0..4 {
            tr += w[i][k] * w[k][i];
        }
    }
    let delta = -0.5 * tr;
    let det = lu_determinant(s);
    let disc = (delta * delta - 4.0 * det).max(0.0).sqrt();
    let hi = 0.5 * (delta + disc);
    ((det / hi).max(0.0).sqrt(), hi.sqrt())
}

/// Determinant with complete pivoting.
pub fn lu_determinant(m: &[[f64; 4]; 4]) -> f64 {
    let mut a = *m;
    let mut det = 1.0;
    for k in 0..4 {
        let (mut pi, mut pj) = (k, k);
        for i in k..4 {
            for j in k..4 {
                if a[i][j].abs() > a[pi][pj].abs() {
                    pi = i;
                    pj = j;
                }
            }
        }
        if a[pi][pj] == 0.0 {
            return 0.0;
        }
        if pi != k {
            a.swap(pi, k);
            det = -det;
        }
        if pj != k {
            for row in a.iter_mut() {
                row.swap(pj, k);
            }
            det = -det;
        }
        det *= a[k][k];
        for i in k + 1..4 {
            let f = a[i][k] / a[k][k];
            for j in k + 1..4 {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    det
}

/// Fourth-order central difference `(-f(x+2h) + 8f(x+h) - 8f(x-h) + f(x-2h))/(12h)`.
pub fn four_point_derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_is_exact_for_polynomials() {
        let gl = Legendre::new(8);
        let v = gl.integrate(0.0, 2.0, |x| x.powi(15) - 3.0 * x.powi(4));
        assert!((v - (2f64.powi(16) / 16.0 - 3.0 * 32.0 / 5.0)).abs() < 1e-9);
    }

    #[test]
    fn transform_at_zero_lag_is_the_rate_times_cutoff() {
        let v = friction_transform(1e-2, 3.0, 0.0);
        assert!((v - 3e-2).abs() < 1e-12 * 3e-2 + 1e-15);
    }

    #[test]
    fn thermal_spectrum() {
        let (lo, hi) = symplectic_spectrum(&thermal4(0.0, 7.0));
        assert!((lo - 0.5).abs() < 1e-14 && (hi - 7.5).abs() < 1e-13);
    }

    #[test]
    fn normal_modes_reduce_to_rotation() {
        let m = normal_mode_map(0.0, 0.5);
        assert!((m[0][0] - 0.5f64.cos()).abs() < 1e-15);
        assert!((m[0][1] - 0.5f64.sin()).abs() < 1e-15);
        assert_eq!(m[0][2], 0.0);
    }

    #[test]
    fn stencil_on_a_quartic() {
        let d = four_point_derivative(|x| x.powi(4), 1.5, 1e-2);
        assert!((d - 4.0 * 1.5f64.powi(3)).abs() < 1e-9);
    }
}
