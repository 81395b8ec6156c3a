//! Fixed-size dense matrices for the six-dimensional extended phase space.
//!
//! The extended state is ordered `(q1, p1, u1, q2, p2, u2)`; `u_i` is the memory
//! auxiliary of mode `i`. The physical block keeps `(q1, p1, q2, p2)`.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Sub};

use crate::scalar::Scalar;

pub const DIM: usize = 6;

pub const Q1: usize = 0;
pub const P1: usize = 1;
pub const U1: usize = 2;
pub const Q2: usize = 3;
pub const P2: usize = 4;
pub const U2: usize = 5;

/// Indices of the physical quadratures inside the extended state.
pub const PHYSICAL: [usize; 4] = [Q1, P1, Q2, P2];

pub type Vec6<T> = [T; DIM];

/// Dense 6×6 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat6<T: Scalar>(pub [[T; DIM]; DIM]);

impl<T: Scalar> Default for Mat6<T> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<T: Scalar> Mat6<T> {
    pub fn zeros() -> Self {
        Mat6([[T::zero(); DIM]; DIM])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..DIM {
            m.0[i][i] = T::one();
        }
        m
    }

    pub fn from_diagonal(d: &Vec6<T>) -> Self {
        let mut m = Self::zeros();
        for i in 0..DIM {
            m.0[i][i] = d[i];
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros();
        for i in 0..DIM {
            for j in 0..DIM {
                t.0[j][i] = self.0[i][j];
            }
        }
        t
    }

    pub fn scale(&self, s: T) -> Self {
        let mut m = *self;
        for row in m.0.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &Vec6<T>) -> Vec6<T> {
        let mut out = [T::zero(); DIM];
        for (o, row) in out.iter_mut().zip(self.0.iter()) {
            let mut acc = T::zero();
            for j in 0..DIM {
                acc += row[j] * v[j];
            }
            *o = acc;
        }
        out
    }

    /// `self · s · selfᵀ`.
    pub fn sandwich(&self, s: &Mat6<T>) -> Mat6<T> {
        let left = *self * *s;
        let mut out = Self::zeros();
        for i in 0..DIM {
            for j in 0..DIM {
                let mut acc = T::zero();
                for k in 0..DIM {
                    acc += left.0[i][k] * self.0[j][k];
                }
                out.0[i][j] = acc;
            }
        }
        out
    }

    /// Replaces the matrix by its symmetric part.
    pub fn symmetrize(&mut self) {
        let half = T::lit(0.5);
        for i in 0..DIM {
            for j in (i + 1)..DIM {
                let m = (self.0[i][j] + self.0[j][i]) * half;
                self.0[i][j] = m;
                self.0[j][i] = m;
            }
        }
    }

    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..DIM {
            for j in (i + 1)..DIM {
                worst = worst.max((self.0[i][j] - self.0[j][i]).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> T {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .fold(T::zero(), |acc, x| acc.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flat_map(|r| r.iter()).all(|x| x.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Mat6<T>) -> T {
        let mut worst = T::zero();
        for i in 0..DIM {
            for j in 0..DIM {
                worst = worst.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        worst
    }

    pub fn column(&self, j: usize) -> Vec6<T> {
        let mut c = [T::zero(); DIM];
        for (i, x) in c.iter_mut().enumerate() {
            *x = self.0[i][j];
        }
        c
    }

    /// Restriction to the `(q1, p1, q2, p2)` rows and columns.
    pub fn physical_block(&self) -> Mat4<T> {
        let mut b = [[T::zero(); 4]; 4];
        for (a, &i) in PHYSICAL.iter().enumerate() {
            for (c, &j) in PHYSICAL.iter().enumerate() {
                b[a][c] = self.0[i][j];
            }
        }
        b
    }

    /// Inverse via LU factorisation with partial pivoting. `None` when a pivot
    /// vanishes relative to the matrix scale.
    pub fn inverse(&self) -> Option<Mat6<T>> {
        let mut a = self.0;
        let mut inv = Self::identity().0;
        let scale = self.max_abs();
        if !(scale > T::zero()) || !scale.is_finite() {
            return None;
        }
        let tiny = scale * T::epsilon() * T::lit(16.0);
        for col in 0..DIM {
            let mut piv = col;
            for r in (col + 1)..DIM {
                if a[r][col].abs() > a[piv][col].abs() {
                    piv = r;
                }
            }
            if a[piv][col].abs() <= tiny {
                return None;
            }
            a.swap(col, piv);
            inv.swap(col, piv);
            let d = a[col][col];
            for r in 0..DIM {
                if r == col {
                    continue;
                }
                let f = a[r][col] / d;
                if f == T::zero() {
                    continue;
                }
                for c in 0..DIM {
                    let ac = a[col][c];
                    let ic = inv[col][c];
                    a[r][c] -= f * ac;
                    inv[r][c] -= f * ic;
                }
            }
        }
        for r in 0..DIM {
            let d = a[r][r];
            for c in 0..DIM {
                inv[r][c] /= d;
            }
        }
        Some(Mat6(inv))
    }
}

impl<T: Scalar> Index<(usize, usize)> for Mat6<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.0[i][j]
    }
}

impl<T: Scalar> IndexMut<(usize, usize)> for Mat6<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.0[i][j]
    }
}

impl<T: Scalar> Mul for Mat6<T> {
    type Output = Mat6<T>;
    fn mul(self, rhs: Mat6<T>) -> Mat6<T> {
        let mut out = Mat6::zeros();
        for i in 0..DIM {
            for k in 0..DIM {
                let a = self.0[i][k];
                if a == T::zero() {
                    continue;
                }
                for j in 0..DIM {
                    out.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        out
    }
}

impl<T: Scalar> Add for Mat6<T> {
    type Output = Mat6<T>;
    fn add(mut self, rhs: Mat6<T>) -> Mat6<T> {
        self += rhs;
        self
    }
}

impl<T: Scalar> AddAssign for Mat6<T> {
    fn add_assign(&mut self, rhs: Mat6<T>) {
        for i in 0..DIM {
            for j in 0..DIM {
                self.0[i][j] += rhs.0[i][j];
            }
        }
    }
}

impl<T: Scalar> Sub for Mat6<T> {
    type Output = Mat6<T>;
    fn sub(mut self, rhs: Mat6<T>) -> Mat6<T> {
        for i in 0..DIM {
            for j in 0..DIM {
                self.0[i][j] -= rhs.0[i][j];
            }
        }
        self
    }
}

pub type Mat4<T> = [[T; 4]; 4];

pub fn det2<T: Scalar>(a: T, b: T, c: T, d: T) -> T {
    a * d - b * c
}

/// Determinant by Gaussian elimination with partial pivoting, which keeps
/// the error relative to the conditioning instead of the entry scale.
pub fn det4<T: Scalar>(m: &Mat4<T>) -> T {
    let mut a = *m;
    let mut det = T::one();
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(col);
        if a[pivot][col] == T::zero() {
            return T::zero();
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        let p = a[col][col];
        det *= p;
        for r in col + 1..4 {
            let f = a[r][col] / p;
            for c in col + 1..4 {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
        }
    }
    det
}

/// Symplectic eigenvalues `(ν₋, ν₊)` of a two-mode covariance ordered
/// `(q1, p1, q2, p2)`, from the invariants `Δ = det A + det B + 2 det C` and
/// `det σ`.
pub fn symplectic_eigenvalues<T: Scalar>(s: &Mat4<T>) -> (T, T) {
    let det_a = det2(s[0][0], s[0][1], s[1][0], s[1][1]);
    let det_b = det2(s[2][2], s[2][3], s[3][2], s[3][3]);
    let det_c = det2(s[0][2], s[0][3], s[1][2], s[1][3]);
    let delta = det_a + det_b + det_c + det_c;
    let det = det4(s);
    let disc = (delta * delta - T::lit(4.0) * det).max(T::zero()).sqrt();
    let half = T::lit(0.5);
    let plus_sq = (delta + disc) * half;
    // ν₋² ν₊² = det σ avoids the cancellation in Δ − disc
    let minus_sq = if plus_sq > T::zero() { det / plus_sq } else { T::zero() };
    let minus = minus_sq.max(T::zero()).sqrt();
    let plus = plus_sq.max(T::zero()).sqrt();
    (minus, plus)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Mat6<f64> {
        let mut m = Mat6::zeros();
        for i in 0..DIM {
            for j in 0..DIM {
                m.0[i][j] = ((i * 7 + j * 3) % 11) as f64 - 4.5 + if i == j { 9.0 } else { 0.0 };
            }
        }
        m
    }

    #[test]
    fn inverse_roundtrip() {
        let m = sample();
        let inv = m.inverse().unwrap();
        let prod = m * inv;
        assert!(prod.max_abs_diff(&Mat6::identity()) < 1e-12);
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        let mut m = sample();
        for j in 0..DIM {
            m.0[3][j] = 2.0 * m.0[1][j];
        }
        assert!(m.inverse().is_none());
    }

    #[test]
    fn det4_of_permutation_and_diagonal() {
        let d: Mat4<f64> = [
            [2.0, 0.0, 0.0, 0.0],
            [0.0, 3.0, 0.0, 0.0],
            [0.0, 0.0, 5.0, 0.0],
            [0.0, 0.0, 0.0, 7.0],
        ];
        assert_eq!(det4(&d), 210.0);
        let p: Mat4<f64> = [
            [0.0, 1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        assert_eq!(det4(&p), -1.0);
    }

    #[test]
    fn vacuum_and_thermal_symplectic_spectrum() {
        let mut s: Mat4<f64> = [[0.0; 4]; 4];
        s[0][0] = 0.5;
        s[1][1] = 0.5;
        s[2][2] = 10.5 / 3.0;
        s[3][3] = 10.5 * 3.0;
        let (lo, hi) = symplectic_eigenvalues(&s);
        assert!((lo - 0.5).abs() < 1e-14);
        assert!((hi - 10.5).abs() < 1e-12);
    }

    #[test]
    fn squeezed_correlated_spectrum_survives_round_off() {
        // squeezed vacuum (r = 6) in mode 1, thermal n = 100 in mode 2, mixed by a 50:50 beam splitter
        let r = 6.0f64;
        let mut d: Mat4<f64> = [[0.0; 4]; 4];
        d[0][0] = 0.5 * (-2.0 * r).exp();
        d[1][1] = 0.5 * (2.0 * r).exp();
        d[2][2] = 100.5;
        d[3][3] = 100.5;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let b: Mat4<f64> = [[h, 0.0, h, 0.0], [0.0, h, 0.0, h], [-h, 0.0, h, 0.0], [0.0, -h, 0.0, h]];
        let mut s: Mat4<f64> = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                s[i][j] = (0..4).map(|k| b[i][k] * d[k][k] * b[j][k]).sum();
            }
        }
        let (lo, hi) = symplectic_eigenvalues(&s);
        assert!((lo - 0.5).abs() < 1e-8, "{lo}");
        assert!((hi - 100.5).abs() < 1e-8, "{hi}");
    }

    #[test]
    fn sandwich_matches_explicit_product() {
        let a = sample();
        let s = Mat6::from_diagonal(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let direct = a * s * a.transpose();
        assert!(a.sandwich(&s).max_abs_diff(&direct) < 1e-10);
    }
}
