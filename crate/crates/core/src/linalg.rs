//! Small fixed-size complex matrices and the two Jacobi solvers the state
//! code needs: a Hermitian eigendecomposition and a one-sided SVD.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Off-diagonal convergence tolerance for the Jacobi sweeps, relative to the
/// Frobenius norm of the input.
pub const EIGEN_TOL: f64 = 1e-13;

const MAX_SWEEPS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat4(pub [[C64; 4]; 4]);

macro_rules! square_matrix {
    ($name:ident, $n:expr) => {
        impl $name {
            pub const DIM: usize = $n;

            pub fn zeros() -> Self {
                Self([[ZERO; $n]; $n])
            }

            pub fn identity() -> Self {
                let mut m = Self::zeros();
                for i in 0..$n {
                    m.0[i][i] = ONE;
                }
                m
            }

            pub fn from_real(rows: [[f64; $n]; $n]) -> Self {
                let mut m = Self::zeros();
                for i in 0..$n {
                    for j in 0..$n {
                        m.0[i][j] = C64::new(rows[i][j], 0.0);
                    }
                }
                m
            }

            pub fn diag(d: [C64; $n]) -> Self {
                let mut m = Self::zeros();
                for i in 0..$n {
                    m.0[i][i] = d[i];
                }
                m
            }

            /// Conjugate transpose.
            pub fn adjoint(&self) -> Self {
                let mut m = Self::zeros();
                for i in 0..$n {
                    for j in 0..$n {
                        m.0[i][j] = self.0[j][i].conj();
                    }
                }
                m
            }

            pub fn conj(&self) -> Self {
                let mut m = *self;
                for row in m.0.iter_mut() {
                    for x in row.iter_mut() {
                        *x = x.conj();
                    }
                }
                m
            }

            pub fn transpose(&self) -> Self {
                let mut m = Self::zeros();
                for i in 0..$n {
                    for j in 0..$n {
                        m.0[i][j] = self.0[j][i];
                    }
                }
                m
            }

            pub fn trace(&self) -> C64 {
                (0..$n).map(|i| self.0[i][i]).sum()
            }

            pub fn scale(&self, k: C64) -> Self {
                let mut m = *self;
                for row in m.0.iter_mut() {
                    for x in row.iter_mut() {
                        *x *= k;
                    }
                }
                m
            }

            pub fn frobenius_norm(&self) -> f64 {
                self.0
                    .iter()
                    .flat_map(|r| r.iter())
                    .map(|x| x.norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            }

            /// Largest absolute entry of `self - other`.
            pub fn max_abs_diff(&self, other: &Self) -> f64 {
                let mut worst = 0.0f64;
                for i in 0..$n {
                    for j in 0..$n {
                        worst = worst.max((self.0[i][j] - other.0[i][j]).norm());
                    }
                }
                worst
            }

            pub fn hermiticity_error(&self) -> f64 {
                self.max_abs_diff(&self.adjoint())
            }

            pub fn apply(&self, v: &[C64; $n]) -> [C64; $n] {
                let mut out = [ZERO; $n];
                for i in 0..$n {
                    out[i] = (0..$n).map(|j| self.0[i][j] * v[j]).sum();
                }
                out
            }
        }

        impl Index<(usize, usize)> for $name {
            type Output = C64;
            fn index(&self, (i, j): (usize, usize)) -> &C64 {
                &self.0[i][j]
            }
        }

        impl IndexMut<(usize, usize)> for $name {
            fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
                &mut self.0[i][j]
            }
        }

        impl Mul for $name {
            type Output = $name;
            fn mul(self, rhs: $name) -> $name {
                let mut m = $name::zeros();
                for i in 0..$n {
                    for k in 0..$n {
                        let a = self.0[i][k];
                        if a == ZERO {
                            continue;
                        }
                        for j in 0..$n {
                            m.0[i][j] += a * rhs.0[k][j];
                        }
                    }
                }
                m
            }
        }

        impl Add for $name {
            type Output = $name;
            fn add(self, rhs: $name) -> $name {
                let mut m = self;
                for i in 0..$n {
                    for j in 0..$n {
                        m.0[i][j] += rhs.0[i][j];
                    }
                }
                m
            }
        }

        impl Sub for $name {
            type Output = $name;
            fn sub(self, rhs: $name) -> $name {
                let mut m = self;
                for i in 0..$n {
                    for j in 0..$n {
                        m.0[i][j] -= rhs.0[i][j];
                    }
                }
                m
            }
        }
    };
}

square_matrix!(Mat2, 2);
square_matrix!(Mat4, 4);

impl Mat2 {
    /// Tensor product `self ⊗ rhs`, first factor on the most significant index.
    pub fn kron(&self, rhs: &Mat2) -> Mat4 {
        let mut m = Mat4::zeros();
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        m.0[2 * a + c][2 * b + d] = self.0[a][b] * rhs.0[c][d];
                    }
                }
            }
        }
        m
    }
}

/// `|v⟩⟨w|`
pub fn outer(v: &[C64; 4], w: &[C64; 4]) -> Mat4 {
    let mut m = Mat4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            m.0[i][j] = v[i] * w[j].conj();
        }
    }
    m
}

/// `⟨v|w⟩`
pub fn inner(v: &[C64; 4], w: &[C64; 4]) -> C64 {
    v.iter().zip(w).map(|(a, b)| a.conj() * b).sum()
}

/// Unitary `U = diag(1, e^{-iφ}) · [[c, s], [-s, c]]` that diagonalizes the
/// Hermitian block `[[a, g], [conj(g), b]]`; returned as `(c, s, phase)` with
/// `phase = e^{-iφ}`.
fn jacobi_rotation(a: f64, b: f64, g: C64) -> (f64, f64, C64) {
    let r = g.norm();
    let phase = (g / r).conj();
    let theta = (b - a) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    (c, t * c, phase)
}

/// Eigendecomposition of a Hermitian 4×4 matrix by cyclic complex Jacobi
/// rotations. Returns eigenvalues in descending order and the matching
/// eigenvectors as the columns of a unitary matrix, so that
/// `m = V · diag(λ) · V†`.
pub fn hermitian_eigen(m: &Mat4) -> ([f64; 4], Mat4) {
    let mut a = *m;
    // Symmetrize so rounding in the input cannot leave a non-Hermitian residue.
    for i in 0..4 {
        a.0[i][i] = C64::new(a.0[i][i].re, 0.0);
        for j in (i + 1)..4 {
            let avg = (a.0[i][j] + a.0[j][i].conj()) * 0.5;
            a.0[i][j] = avg;
            a.0[j][i] = avg.conj();
        }
    }
    let mut v = Mat4::identity();
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);

    let mut polished = false;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..4)
            .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a.0[i][j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off == 0.0 || polished {
            break;
        }
        // Convergence is quadratic, so one sweep past the tolerance leaves the
        // off-diagonal mass at rounding level.
        polished = off <= EIGEN_TOL * scale;
        for p in 0..3 {
            for q in (p + 1)..4 {
                let g = a.0[p][q];
                if g.norm() <= f64::MIN_POSITIVE {
                    continue;
                }
                let (c, s, phase) = jacobi_rotation(a.0[p][p].re, a.0[q][q].re, g);
                let mut u = Mat4::identity();
                u.0[p][p] = C64::new(c, 0.0);
                u.0[p][q] = C64::new(s, 0.0);
                u.0[q][p] = phase * -s;
                u.0[q][q] = phase * c;
                a = u.adjoint() * a * u;
                a.0[p][q] = ZERO;
                a.0[q][p] = ZERO;
                v = v * u;
            }
        }
    }

    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| a.0[j][j].re.total_cmp(&a.0[i][i].re));
    let mut values = [0.0; 4];
    let mut vectors = Mat4::zeros();
    for (k, &i) in order.iter().enumerate() {
        values[k] = a.0[i][i].re;
        for r in 0..4 {
            vectors.0[r][k] = v.0[r][i];
        }
    }
    (values, vectors)
}

/// Singular values of a complex 4×4 matrix, descending, by one-sided
/// (Hestenes) Jacobi orthogonalization of the columns. Small singular values
/// are resolved to absolute accuracy of order `ε·‖m‖` rather than `√ε·‖m‖`.
pub fn singular_values(m: &Mat4) -> [f64; 4] {
    let mut cols = m.transpose().0;
    let scale = m.frobenius_norm();
    if scale == 0.0 {
        return [0.0; 4];
    }

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..3 {
            for j in (i + 1)..4 {
                let alpha: f64 = cols[i].iter().map(|x| x.norm_sqr()).sum();
                let beta: f64 = cols[j].iter().map(|x| x.norm_sqr()).sum();
                let gamma: C64 = cols[i].iter().zip(&cols[j]).map(|(x, y)| x.conj() * y).sum();
                if gamma.norm() <= 1e-15 * (alpha * beta).sqrt() || gamma.norm() <= f64::MIN_POSITIVE {
                    continue;
                }
                rotated = true;
                let (c, s, phase) = jacobi_rotation(alpha, beta, gamma);
                for r in 0..4 {
                    let x = cols[i][r];
                    let y = cols[j][r];
                    cols[i][r] = x * c - y * phase * s;
                    cols[j][r] = x * s + y * phase * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut values = cols.map(|c| c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt());
    values.sort_by(|a, b| b.total_cmp(a));
    values
}
