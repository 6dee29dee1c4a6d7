//! Independent reference computations shared by the integration suites.

#![allow(dead_code)]

use nalgebra::{Complex, Matrix2, Matrix4};
use pulsepair::linalg::{Mat4, C64};
use pulsepair::DensityMatrix;

type CMat4 = Matrix4<Complex<f64>>;

/// `W W† / Tr` from 32 raw reals, keeping the first `rank` columns of `W`.
pub fn density_from(raw: &[f64], rank: usize) -> DensityMatrix {
    assert!(raw.len() >= 32 && (1..=4).contains(&rank));
    let mut w = Mat4::zeros();
    for r in 0..4 {
        for c in 0..rank {
            let k = 2 * (4 * r + c);
            w.0[r][c] = C64::new(raw[k], raw[k + 1]);
        }
    }
    let m = w * w.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m.scale(C64::new(1.0 / tr, 0.0))).expect("valid by construction")
}

pub fn to_nalgebra(rho: &DensityMatrix) -> CMat4 {
    CMat4::from_fn(|i, j| rho.entry(i, j))
}

fn projector(theta: f64) -> Matrix2<Complex<f64>> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c * c, c * s, c * s, s * s).map(|x| Complex::new(x, 0.0))
}

/// `Tr[ρ (Π(θ₁) ⊗ Π(θ₂))]` by explicit Kronecker product and trace.
pub fn coincidence_oracle(rho: &DensityMatrix, theta1: f64, theta2: f64) -> f64 {
    let k = projector(theta1).kronecker(&projector(theta2));
    let m = to_nalgebra(rho) * k;
    let prod = CMat4::from_iterator(m.iter().copied());
    prod.trace().re
}

/// Wootters concurrence from the eigenvalues of `ρ (σy⊗σy) ρ* (σy⊗σy)`.
pub fn concurrence_oracle(rho: &DensityMatrix) -> f64 {
    let r = to_nalgebra(rho);
    let sy = Matrix2::new(Complex::new(0.0, 0.0), Complex::new(0.0, -1.0), Complex::new(0.0, 1.0), Complex::new(0.0, 0.0));
    let yy = sy.kronecker(&sy);
    let yy = CMat4::from_iterator(yy.iter().copied());
    let tilde = yy * r.conjugate() * yy;
    let prod = r * tilde;
    let eig = prod.schur().eigenvalues().expect("complex Schur always yields eigenvalues");
    let mut l: Vec<f64> = eig.iter().map(|z| z.re.max(0.0).sqrt()).collect();
    l.sort_by(|a, b| b.total_cmp(a));
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

/// Checks Hermiticity, unit trace and positivity.
pub fn assert_density_invariants(rho: &DensityMatrix) {
    let m = rho.matrix();
    assert!(m.hermiticity_error() <= 1e-12, "not Hermitian: {}", m.hermiticity_error());
    assert!((rho.trace() - 1.0).abs() <= 1e-12, "trace {}", rho.trace());
    for ev in rho.eigenvalues() {
        assert!(ev >= -1e-10, "negative eigenvalue {ev}");
    }
}
