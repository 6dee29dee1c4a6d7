//! Two-photon polarization states and Jones-calculus elements.
//!
//! Basis ordering throughout is `{HH, HV, VH, VV}`, with photon 1 (arm 1)
//! on the most significant index. Analyzer angles are measured
//! counterclockwise from horizontal, looking along the propagation direction,
//! and every probability is computed as an operator trace.

use std::f64::consts::FRAC_1_SQRT_2;
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, outer, singular_values, Mat2, Mat4, C64, ONE, ZERO};

/// Normalization and Hermiticity tolerance for constructed states.
pub const STATE_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted (and then clamped to zero).
pub const PSD_FLOOR: f64 = -1e-10;
/// Pass probabilities at or below this are treated as a blocked state.
pub const BLOCKED_TOL: f64 = 1e-15;

pub const HH: usize = 0;
pub const HV: usize = 1;
pub const VH: usize = 2;
pub const VV: usize = 3;

/// Normalized two-photon polarization ket.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PureState {
    amplitudes: [C64; 4],
}

impl PureState {
    /// Normalizes `amplitudes`; fails on the zero vector.
    pub fn new(amplitudes: [C64; 4]) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm <= f64::MIN_POSITIVE {
            return Err(Error::InvalidState(format!("cannot normalize ket with norm {norm}")));
        }
        Ok(Self { amplitudes: amplitudes.map(|a| a / norm) })
    }

    pub fn from_real(amplitudes: [f64; 4]) -> Result<Self> {
        Self::new(amplitudes.map(|a| C64::new(a, 0.0)))
    }

    /// One of the product basis kets `HH`, `HV`, `VH`, `VV`.
    pub fn basis(index: usize) -> Self {
        let mut amplitudes = [ZERO; 4];
        amplitudes[index] = ONE;
        Self { amplitudes }
    }

    pub fn amplitudes(&self) -> &[C64; 4] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [BellKind::PhiPlus, BellKind::PhiMinus, BellKind::PsiPlus, BellKind::PsiMinus];
}

pub fn bell_state(kind: BellKind) -> PureState {
    let r = FRAC_1_SQRT_2;
    let amps = match kind {
        BellKind::PhiPlus => [r, 0.0, 0.0, r],
        BellKind::PhiMinus => [r, 0.0, 0.0, -r],
        BellKind::PsiPlus => [0.0, r, r, 0.0],
        BellKind::PsiMinus => [0.0, r, -r, 0.0],
    };
    PureState { amplitudes: amps.map(|a| C64::new(a, 0.0)) }
}

/// Hermitian, unit-trace, positive-semidefinite two-qubit state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: Mat4,
}

impl DensityMatrix {
    /// Validates `entries`. Eigenvalues in `[PSD_FLOOR, 0)` are clamped to
    /// zero and the matrix rebuilt from the clamped spectrum.
    pub fn new(entries: Mat4) -> Result<Self> {
        if entries.0.iter().flatten().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let herm = entries.hermiticity_error();
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (max |ρ-ρ†| = {herm:e})")));
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let (vals, vecs) = hermitian_eigen(&entries);
        let min = vals[3];
        if min < PSD_FLOOR {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        if min < 0.0 {
            let clamped = vals.map(|v| C64::new(v.max(0.0), 0.0));
            let total: f64 = clamped.iter().map(|c| c.re).sum();
            let rebuilt = vecs * Mat4::diag(clamped.map(|c| c / total)) * vecs.adjoint();
            return Ok(Self { entries: hermitize(rebuilt) });
        }
        Ok(Self { entries: hermitize(entries) })
    }

    /// Builds from a matrix known to be Hermitian, PSD and unit trace up to
    /// rounding; only re-symmetrizes.
    pub(crate) fn from_trusted(entries: Mat4) -> Self {
        Self { entries: hermitize(entries) }
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.entries
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.entries.0[row][col]
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> [f64; 4] {
        hermitian_eigen(&self.entries).0
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }
}

/// Averages `m` with its adjoint.
fn hermitize(m: Mat4) -> Mat4 {
    (m + m.adjoint()).scale(C64::new(0.5, 0.0))
}

pub fn pure_to_density(psi: &PureState) -> DensityMatrix {
    DensityMatrix::from_trusted(outer(psi.amplitudes(), psi.amplitudes()))
}

/// A 2×2 Jones-calculus element acting on one photon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OneQubitOperator(Mat2);

impl OneQubitOperator {
    pub fn identity() -> Self {
        Self(Mat2::identity())
    }

    pub fn from_matrix(m: Mat2) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (self.0.adjoint() * self.0).max_abs_diff(&Mat2::identity()) <= tol
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        (self.0 * self.0).max_abs_diff(&self.0) <= tol && self.0.hermiticity_error() <= tol
    }

    /// Operator product `self · rhs` (`rhs` acts first).
    pub fn then_after(&self, rhs: &OneQubitOperator) -> Self {
        Self(self.0 * rhs.0)
    }
}

/// Ideal linear analyzer: projector onto `cos θ|H⟩ + sin θ|V⟩`.
pub fn polarizer(theta: f64) -> OneQubitOperator {
    let (s, c) = theta.sin_cos();
    OneQubitOperator(Mat2::from_real([[c * c, c * s], [c * s, s * s]]))
}

/// Half-wave plate with fast axis at `theta_fast`.
pub fn half_waveplate(theta_fast: f64) -> OneQubitOperator {
    let (s, c) = (2.0 * theta_fast).sin_cos();
    OneQubitOperator(Mat2::from_real([[c, s], [s, -c]]))
}

/// Retarder `diag(1, e^{iφ})` adding phase to the vertical component.
pub fn phase_shifter(phi: f64) -> OneQubitOperator {
    OneQubitOperator(Mat2::diag([ONE, C64::from_polar(1.0, phi)]))
}

/// `opA ⊗ opB`, keeping both factors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoQubitOperator {
    arm1: OneQubitOperator,
    arm2: OneQubitOperator,
    joint: Mat4,
}

impl TwoQubitOperator {
    pub fn local(arm1: OneQubitOperator, arm2: OneQubitOperator) -> Self {
        Self { arm1, arm2, joint: arm1.0.kron(&arm2.0) }
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.joint
    }

    pub fn factors(&self) -> (&OneQubitOperator, &OneQubitOperator) {
        (&self.arm1, &self.arm2)
    }
}

/// Applies `opA ⊗ opB` as a (possibly non-trace-preserving) operation.
/// Returns the renormalized output state and the pass probability.
pub fn apply_local(
    rho: &DensityMatrix,
    op_a: &OneQubitOperator,
    op_b: &OneQubitOperator,
) -> Result<(DensityMatrix, f64)> {
    let k = TwoQubitOperator::local(*op_a, *op_b);
    let out = *k.matrix() * rho.entries * k.matrix().adjoint();
    let pass = out.trace().re;
    if pass <= BLOCKED_TOL {
        return Err(Error::FullyBlocked(pass));
    }
    let normalized = out.scale(C64::new(1.0 / pass, 0.0));
    Ok((DensityMatrix::new(hermitize(normalized))?, pass.min(1.0)))
}

fn analyzer_vector(theta1: f64, theta2: f64) -> [f64; 4] {
    let (s1, c1) = theta1.sin_cos();
    let (s2, c2) = theta2.sin_cos();
    [c1 * c2, c1 * s2, s1 * c2, s1 * s2]
}

/// `Tr[ρ (Π(θ₁) ⊗ Π(θ₂))]`.
pub fn coincidence_probability(rho: &DensityMatrix, theta1: f64, theta2: f64) -> f64 {
    // The joint projector is |v⟩⟨v| with a real product vector v.
    let v = analyzer_vector(theta1, theta2);
    let mut p = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            p += v[i] * v[j] * rho.entries.0[i][j].re;
        }
    }
    p.clamp(0.0, 1.0)
}

/// Joint outcome distribution for analyzers at `theta1` (photon 1) and
/// `theta2` (photon 2), ordered (pass, pass), (pass, block), (block, pass),
/// (block, block).
pub fn analyzer_outcomes(rho: &DensityMatrix, theta1: f64, theta2: f64) -> [f64; 4] {
    let perp1 = theta1 + FRAC_PI_2;
    let perp2 = theta2 + FRAC_PI_2;
    [
        coincidence_probability(rho, theta1, theta2),
        coincidence_probability(rho, theta1, perp2),
        coincidence_probability(rho, perp1, theta2),
        coincidence_probability(rho, perp1, perp2),
    ]
}

/// Probability that photon 1 passes an analyzer at `theta`, photon 2 unmeasured.
pub fn marginal_arm1(rho: &DensityMatrix, theta: f64) -> f64 {
    let [pp, pb, _, _] = analyzer_outcomes(rho, theta, 0.0);
    (pp + pb).clamp(0.0, 1.0)
}

/// Probability that photon 2 passes an analyzer at `theta`, photon 1 unmeasured.
pub fn marginal_arm2(rho: &DensityMatrix, theta: f64) -> f64 {
    let [pp, _, bp, _] = analyzer_outcomes(rho, 0.0, theta);
    (pp + bp).clamp(0.0, 1.0)
}

/// Polarization correlation `E(θ₁, θ₂)` in `[-1, 1]`.
pub fn correlation_e(rho: &DensityMatrix, theta1: f64, theta2: f64) -> f64 {
    let [pp, pb, bp, bb] = analyzer_outcomes(rho, theta1, theta2);
    let total = pp + pb + bp + bb;
    if total <= 0.0 {
        return 0.0;
    }
    ((pp + bb - pb - bp) / total).clamp(-1.0, 1.0)
}

/// `σy ⊗ σy` in the `{HH, HV, VH, VV}` basis.
fn spin_flip() -> Mat4 {
    Mat4::from_real([
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
    ])
}

/// Wootters concurrence.
///
/// With `ρ = W W†` (columns of `W` are eigenvectors scaled by `√p`), the
/// Wootters λᵢ are the singular values of `Wᵀ (σy⊗σy) W`. Computing them as
/// singular values keeps the small λᵢ accurate even for rank-deficient
/// states, where taking square roots of eigenvalues of `ρρ̃` would not.
pub fn concurrence(rho: &DensityMatrix) -> f64 {
    let (vals, vecs) = hermitian_eigen(&rho.entries);
    let mut w = vecs;
    for (k, p) in vals.iter().enumerate() {
        let s = p.max(0.0).sqrt();
        for r in 0..4 {
            w.0[r][k] *= s;
        }
    }
    let tau = w.transpose() * spin_flip() * w;
    let [l1, l2, l3, l4] = singular_values(&tau);
    (l1 - l2 - l3 - l4).clamp(0.0, 1.0)
}

/// `Tr[ρ²]`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.entries.0.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>().clamp(0.0, 1.0)
}
