//! The two-crystal type-I source: the up crystal emits `|HH⟩`, the down
//! crystal emits `|VV⟩`, and the spatial overlap after the single-mode fiber
//! sets how much of the HH↔VV coherence survives.

use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::linalg::{Mat4, C64, ZERO};
use crate::polarization::{
    apply_local, half_waveplate, phase_shifter, DensityMatrix, OneQubitOperator, HH, VV,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceConfig {
    /// Pump polarization angle from horizontal, radians.
    pub pump_angle: f64,
    /// HH amplitude factor of the up crystal.
    pub gain_up: f64,
    /// VV amplitude factor of the down crystal.
    pub gain_down: f64,
    /// Phase of the VV amplitude relative to HH, radians.
    pub relative_phase: f64,
    /// Spatial indistinguishability of the two emission paths, in `[0, 1]`.
    pub overlap_mu: f64,
    /// Poisson mean of pairs per pump pulse.
    pub mean_pairs_per_pulse: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            pump_angle: FRAC_PI_4,
            gain_up: 1.0,
            gain_down: 1.0,
            relative_phase: 0.0,
            overlap_mu: 1.0,
            mean_pairs_per_pulse: 0.01,
        }
    }
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.pump_angle,
            self.gain_up,
            self.gain_down,
            self.relative_phase,
            self.overlap_mu,
            self.mean_pairs_per_pulse,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidConfig("source parameters must be finite".into()));
        }
        if self.gain_up < 0.0 || self.gain_down < 0.0 {
            return Err(Error::InvalidConfig("crystal gains must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.overlap_mu) {
            return Err(Error::InvalidConfig(format!("overlap_mu {} outside [0, 1]", self.overlap_mu)));
        }
        if self.mean_pairs_per_pulse < 0.0 {
            return Err(Error::InvalidConfig("mean_pairs_per_pulse must be non-negative".into()));
        }
        let (a_h, a_v) = self.amplitudes();
        if a_h.norm_sqr() + a_v.norm_sqr() <= 0.0 {
            return Err(Error::DegenerateSource);
        }
        Ok(())
    }

    /// Unnormalized HH and VV amplitudes.
    pub fn amplitudes(&self) -> (C64, C64) {
        let (s, c) = self.pump_angle.sin_cos();
        let a_h = C64::new(self.gain_up * c, 0.0);
        let a_v = C64::from_polar(self.gain_down * s, self.relative_phase);
        (a_h, a_v)
    }
}

/// Two-photon state leaving the fiber.
pub fn emitted_state(cfg: &SourceConfig) -> Result<DensityMatrix> {
    cfg.validate()?;
    let (a_h, a_v) = cfg.amplitudes();
    let n = a_h.norm_sqr() + a_v.norm_sqr();
    let mut m = Mat4::zeros();
    m.0[HH][HH] = C64::new(a_h.norm_sqr() / n, 0.0);
    m.0[VV][VV] = C64::new(a_v.norm_sqr() / n, 0.0);
    let coherence = a_h * a_v.conj() * (cfg.overlap_mu / n);
    m.0[HH][VV] = coherence;
    m.0[VV][HH] = coherence.conj();
    DensityMatrix::new(m)
}

/// Complex ε of the state `HH + ε VV`.
pub fn epsilon_of(cfg: &SourceConfig) -> Result<C64> {
    let (a_h, a_v) = cfg.amplitudes();
    let n = (a_h.norm_sqr() + a_v.norm_sqr()).sqrt();
    if a_h.norm() <= 1e-12 * n || n == 0.0 {
        return Err(Error::EpsilonUndefined);
    }
    Ok(a_v / a_h)
}

/// `cos²Θ |HH⟩⟨HH| + sin²Θ |VV⟩⟨VV|`
pub fn mixed_state(theta: f64) -> DensityMatrix {
    let (s, c) = theta.sin_cos();
    let mut d = [ZERO; 4];
    d[HH] = C64::new(c * c, 0.0);
    d[VV] = C64::new(s * s, 0.0);
    DensityMatrix::new(Mat4::diag(d)).expect("diagonal mixture is a valid state")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arm {
    One,
    Two,
}

/// Phase shifter followed by an optional half-wave plate on one arm.
/// `hwp_angle = None` means no plate is inserted.
pub fn bell_transform(
    rho: &DensityMatrix,
    hwp_angle: Option<f64>,
    shifter_phase: f64,
    arm: Arm,
) -> Result<DensityMatrix> {
    let plate = hwp_angle.map(half_waveplate).unwrap_or_else(OneQubitOperator::identity);
    let element = plate.then_after(&phase_shifter(shifter_phase));
    let id = OneQubitOperator::identity();
    let (out, _) = match arm {
        Arm::One => apply_local(rho, &element, &id)?,
        Arm::Two => apply_local(rho, &id, &element)?,
    };
    Ok(out)
}
