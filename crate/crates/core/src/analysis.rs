//! Polarization-interference scans, fringe fitting and CHSH evaluation.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::counting::{expected_rates, simulate_run, CountRecord, DetectorConfig, RunConfig};
use crate::error::{Error, Result};
use crate::polarization::{correlation_e, DensityMatrix};
use crate::rng::derive_seed;
use crate::source::{emitted_state, SourceConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanMode {
    Analytic,
    MonteCarlo,
}

impl ScanMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScanMode::Analytic => "analytic",
            ScanMode::MonteCarlo => "monte-carlo",
        }
    }
}

impl std::str::FromStr for ScanMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(ScanMode::Analytic),
            "monte-carlo" | "mc" => Ok(ScanMode::MonteCarlo),
            other => Err(Error::Parse(format!("unknown mode {other:?} (expected analytic or monte-carlo)"))),
        }
    }
}

/// How user-facing analyzer angles map onto the physical θ₁.
///
/// `Mirrored` (config value `paper`) negates θ₁, which turns the
/// `½cos²(θ₁ − θ₂)` fringe of `|HH⟩ + |VV⟩` into the `cos²(θ₁ + θ₂)` form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AngleConvention {
    #[default]
    Standard,
    Mirrored,
}

impl AngleConvention {
    pub fn physical_theta1(self, theta1: f64) -> f64 {
        match self {
            AngleConvention::Standard => theta1,
            AngleConvention::Mirrored => -theta1,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            AngleConvention::Standard => "standard",
            AngleConvention::Mirrored => "paper",
        }
    }
}

impl std::str::FromStr for AngleConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(AngleConvention::Standard),
            "paper" => Ok(AngleConvention::Mirrored),
            other => Err(Error::Parse(format!("unknown angle convention {other:?} (expected standard or paper)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FringePoint {
    /// Analyzer 1 angle, radians, in the scan's angle convention.
    pub theta1: f64,
    pub coincidences: f64,
    pub singles1: f64,
    pub singles2: f64,
    pub accidentals: f64,
}

impl FringePoint {
    pub fn from_record(theta1: f64, rec: &CountRecord) -> Self {
        Self {
            theta1,
            coincidences: rec.coincidences as f64,
            singles1: rec.singles1 as f64,
            singles2: rec.singles2 as f64,
            accidentals: rec.accidentals as f64,
        }
    }

    /// Counts entering the fit.
    pub fn signal(&self, subtract: bool) -> f64 {
        if subtract {
            (self.coincidences - self.accidentals).max(0.0)
        } else {
            self.coincidences
        }
    }

    /// Poisson variance of [`FringePoint::signal`].
    pub fn signal_variance(&self, subtract: bool) -> f64 {
        if subtract {
            self.coincidences + self.accidentals
        } else {
            self.coincidences
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FringeScan {
    /// Fixed analyzer 2 angle, radians.
    pub theta2: f64,
    pub points: Vec<FringePoint>,
    pub mode: ScanMode,
}

impl FringeScan {
    pub fn new(theta2: f64, points: Vec<FringePoint>, mode: ScanMode) -> Result<Self> {
        let bad = points.iter().any(|p| {
            [p.coincidences, p.singles1, p.singles2, p.accidentals].iter().any(|&x| !(x >= 0.0) || !x.is_finite())
                || !p.theta1.is_finite()
        });
        if bad {
            return Err(Error::InvalidState("scan counts must be finite and non-negative".into()));
        }
        Ok(Self { theta2, points, mode })
    }
}

/// Runs a polarization scan with analyzer 2 fixed at `theta2`.
pub fn polarization_scan(
    cfg: &SourceConfig,
    det: &DetectorConfig,
    run: &RunConfig,
    theta2: f64,
    theta1_list: &[f64],
    mode: ScanMode,
) -> Result<FringeScan> {
    polarization_scan_in(cfg, det, run, theta2, theta1_list, mode, AngleConvention::Standard)
}

/// [`polarization_scan`] with an explicit angle convention for θ₁.
pub fn polarization_scan_in(
    cfg: &SourceConfig,
    det: &DetectorConfig,
    run: &RunConfig,
    theta2: f64,
    theta1_list: &[f64],
    mode: ScanMode,
    convention: AngleConvention,
) -> Result<FringeScan> {
    if theta1_list.is_empty() {
        return Err(Error::InvalidConfig("scan needs at least one analyzer angle".into()));
    }
    det.validate()?;
    run.validate()?;
    let rho = emitted_state(cfg)?;
    let n = run.n_pulses as f64;
    let points = theta1_list
        .iter()
        .enumerate()
        .map(|(k, &theta1)| {
            let physical = convention.physical_theta1(theta1);
            match mode {
                ScanMode::Analytic => {
                    let r = expected_rates(&rho, physical, theta2, cfg.mean_pairs_per_pulse, det)?;
                    Ok(FringePoint {
                        theta1,
                        coincidences: r.p_coinc * n,
                        singles1: r.p_single1 * n,
                        singles2: r.p_single2 * n,
                        accidentals: r.p_accidental * n,
                    })
                }
                ScanMode::MonteCarlo => {
                    let per_angle = RunConfig { seed: derive_seed(run.seed, k as u64), ..*run };
                    let rec = simulate_run(cfg, physical, theta2, det, &per_angle)?;
                    Ok(FringePoint::from_record(theta1, &rec))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    FringeScan::new(theta2, points, mode)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FitOptions {
    pub subtract_accidentals: bool,
    /// Weight points by inverse Poisson variance.
    pub weighted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FringeFit {
    pub offset: f64,
    pub amplitude: f64,
    /// θ₁ of the fringe maximum, radians in `[0, π)`.
    pub phase: f64,
    pub visibility: f64,
    pub rms_residual: f64,
    /// Poisson-propagated one-sigma errors.
    pub visibility_err: f64,
    pub phase_err: f64,
}

pub fn fit_fringe(scan: &FringeScan, use_accidental_subtraction: bool) -> Result<FringeFit> {
    fit_fringe_with(scan, FitOptions { subtract_accidentals: use_accidental_subtraction, weighted: false })
}

type Mat3 = [[f64; 3]; 3];

fn invert3(m: &Mat3) -> Option<Mat3> {
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let adj = [
        [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
        [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
        [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
    ];
    let det = m[0][0] * adj[0][0] + m[0][1] * adj[1][0] + m[0][2] * adj[2][0];
    let scale = ((m[0][0] + m[1][1] + m[2][2]) / 3.0).powi(3);
    if !(scale > 0.0) || det.abs() <= 1e-10 * scale {
        return None;
    }
    Some(adj.map(|row| row.map(|x| x / det)))
}

fn mul3(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Least-squares fit of `c₀ + c₁cos2θ₁ + c₂sin2θ₁`.
pub fn fit_fringe_with(scan: &FringeScan, opts: FitOptions) -> Result<FringeFit> {
    let pts = &scan.points;
    if pts.len() < 4 {
        return Err(Error::UnderdeterminedFit(format!("{} points, need at least 4", pts.len())));
    }
    let basis = |theta: f64| {
        let (s, c) = (2.0 * theta).sin_cos();
        [1.0, c, s]
    };
    let weight = |p: &FringePoint| if opts.weighted { 1.0 / p.signal_variance(opts.subtract_accidentals).max(1.0) } else { 1.0 };

    let mut normal = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    // Xᵀ W Σ W X, for the Poisson covariance of the coefficients.
    let mut meat = [[0.0; 3]; 3];
    for p in pts {
        let x = basis(p.theta1);
        let w = weight(p);
        let y = p.signal(opts.subtract_accidentals);
        let var = p.signal_variance(opts.subtract_accidentals);
        for i in 0..3 {
            rhs[i] += w * x[i] * y;
            for j in 0..3 {
                normal[i][j] += w * x[i] * x[j];
                meat[i][j] += w * w * var * x[i] * x[j];
            }
        }
    }
    let inv = invert3(&normal).ok_or_else(|| Error::UnderdeterminedFit("rank-deficient design (angles do not resolve cos2θ and sin2θ)".into()))?;
    let coef: [f64; 3] = std::array::from_fn(|i| (0..3).map(|j| inv[i][j] * rhs[j]).sum());
    let cov = mul3(&mul3(&inv, &meat), &inv);
    let [c0, c1, c2] = coef;
    if !(c0 > 0.0) {
        return Err(Error::DegenerateFringe(c0));
    }

    let amplitude = c1.hypot(c2);
    let phase = (0.5 * c2.atan2(c1)).rem_euclid(PI);
    let visibility = (amplitude / c0).clamp(0.0, 1.0);

    let sse: f64 = pts
        .iter()
        .map(|p| {
            let x = basis(p.theta1);
            let model = c0 * x[0] + c1 * x[1] + c2 * x[2];
            (p.signal(opts.subtract_accidentals) - model).powi(2)
        })
        .sum();
    let rms_residual = (sse / pts.len() as f64).sqrt();

    let (visibility_err, phase_err) = if amplitude > 0.0 {
        let g = [-amplitude / (c0 * c0), c1 / (amplitude * c0), c2 / (amplitude * c0)];
        let h = [0.0, -0.5 * c2 / (amplitude * amplitude), 0.5 * c1 / (amplitude * amplitude)];
        let quad = |v: &[f64; 3]| -> f64 { (0..3).map(|i| (0..3).map(|j| v[i] * cov[i][j] * v[j]).sum::<f64>()).sum() };
        (quad(&g).max(0.0).sqrt(), quad(&h).max(0.0).sqrt())
    } else {
        (((cov[1][1] + cov[2][2]) / 2.0).max(0.0).sqrt() / c0, FRAC_PI_2)
    };

    Ok(FringeFit { offset: c0, amplitude, phase, visibility, rms_residual, visibility_err, phase_err })
}

/// Fringe visibility `(r_max − r_min) / (r_max + r_min)`.
pub fn visibility(r_max: f64, r_min: f64) -> Result<f64> {
    if r_min < 0.0 || r_max < 0.0 || r_max.is_nan() || r_min.is_nan() {
        return Err(Error::InvalidConfig(format!("rates must be non-negative, got ({r_max}, {r_min})")));
    }
    if r_max < r_min {
        return Err(Error::ArgumentOrder { r_max, r_min });
    }
    if r_max == 0.0 {
        return Err(Error::VisibilityUndefined);
    }
    Ok(((r_max - r_min) / (r_max + r_min)).clamp(0.0, 1.0))
}

/// Visibility from the largest and smallest bins of a scan.
pub fn extreme_bin_visibility(scan: &FringeScan, subtract: bool) -> Result<f64> {
    let signals: Vec<f64> = scan.points.iter().map(|p| p.signal(subtract)).collect();
    let max = signals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = signals.iter().copied().fold(f64::INFINITY, f64::min);
    if signals.is_empty() {
        return Err(Error::VisibilityUndefined);
    }
    visibility(max, min)
}

/// Signed difference `to − from` between fringe maxima, wrapped into
/// `(−π/2, π/2]` since the fringe has period π.
pub fn fringe_shift(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(PI);
    if d > FRAC_PI_2 {
        d - PI
    } else {
        d
    }
}

/// CHSH combination `|E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)|`.
pub fn chsh(rho: &DensityMatrix, a: f64, a_prime: f64, b: f64, b_prime: f64) -> f64 {
    (correlation_e(rho, a, b) - correlation_e(rho, a, b_prime) + correlation_e(rho, a_prime, b) + correlation_e(rho, a_prime, b_prime)).abs()
}

/// `start, start + step, …` strictly below `stop`.
pub fn angle_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step - 1e-9).ceil().max(0.0) as usize;
    (0..n).map(|k| start + k as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarization::{bell_state, pure_to_density, BellKind};
    use crate::source::mixed_state;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn grid_deg() -> Vec<f64> {
        angle_grid(0.0, 360.0, 10.0).into_iter().map(f64::to_radians).collect()
    }

    fn synthetic(f: impl Fn(f64) -> f64) -> FringeScan {
        let points = grid_deg()
            .into_iter()
            .map(|t| FringePoint { theta1: t, coincidences: f(t), singles1: 0.0, singles2: 0.0, accidentals: 0.0 })
            .collect();
        FringeScan::new(FRAC_PI_4, points, ScanMode::Analytic).unwrap()
    }

    #[test]
    fn grid_has_36_points() {
        let g = angle_grid(0.0, 360.0, 10.0);
        assert_eq!(g.len(), 36);
        assert_eq!(g[35], 350.0);
        assert_eq!(angle_grid(0.0, 35.0, 10.0).len(), 4);
    }

    #[test]
    fn noiseless_fringe_is_recovered() {
        let scan = synthetic(|t| 100.0 + 800.0 * (t - FRAC_PI_4).cos().powi(2));
        let fit = fit_fringe(&scan, false).unwrap();
        assert_abs_diff_eq!(fit.offset, 500.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.amplitude, 400.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.visibility, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.phase, FRAC_PI_4, epsilon = 1e-12);
        assert!(fit.rms_residual / 500.0 < 1e-9);
    }

    #[test]
    fn constant_counts_have_zero_visibility() {
        let fit = fit_fringe(&synthetic(|_| 250.0), false).unwrap();
        assert_abs_diff_eq!(fit.amplitude, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.visibility, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(fit_fringe(&synthetic(|_| 0.0), false), Err(Error::DegenerateFringe(_))));
        let few = FringeScan::new(0.0, synthetic(|_| 1.0).points[..3].to_vec(), ScanMode::Analytic).unwrap();
        assert!(matches!(fit_fringe(&few, false), Err(Error::UnderdeterminedFit(_))));
        // 0°, 90°, 180°, 270° never sample sin2θ.
        let pts = [0.0f64, 90.0, 180.0, 270.0]
            .iter()
            .map(|d| FringePoint { theta1: d.to_radians(), coincidences: 5.0, singles1: 0.0, singles2: 0.0, accidentals: 0.0 })
            .collect();
        let singular = FringeScan::new(0.0, pts, ScanMode::Analytic).unwrap();
        assert!(matches!(fit_fringe(&singular, false), Err(Error::UnderdeterminedFit(_))));
    }

    #[test]
    fn weighted_fit_agrees_on_noiseless_data() {
        let scan = synthetic(|t| 100.0 + 800.0 * (t - 0.3).cos().powi(2));
        let fit = fit_fringe_with(&scan, FitOptions { subtract_accidentals: false, weighted: true }).unwrap();
        assert_abs_diff_eq!(fit.visibility, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.phase, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn visibility_examples() {
        assert_eq!(visibility(1.0, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(visibility(0.465, 0.035).unwrap(), 0.86, epsilon = 1e-12);
        assert_eq!(visibility(3.0, 3.0).unwrap(), 0.0);
        assert!(matches!(visibility(0.1, 0.2), Err(Error::ArgumentOrder { .. })));
        assert_eq!(visibility(0.0, 0.0), Err(Error::VisibilityUndefined));
    }

    #[test]
    fn chsh_examples() {
        let a = [0.0, 45.0, 22.5, 67.5].map(f64::to_radians);
        let phi = pure_to_density(&bell_state(BellKind::PhiPlus));
        assert_abs_diff_eq!(chsh(&phi, a[0], a[1], a[2], a[3]), 2.0 * 2f64.sqrt(), epsilon = 1e-12);
        let mixed = mixed_state(FRAC_PI_4);
        assert_abs_diff_eq!(chsh(&mixed, a[0], a[1], a[2], a[3]), 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn shift_wraps_at_half_turn() {
        assert_abs_diff_eq!(fringe_shift(45f64.to_radians(), 65f64.to_radians()), 20f64.to_radians(), epsilon = 1e-15);
        assert_abs_diff_eq!(fringe_shift(170f64.to_radians(), 10f64.to_radians()), 20f64.to_radians(), epsilon = 1e-14);
        assert_abs_diff_eq!(fringe_shift(10f64.to_radians(), 170f64.to_radians()), -20f64.to_radians(), epsilon = 1e-14);
    }

    #[test]
    fn subtracting_flat_floor_raises_visibility() {
        let mut scan = synthetic(|t| 50.0 + 400.0 * (t - 0.2).cos().powi(2));
        for p in scan.points.iter_mut() {
            p.accidentals = 30.0;
        }
        let raw = fit_fringe(&scan, false).unwrap();
        let corrected = fit_fringe(&scan, true).unwrap();
        assert!(corrected.visibility >= raw.visibility);
        assert_abs_diff_eq!(corrected.amplitude, raw.amplitude, epsilon = 1e-9);
    }

    #[test]
    fn mirrored_convention_mirrors_the_fringe() {
        let cfg = SourceConfig::default();
        let det = DetectorConfig::ideal(0.6);
        let run = RunConfig::default();
        let thetas = grid_deg();
        let std_scan = polarization_scan_in(&cfg, &det, &run, FRAC_PI_4, &thetas, ScanMode::Analytic, AngleConvention::Standard).unwrap();
        let mirrored_scan = polarization_scan_in(&cfg, &det, &run, FRAC_PI_4, &thetas, ScanMode::Analytic, AngleConvention::Mirrored).unwrap();
        let f_std = fit_fringe(&std_scan, false).unwrap();
        let f_mirrored = fit_fringe(&mirrored_scan, false).unwrap();
        assert_abs_diff_eq!(f_std.phase, FRAC_PI_4, epsilon = 1e-9);
        assert_abs_diff_eq!(f_mirrored.phase, 3.0 * FRAC_PI_4, epsilon = 1e-9);
    }

    #[test]
    fn dark_scan_is_all_zero() {
        let cfg = SourceConfig { mean_pairs_per_pulse: 0.0, ..SourceConfig::default() };
        let det = DetectorConfig::ideal(0.6);
        for mode in [ScanMode::Analytic, ScanMode::MonteCarlo] {
            let scan = polarization_scan(&cfg, &det, &RunConfig { n_pulses: 1000, ..RunConfig::default() }, FRAC_PI_4, &grid_deg(), mode).unwrap();
            assert!(scan.points.iter().all(|p| p.coincidences == 0.0 && p.singles1 == 0.0 && p.accidentals == 0.0));
        }
        assert!(polarization_scan(&cfg, &det, &RunConfig::default(), 0.0, &[], ScanMode::Analytic).is_err());
    }
}
