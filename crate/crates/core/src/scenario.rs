//! The canned polarization-interference experiment: analyzer 2 fixed at 45°,
//! analyzer 1 stepped through a full turn in 10° steps, counted by Monte Carlo
//! with background comparable to the true singles.

use std::f64::consts::FRAC_PI_4;

use crate::analysis::{angle_grid, extreme_bin_visibility, fit_fringe, polarization_scan, FringeFit, FringeScan, ScanMode};
use crate::counting::{matched_background, DetectorConfig, RunConfig};
use crate::error::{Error, Result};
use crate::source::{emitted_state, SourceConfig};

/// Visibility the imbalance is chosen to produce as concurrence.
pub const TARGET_VISIBILITY: f64 = 0.86;
pub const DEFAULT_PULSES_PER_ANGLE: u64 = 10_000_000;

/// Root `ε ∈ [0, 1]` of `2ε / (1 + ε²) = v`.
pub fn imbalance_for_concurrence(v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidConfig(format!("concurrence {v} outside [0, 1]")));
    }
    if v == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 - (1.0 - v * v).sqrt()) / v)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FringeScenario {
    pub source: SourceConfig,
    pub detector: DetectorConfig,
    pub run: RunConfig,
    pub theta2: f64,
    pub theta1_list: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FringeReport {
    pub scan: FringeScan,
    pub raw: FringeFit,
    pub corrected: FringeFit,
    pub extreme_bin_raw: f64,
    pub extreme_bin_corrected: f64,
    /// `(max − min) / mean` of detector-1 singles over the scan.
    pub singles_fluctuation: f64,
}

impl FringeScenario {
    /// Imbalanced, fully overlapping source with η = 0.6, λ = 0.01 and
    /// background matched to the signal singles.
    pub fn imbalanced(n_pulses: u64, seed: u64, workers: usize) -> Result<Self> {
        let eps = imbalance_for_concurrence(TARGET_VISIBILITY)?;
        let source = SourceConfig { gain_down: eps, overlap_mu: 1.0, ..SourceConfig::default() };
        Self::with_source(source, n_pulses, seed, workers)
    }

    pub fn with_source(source: SourceConfig, n_pulses: u64, seed: u64, workers: usize) -> Result<Self> {
        let rho = emitted_state(&source)?;
        let efficiency = 0.6;
        let bg = matched_background(&rho, FRAC_PI_4, source.mean_pairs_per_pulse, efficiency)?;
        Ok(Self {
            source,
            detector: DetectorConfig { efficiency1: efficiency, efficiency2: efficiency, background_prob1: bg, background_prob2: bg },
            run: RunConfig { n_pulses, seed, workers },
            theta2: FRAC_PI_4,
            theta1_list: angle_grid(0.0, 360.0, 10.0).into_iter().map(f64::to_radians).collect(),
        })
    }

    pub fn run(&self, mode: ScanMode) -> Result<FringeReport> {
        let scan = polarization_scan(&self.source, &self.detector, &self.run, self.theta2, &self.theta1_list, mode)?;
        let raw = fit_fringe(&scan, false)?;
        let corrected = fit_fringe(&scan, true)?;
        let singles: Vec<f64> = scan.points.iter().map(|p| p.singles1).collect();
        let mean = singles.iter().sum::<f64>() / singles.len() as f64;
        let spread = singles.iter().copied().fold(f64::NEG_INFINITY, f64::max) - singles.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(FringeReport {
            extreme_bin_raw: extreme_bin_visibility(&scan, false)?,
            extreme_bin_corrected: extreme_bin_visibility(&scan, true)?,
            singles_fluctuation: if mean > 0.0 { spread / mean } else { 0.0 },
            scan,
            raw,
            corrected,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarization::concurrence;
    use approx::assert_abs_diff_eq;

    #[test]
    fn imbalance_root() {
        let eps = imbalance_for_concurrence(0.86).unwrap();
        assert_abs_diff_eq!(2.0 * eps / (1.0 + eps * eps), 0.86, epsilon = 1e-14);
        assert_abs_diff_eq!(eps, 0.569425, epsilon = 1e-6);
        assert_eq!(imbalance_for_concurrence(1.0).unwrap(), 1.0);
        assert!(imbalance_for_concurrence(1.2).is_err());
    }

    #[test]
    fn scenario_state_has_target_concurrence() {
        let s = FringeScenario::imbalanced(1000, 1, 1).unwrap();
        let rho = emitted_state(&s.source).unwrap();
        assert_abs_diff_eq!(concurrence(&rho), TARGET_VISIBILITY, epsilon = 1e-12);
        assert_eq!(s.theta1_list.len(), 36);
        assert!(s.detector.background_prob1 > 0.0);
    }
}
