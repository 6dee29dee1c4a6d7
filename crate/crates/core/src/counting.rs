//! Coincidence counting behind a 50/50 beamsplitter.
//!
//! One pump pulse is one coincidence window (a 2 ns window is shorter than
//! the 12.5 ns period at 80 MHz). Detectors are threshold detectors without
//! dead time. Accidentals are estimated with the delayed window: detector 1
//! in pulse `i` together with detector 2 in pulse `i + 1`.

use std::thread;

use crate::error::{Error, Result};
use crate::polarization::{analyzer_outcomes, DensityMatrix};
use crate::rng::PulseStream;
use crate::source::{emitted_state, SourceConfig};

/// Above this mean pair number the rates are dominated by multi-pair events.
pub const LOW_GAIN_REGIME: f64 = 0.1;

/// Background probability per window that roughly equals the signal singles
/// of the default balanced source (λ = 0.01, η = 0.6).
pub const DEFAULT_BACKGROUND: f64 = 2.55e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorConfig {
    pub efficiency1: f64,
    pub efficiency2: f64,
    pub background_prob1: f64,
    pub background_prob2: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            efficiency1: 0.6,
            efficiency2: 0.6,
            background_prob1: DEFAULT_BACKGROUND,
            background_prob2: DEFAULT_BACKGROUND,
        }
    }
}

impl DetectorConfig {
    pub fn ideal(efficiency: f64) -> Self {
        Self { efficiency1: efficiency, efficiency2: efficiency, background_prob1: 0.0, background_prob2: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, eta) in [("efficiency1", self.efficiency1), ("efficiency2", self.efficiency2)] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::InvalidConfig(format!("{name} = {eta} outside [0, 1]")));
            }
        }
        for (name, bg) in [("background_prob1", self.background_prob1), ("background_prob2", self.background_prob2)] {
            if !(0.0..1.0).contains(&bg) {
                return Err(Error::InvalidConfig(format!("{name} = {bg} outside [0, 1)")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub n_pulses: u64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { n_pulses: 1_000_000, seed: 1, workers: 1 }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_pulses < 1 {
            return Err(Error::InvalidConfig("n_pulses must be at least 1".into()));
        }
        if self.workers < 1 {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CountRecord {
    pub n_pulses: u64,
    pub singles1: u64,
    pub singles2: u64,
    pub coincidences: u64,
    pub accidentals: u64,
}

impl CountRecord {
    fn merge(self, other: CountRecord) -> CountRecord {
        CountRecord {
            n_pulses: self.n_pulses + other.n_pulses,
            singles1: self.singles1 + other.singles1,
            singles2: self.singles2 + other.singles2,
            coincidences: self.coincidences + other.coincidences,
            accidentals: self.accidentals + other.accidentals,
        }
    }
}

/// Per-pulse probabilities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpectedRates {
    pub p_single1: f64,
    pub p_single2: f64,
    pub p_coinc: f64,
    pub p_accidental: f64,
}

/// Probabilities for one emitted pair to fire detector 1, detector 2, and
/// both, after beamsplitter routing, analysis and detection.
#[derive(Clone, Copy, Debug, PartialEq)]
struct PairFiring {
    port1: f64,
    port2: f64,
    both: f64,
}

fn pair_firing(rho: &DensityMatrix, theta1: f64, theta2: f64, det: &DetectorConfig) -> PairFiring {
    let (e1, e2) = (det.efficiency1, det.efficiency2);
    // Photon a to port 1, photon b to port 2, and the mirror routing.
    let [pp, pb, bp, _] = analyzer_outcomes(rho, theta1, theta2);
    let [qp, qb, bq, _] = analyzer_outcomes(rho, theta2, theta1);
    // Both photons into the same port, analyzed at the same angle.
    let at_least_one = |angle: f64, eta: f64| {
        let [pp, pb, bp, _] = analyzer_outcomes(rho, angle, angle);
        pp * (2.0 * eta - eta * eta) + (pb + bp) * eta
    };
    PairFiring {
        port1: 0.25 * (e1 * (pp + pb) + e1 * (qp + bq) + at_least_one(theta1, e1)),
        port2: 0.25 * (e2 * (pp + bp) + e2 * (qp + qb) + at_least_one(theta2, e2)),
        both: 0.25 * e1 * e2 * (pp + qp),
    }
}

/// Rates for the counting model simulated by [`simulate_run`], to first
/// order in λ.
///
/// With per-pair firing probabilities `q₁, q₂, q₁₂` (routing, analysis and
/// detection of one pair), background is kept exact and pair terms linear:
/// `p_single = bg + (1 − bg) λ q` and
/// `p_coinc = p_single1 · p_single2 + (1 − bg₁)(1 − bg₂) λ q₁₂`.
/// Multi-pair corrections are `O(λ²)`; the delayed-window estimate
/// `p_accidental = p_single1 · p_single2` therefore removes the uncorrelated
/// part and leaves a coincidence fringe linear in the joint pass probability.
pub fn expected_rates(rho: &DensityMatrix, theta1: f64, theta2: f64, lambda: f64, det: &DetectorConfig) -> Result<ExpectedRates> {
    det.validate()?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidConfig(format!("mean pairs per pulse {lambda} must be non-negative")));
    }
    if lambda > LOW_GAIN_REGIME {
        log::warn!("first-order model out of regime: mean pairs per pulse {lambda} > {LOW_GAIN_REGIME}");
    }
    let q = pair_firing(rho, theta1, theta2, det);
    let (bg1, bg2) = (det.background_prob1, det.background_prob2);
    let p1 = (bg1 + (1.0 - bg1) * lambda * q.port1).min(1.0);
    let p2 = (bg2 + (1.0 - bg2) * lambda * q.port2).min(1.0);
    let accidental = p1 * p2;
    let coinc = accidental + (1.0 - bg1) * (1.0 - bg2) * lambda * q.both;
    Ok(ExpectedRates { p_single1: p1, p_single2: p2, p_coinc: coinc.min(p1.min(p2)), p_accidental: accidental })
}

/// Background probability that matches the signal singles rate of detector 1
/// for `rho` with both analyzers at `theta`.
pub fn matched_background(rho: &DensityMatrix, theta: f64, lambda: f64, efficiency: f64) -> Result<f64> {
    let rates = expected_rates(rho, theta, theta, lambda, &DetectorConfig::ideal(efficiency))?;
    Ok(rates.p_single1)
}

/// Cumulative outcome table for one routing case.
#[derive(Clone, Copy, Debug)]
struct OutcomeTable {
    cumulative: [f64; 3],
}

impl OutcomeTable {
    fn new(p: [f64; 4]) -> Self {
        let total: f64 = p.iter().sum();
        let n = if total > 0.0 { total } else { 1.0 };
        Self { cumulative: [p[0] / n, (p[0] + p[1]) / n, (p[0] + p[1] + p[2]) / n] }
    }

    /// Returns (photon a passes, photon b passes).
    #[inline]
    fn sample(&self, u: f64) -> (bool, bool) {
        if u < self.cumulative[0] {
            (true, true)
        } else if u < self.cumulative[1] {
            (true, false)
        } else if u < self.cumulative[2] {
            (false, true)
        } else {
            (false, false)
        }
    }
}

/// Everything needed to simulate one pulse; fixed for a run.
#[derive(Clone, Debug)]
struct PulseModel {
    lambda: f64,
    exp_neg_lambda: f64,
    /// a→1/b→2, a→2/b→1, both→1, both→2.
    routes: [OutcomeTable; 4],
    det: DetectorConfig,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct PulseOutcome {
    d1: bool,
    d2: bool,
}

impl PulseModel {
    fn new(rho: &DensityMatrix, theta1: f64, theta2: f64, lambda: f64, det: DetectorConfig) -> Self {
        Self {
            lambda,
            exp_neg_lambda: (-lambda).exp(),
            routes: [
                OutcomeTable::new(analyzer_outcomes(rho, theta1, theta2)),
                OutcomeTable::new(analyzer_outcomes(rho, theta2, theta1)),
                OutcomeTable::new(analyzer_outcomes(rho, theta1, theta1)),
                OutcomeTable::new(analyzer_outcomes(rho, theta2, theta2)),
            ],
            det,
        }
    }

    fn pulse(&self, seed: u64, index: u64) -> PulseOutcome {
        let mut rng = PulseStream::new(seed, index);
        let pairs = rng.poisson(self.lambda, self.exp_neg_lambda);
        let mut at_port1 = 0u32;
        let mut at_port2 = 0u32;
        for _ in 0..pairs {
            let route = (rng.next_u64() >> 62) as usize;
            let (a, b) = self.routes[route].sample(rng.next_f64());
            let (a, b) = (a as u32, b as u32);
            match route {
                0 => {
                    at_port1 += a;
                    at_port2 += b;
                }
                1 => {
                    at_port2 += a;
                    at_port1 += b;
                }
                2 => at_port1 += a + b,
                _ => at_port2 += a + b,
            }
        }
        let mut d1 = false;
        for _ in 0..at_port1 {
            d1 |= rng.next_f64() < self.det.efficiency1;
        }
        let mut d2 = false;
        for _ in 0..at_port2 {
            d2 |= rng.next_f64() < self.det.efficiency2;
        }
        d1 |= rng.next_f64() < self.det.background_prob1;
        d2 |= rng.next_f64() < self.det.background_prob2;
        PulseOutcome { d1, d2 }
    }

    /// Tallies pulses `[start, end)` of an `n`-pulse run. Accidental pairs
    /// `(i, i + 1)` are credited to the chunk holding `i`; the first pulse of
    /// the next chunk is recomputed for that purpose.
    fn tally(&self, seed: u64, start: u64, end: u64, n: u64) -> CountRecord {
        let mut rec = CountRecord { n_pulses: end - start, ..CountRecord::default() };
        let mut prev_d1 = false;
        for i in start..end {
            let out = self.pulse(seed, i);
            rec.singles1 += out.d1 as u64;
            rec.singles2 += out.d2 as u64;
            rec.coincidences += (out.d1 && out.d2) as u64;
            if i > start && prev_d1 && out.d2 {
                rec.accidentals += 1;
            }
            prev_d1 = out.d1;
        }
        if end < n && prev_d1 && self.pulse(seed, end).d2 {
            rec.accidentals += 1;
        }
        rec
    }
}

/// Seeded Monte Carlo counting run. The result depends only on the seed and
/// the configurations, not on `run.workers`.
pub fn simulate_run(
    cfg: &SourceConfig,
    theta1: f64,
    theta2: f64,
    det: &DetectorConfig,
    run: &RunConfig,
) -> Result<CountRecord> {
    det.validate()?;
    run.validate()?;
    let rho = emitted_state(cfg)?;
    let model = PulseModel::new(&rho, theta1, theta2, cfg.mean_pairs_per_pulse, *det);
    let n = run.n_pulses;
    let workers = (run.workers as u64).min(n).max(1);
    if workers == 1 {
        return Ok(model.tally(run.seed, 0, n, n));
    }
    let chunk = n.div_ceil(workers);
    let record = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let start = (w * chunk).min(n);
                let end = ((w + 1) * chunk).min(n);
                let model = &model;
                scope.spawn(move || model.tally(run.seed, start, end, n))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("counting worker panicked"))
            .fold(CountRecord::default(), CountRecord::merge)
    });
    Ok(record)
}

/// Accidental-corrected coincidence count, floored at zero.
pub fn subtract_accidentals(rec: &CountRecord) -> f64 {
    (rec.coincidences as f64 - rec.accidentals as f64).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarization::{bell_state, pure_to_density, BellKind};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn phi_plus() -> DensityMatrix {
        pure_to_density(&bell_state(BellKind::PhiPlus))
    }

    #[test]
    fn background_only_rates() {
        let det = DetectorConfig { background_prob1: 1e-3, background_prob2: 1e-3, ..DetectorConfig::default() };
        let r = expected_rates(&phi_plus(), 0.3, 1.1, 0.0, &det).unwrap();
        assert_abs_diff_eq!(r.p_single1, 1e-3, epsilon = 1e-15);
        assert_abs_diff_eq!(r.p_single2, 1e-3, epsilon = 1e-15);
        assert_abs_diff_eq!(r.p_coinc, 1e-6, epsilon = 1e-18);
        assert_abs_diff_eq!(r.p_accidental, 1e-6, epsilon = 1e-18);
    }

    #[test]
    fn blind_detectors_see_background_product() {
        let det = DetectorConfig { efficiency1: 0.0, efficiency2: 0.0, background_prob1: 2e-3, background_prob2: 5e-3 };
        let r = expected_rates(&phi_plus(), 0.7, 0.2, 0.05, &det).unwrap();
        assert_abs_diff_eq!(r.p_coinc, 2e-3 * 5e-3, epsilon = 1e-18);
    }

    #[test]
    fn ideal_phi_plus_rates_reduce_to_first_order() {
        let det = DetectorConfig::ideal(0.6);
        let r = expected_rates(&phi_plus(), FRAC_PI_4, FRAC_PI_4, 0.01, &det).unwrap();
        // Leading term λ η² ¼ (P₁₂ + P₂₁) = 9.0e-4.
        assert_abs_diff_eq!(r.p_coinc - r.p_accidental, 9.0e-4, epsilon = 1e-15);
        // Singles: ½ λ η (pA + pB) minus the same-port double-detection term
        // ¼ λ η² P(45°, 45°): 3.0e-3 − 4.5e-4.
        assert_abs_diff_eq!(r.p_single1, 2.55e-3, epsilon = 1e-15);
        assert_abs_diff_eq!(r.p_coinc, 2.55e-3 * 2.55e-3 + 9.0e-4, epsilon = 1e-15);
        assert_abs_diff_eq!(r.p_accidental, r.p_single1 * r.p_single2, epsilon = 1e-18);
    }

    #[test]
    fn config_validation() {
        let bad = DetectorConfig { efficiency1: 1.2, ..DetectorConfig::default() };
        assert!(bad.validate().is_err());
        let bad_bg = DetectorConfig { background_prob2: 1.0, ..DetectorConfig::default() };
        assert!(bad_bg.validate().is_err());
        assert!(RunConfig { n_pulses: 0, ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig { workers: 0, ..RunConfig::default() }.validate().is_err());
        assert!(expected_rates(&phi_plus(), 0.0, 0.0, -1.0, &DetectorConfig::default()).is_err());
    }

    #[test]
    fn dark_source_gives_no_counts() {
        let cfg = SourceConfig { mean_pairs_per_pulse: 0.0, ..SourceConfig::default() };
        for seed in [0, 1, 99] {
            let rec = simulate_run(&cfg, 0.1, 0.2, &DetectorConfig::ideal(0.6), &RunConfig { n_pulses: 5000, seed, workers: 2 }).unwrap();
            assert_eq!(rec, CountRecord { n_pulses: 5000, ..CountRecord::default() });
        }
    }

    #[test]
    fn worker_count_does_not_change_record() {
        let cfg = SourceConfig { mean_pairs_per_pulse: 0.2, ..SourceConfig::default() };
        let det = DetectorConfig { background_prob1: 0.05, background_prob2: 0.05, ..DetectorConfig::default() };
        let base = simulate_run(&cfg, 0.3, FRAC_PI_4, &det, &RunConfig { n_pulses: 10_007, seed: 5, workers: 1 }).unwrap();
        for workers in [2, 3, 4, 8, 64] {
            let rec = simulate_run(&cfg, 0.3, FRAC_PI_4, &det, &RunConfig { n_pulses: 10_007, seed: 5, workers }).unwrap();
            assert_eq!(rec, base, "workers = {workers}");
        }
        assert!(base.accidentals > 0);
    }

    #[test]
    fn subtraction_examples() {
        let rec = |c, a| CountRecord { n_pulses: 1000, coincidences: c, accidentals: a, ..CountRecord::default() };
        assert_eq!(subtract_accidentals(&rec(100, 0)), 100.0);
        assert_eq!(subtract_accidentals(&rec(100, 100)), 0.0);
        assert_eq!(subtract_accidentals(&rec(50, 100)), 0.0);
        assert_eq!(subtract_accidentals(&rec(930, 70)), 860.0);
    }

    #[test]
    fn matched_background_equals_signal_singles() {
        let bg = matched_background(&phi_plus(), FRAC_PI_4, 0.01, 0.6).unwrap();
        assert_abs_diff_eq!(bg, DEFAULT_BACKGROUND, epsilon = 1e-5);
    }
}
