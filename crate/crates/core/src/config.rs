//! Flat `key=value` experiment configuration.
//!
//! One pair per line, `#` starts a comment. Every key can also be set from
//! the environment as `PULSEPAIR_<KEY>` (upper case), which wins over the
//! file. Angles are in degrees here and converted at the library boundary.

use std::path::Path;

use crate::analysis::AngleConvention;
use crate::counting::{DetectorConfig, RunConfig};
use crate::error::{Error, Result};
use crate::source::SourceConfig;

pub const ENV_PREFIX: &str = "PULSEPAIR_";

/// Accepted keys, in echo order.
pub const KEYS: [&str; 14] = [
    "pump_angle_deg",
    "gain_up",
    "gain_down",
    "relative_phase_deg",
    "overlap_mu",
    "mean_pairs_per_pulse",
    "efficiency1",
    "efficiency2",
    "background_prob1",
    "background_prob2",
    "n_pulses",
    "seed",
    "workers",
    "angle_convention",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub pump_angle_deg: f64,
    pub gain_up: f64,
    pub gain_down: f64,
    pub relative_phase_deg: f64,
    pub overlap_mu: f64,
    pub mean_pairs_per_pulse: f64,
    pub detector: DetectorConfig,
    pub run: RunConfig,
    pub angle_convention: AngleConvention,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let src = SourceConfig::default();
        Self {
            pump_angle_deg: 45.0,
            gain_up: src.gain_up,
            gain_down: src.gain_down,
            relative_phase_deg: 0.0,
            overlap_mu: src.overlap_mu,
            mean_pairs_per_pulse: src.mean_pairs_per_pulse,
            detector: DetectorConfig::default(),
            run: RunConfig::default(),
            angle_convention: AngleConvention::Standard,
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value.parse::<f64>().map_err(|_| Error::Parse(format!("{key}: {value:?} is not a number")))
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value.parse::<u64>().map_err(|_| Error::Parse(format!("{key}: {value:?} is not a non-negative integer")))
}

impl ExperimentConfig {
    pub fn source(&self) -> SourceConfig {
        SourceConfig {
            pump_angle: self.pump_angle_deg.to_radians(),
            gain_up: self.gain_up,
            gain_down: self.gain_down,
            relative_phase: self.relative_phase_deg.to_radians(),
            overlap_mu: self.overlap_mu,
            mean_pairs_per_pulse: self.mean_pairs_per_pulse,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.source().validate()?;
        self.detector.validate()?;
        self.run.validate()
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "pump_angle_deg" => self.pump_angle_deg = parse_f64(key, value)?,
            "gain_up" => self.gain_up = parse_f64(key, value)?,
            "gain_down" => self.gain_down = parse_f64(key, value)?,
            "relative_phase_deg" => self.relative_phase_deg = parse_f64(key, value)?,
            "overlap_mu" => self.overlap_mu = parse_f64(key, value)?,
            "mean_pairs_per_pulse" => self.mean_pairs_per_pulse = parse_f64(key, value)?,
            "efficiency1" => self.detector.efficiency1 = parse_f64(key, value)?,
            "efficiency2" => self.detector.efficiency2 = parse_f64(key, value)?,
            "background_prob1" => self.detector.background_prob1 = parse_f64(key, value)?,
            "background_prob2" => self.detector.background_prob2 = parse_f64(key, value)?,
            "n_pulses" => self.run.n_pulses = parse_u64(key, value)?,
            "seed" => self.run.seed = parse_u64(key, value)?,
            "workers" => {
                self.run.workers = usize::try_from(parse_u64(key, value)?)
                    .map_err(|_| Error::Parse(format!("workers: {value} out of range")))?
            }
            "angle_convention" => self.angle_convention = value.parse()?,
            other => return Err(Error::Parse(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines from config file text.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value, got {raw:?}", lineno + 1)))?;
            self.set(key.trim(), value).map_err(|e| match e {
                Error::Parse(msg) => Error::Parse(format!("line {}: {msg}", lineno + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    /// Applies `PULSEPAIR_<KEY>` overrides; other variables are ignored.
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<()>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        for (name, value) in vars {
            let Some(rest) = name.as_ref().strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let key = rest.to_ascii_lowercase();
            if KEYS.contains(&key.as_str()) {
                self.set(&key, value.as_ref())?;
            }
        }
        Ok(())
    }

    pub fn load(path: Option<&Path>, env: &[(String, String)]) -> std::result::Result<Self, LoadError> {
        let mut cfg = Self::default();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| LoadError::Io(format!("{}: {e}", p.display())))?;
            cfg.apply_text(&text).map_err(LoadError::Config)?;
        }
        cfg.apply_env(env.iter().map(|(k, v)| (k.as_str(), v.as_str()))).map_err(LoadError::Config)?;
        cfg.validate().map_err(LoadError::Config)?;
        Ok(cfg)
    }

    /// Effective value of every key, formatted so that parsing it back gives
    /// the same value.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        KEYS.iter()
            .map(|&k| {
                let v = match k {
                    "pump_angle_deg" => self.pump_angle_deg.to_string(),
                    "gain_up" => self.gain_up.to_string(),
                    "gain_down" => self.gain_down.to_string(),
                    "relative_phase_deg" => self.relative_phase_deg.to_string(),
                    "overlap_mu" => self.overlap_mu.to_string(),
                    "mean_pairs_per_pulse" => self.mean_pairs_per_pulse.to_string(),
                    "efficiency1" => self.detector.efficiency1.to_string(),
                    "efficiency2" => self.detector.efficiency2.to_string(),
                    "background_prob1" => self.detector.background_prob1.to_string(),
                    "background_prob2" => self.detector.background_prob2.to_string(),
                    "n_pulses" => self.run.n_pulses.to_string(),
                    "seed" => self.run.seed.to_string(),
                    "workers" => self.run.workers.to_string(),
                    "angle_convention" => self.angle_convention.as_str().to_string(),
                    _ => unreachable!(),
                };
                (k, v)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadError {
    Io(String),
    Config(Error),
}
