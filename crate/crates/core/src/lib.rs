//! Simulation and analysis of pulsed polarization-entangled photon pairs from
//! a two-crystal type-I down-conversion source.
//!
//! The library works in radians; the command-line front end takes degrees.

// `!(x > 0.0)` is used on purpose so NaN is rejected; index loops mirror the
// matrix algebra they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod cli;
pub mod config;
pub mod counting;
pub mod error;
pub mod linalg;
pub mod output;
pub mod polarization;
pub mod rng;
pub mod scenario;
pub mod source;

pub use analysis::{
    chsh, extreme_bin_visibility, fit_fringe, fit_fringe_with, fringe_shift, polarization_scan, polarization_scan_in,
    visibility, AngleConvention, FitOptions, FringeFit, FringePoint, FringeScan, ScanMode,
};
pub use counting::{
    expected_rates, simulate_run, subtract_accidentals, CountRecord, DetectorConfig, ExpectedRates, RunConfig,
};
pub use error::{Error, Result};
pub use polarization::{
    apply_local, bell_state, coincidence_probability, concurrence, correlation_e, half_waveplate, phase_shifter,
    polarizer, pure_to_density, purity, BellKind, DensityMatrix, OneQubitOperator, PureState, TwoQubitOperator,
};
pub use source::{bell_transform, emitted_state, epsilon_of, mixed_state, Arm, SourceConfig};
