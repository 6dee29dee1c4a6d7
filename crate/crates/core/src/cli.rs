//! Command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 I/O error.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::analysis::{
    angle_grid, chsh, extreme_bin_visibility, fit_fringe_with, polarization_scan_in, FitOptions, FringeScan, ScanMode,
};
use crate::config::{ExperimentConfig, LoadError};
use crate::error::Error;
use crate::output::{fit_report, fmt_sig9, quantize_scan, read_scan_csv, render_svg, write_scan_csv};
use crate::polarization::{concurrence, purity, DensityMatrix};
use crate::scenario::{FringeScenario, DEFAULT_PULSES_PER_ANGLE};
use crate::source::{emitted_state, epsilon_of};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "pulsepair", version, about = "Pulsed polarization-entangled photon pair simulator")]
struct Cli {
    /// key=value configuration file
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the emitted density matrix, concurrence and purity
    State,
    /// Scan analyzer 1 with analyzer 2 fixed and write the fringe as CSV
    Scan {
        #[arg(long, default_value_t = 45.0, allow_negative_numbers = true)]
        theta2_deg: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        start_deg: f64,
        #[arg(long, default_value_t = 360.0, allow_negative_numbers = true)]
        stop_deg: f64,
        #[arg(long, default_value_t = 10.0)]
        step_deg: f64,
        /// analytic or monte-carlo
        #[arg(long, default_value = "analytic")]
        mode: String,
        /// CSV output path (stdout when omitted)
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Also render the fringe as SVG
        #[arg(long, value_name = "PATH")]
        svg: Option<PathBuf>,
    },
    /// Fit a fringe to a scan CSV
    Fit {
        #[arg(value_name = "CSV")]
        input: PathBuf,
        #[arg(long)]
        subtract_accidentals: bool,
        /// Inverse-variance weighting
        #[arg(long)]
        weighted: bool,
    },
    /// CHSH value of the emitted state
    Chsh {
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        a_deg: f64,
        #[arg(long, default_value_t = 45.0, allow_negative_numbers = true)]
        a_prime_deg: f64,
        #[arg(long, default_value_t = 22.5, allow_negative_numbers = true)]
        b_deg: f64,
        #[arg(long, default_value_t = 67.5, allow_negative_numbers = true)]
        b_prime_deg: f64,
    },
    /// Canned imbalanced-source fringe experiment with Monte Carlo counting
    #[command(name = "reproduce-fig3")]
    Reproduce {
        #[arg(long, default_value_t = DEFAULT_PULSES_PER_ANGLE)]
        n_pulses: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        svg: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Io(m) => Failure::Io(m),
            LoadError::Config(e) => Failure::Config(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

/// Runs the CLI against the process environment and standard streams.
pub fn run_command<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let env: Vec<(String, String)> = std::env::vars().collect();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(argv, &env, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the CLI with explicit environment and output streams.
pub fn run<I, S>(argv: I, env: &[(String, String)], out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_CONFIG
                }
            };
        }
    };
    match dispatch(cli, env, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn dispatch(cli: Cli, env: &[(String, String)], out: &mut dyn Write) -> Result<(), Failure> {
    let stdout_failure = |e: std::io::Error| Failure::Io(format!("stdout: {e}"));
    match cli.command {
        Command::State => {
            let cfg = ExperimentConfig::load(cli.config.as_deref(), env)?;
            let rho = emitted_state(&cfg.source())?;
            let text = state_report(&rho, &cfg);
            out.write_all(text.as_bytes()).map_err(stdout_failure)
        }
        Command::Scan { theta2_deg, start_deg, stop_deg, step_deg, mode, out: csv_path, svg } => {
            let cfg = ExperimentConfig::load(cli.config.as_deref(), env)?;
            let mode: ScanMode = mode.parse()?;
            if !(step_deg > 0.0) || !(stop_deg > start_deg) {
                return Err(Failure::Config(format!(
                    "invalid scan range: start {start_deg}, stop {stop_deg}, step {step_deg} (need step > 0 and stop > start)"
                )));
            }
            let thetas: Vec<f64> = angle_grid(start_deg, stop_deg, step_deg).into_iter().map(f64::to_radians).collect();
            let scan = polarization_scan_in(
                &cfg.source(),
                &cfg.detector,
                &cfg.run,
                theta2_deg.to_radians(),
                &thetas,
                mode,
                cfg.angle_convention,
            )?;
            let mut meta: Vec<(String, String)> = vec![
                ("start_deg".into(), start_deg.to_string()),
                ("stop_deg".into(), stop_deg.to_string()),
                ("step_deg".into(), step_deg.to_string()),
            ];
            meta.extend(cfg.echo().into_iter().map(|(k, v)| (k.to_string(), v)));
            match &csv_path {
                Some(p) => {
                    let file = std::fs::File::create(p).map_err(|e| io_failure(p, e))?;
                    write_scan_csv(std::io::BufWriter::new(file), &scan, &meta).map_err(|e| io_failure(p, e))?;
                }
                None => write_scan_csv(&mut *out, &scan, &meta).map_err(stdout_failure)?,
            }
            if let Some(p) = svg {
                let title = format!("coincidences, analyzer 2 at {}°", fmt_sig9(theta2_deg));
                std::fs::write(&p, render_svg(&quantize_scan(&scan), &title)).map_err(|e| io_failure(&p, e))?;
            }
            Ok(())
        }
        Command::Fit { input, subtract_accidentals, weighted } => {
            let text = std::fs::read_to_string(&input).map_err(|e| io_failure(&input, e))?;
            let (scan, _) = read_scan_csv(&text).map_err(|e| Failure::Io(format!("{}: {e}", input.display())))?;
            let text = fit_text(&scan, FitOptions { subtract_accidentals, weighted })?;
            out.write_all(text.as_bytes()).map_err(stdout_failure)
        }
        Command::Chsh { a_deg, a_prime_deg, b_deg, b_prime_deg } => {
            let cfg = ExperimentConfig::load(cli.config.as_deref(), env)?;
            let rho = emitted_state(&cfg.source())?;
            let s = chsh(&rho, a_deg.to_radians(), a_prime_deg.to_radians(), b_deg.to_radians(), b_prime_deg.to_radians());
            writeln!(out, "{s:.6}").map_err(stdout_failure)
        }
        Command::Reproduce { n_pulses, seed, workers, out: csv_path, svg } => {
            let workers = workers.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
            let scenario = FringeScenario::imbalanced(n_pulses, seed, workers)?;
            let report = scenario.run(ScanMode::MonteCarlo)?;
            if let Some(p) = &csv_path {
                let meta = vec![
                    ("scenario".to_string(), "reproduce-fig3".to_string()),
                    ("gain_down".to_string(), scenario.source.gain_down.to_string()),
                    ("background_prob".to_string(), scenario.detector.background_prob1.to_string()),
                    ("n_pulses".to_string(), n_pulses.to_string()),
                    ("seed".to_string(), seed.to_string()),
                ];
                let file = std::fs::File::create(p).map_err(|e| io_failure(p, e))?;
                write_scan_csv(std::io::BufWriter::new(file), &report.scan, &meta).map_err(|e| io_failure(p, e))?;
            }
            if let Some(p) = svg {
                std::fs::write(&p, render_svg(&report.scan, "coincidences, analyzer 2 at 45°")).map_err(|e| io_failure(&p, e))?;
            }
            let mut s = String::new();
            let _ = writeln!(s, "epsilon={:.6}", scenario.source.gain_down);
            let _ = writeln!(s, "background_prob={:.6e}", scenario.detector.background_prob1);
            let _ = writeln!(s, "pulses_per_angle={n_pulses}");
            let _ = writeln!(s, "raw_visibility={:.6}", report.raw.visibility);
            let _ = writeln!(s, "raw_visibility_err={:.6}", report.raw.visibility_err);
            let _ = writeln!(s, "corrected_visibility={:.6}", report.corrected.visibility);
            let _ = writeln!(s, "extreme_bin_raw={:.6}", report.extreme_bin_raw);
            let _ = writeln!(s, "extreme_bin_corrected={:.6}", report.extreme_bin_corrected);
            let _ = writeln!(s, "fringe_max_deg={:.6}", report.raw.phase.to_degrees());
            let _ = writeln!(s, "singles_fluctuation={:.6}", report.singles_fluctuation);
            out.write_all(s.as_bytes()).map_err(stdout_failure)
        }
    }
}

fn state_report(rho: &DensityMatrix, cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# density matrix, basis HH, HV, VH, VV (re+im i)");
    for i in 0..4 {
        let row: Vec<String> = (0..4)
            .map(|j| {
                let z = rho.entry(i, j);
                format!("{:+.6}{:+.6}i", z.re, z.im)
            })
            .collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    let _ = writeln!(s, "concurrence={:.6}", concurrence(rho));
    let _ = writeln!(s, "purity={:.6}", purity(rho));
    if let Ok(eps) = epsilon_of(&cfg.source()) {
        let _ = writeln!(s, "epsilon={:.6}{:+.6}i", eps.re, eps.im);
    }
    s
}

/// Fit report text for a scan, as printed by `fit`.
pub fn fit_text(scan: &FringeScan, opts: FitOptions) -> Result<String, Error> {
    let fit = fit_fringe_with(scan, opts)?;
    let extreme = extreme_bin_visibility(scan, opts.subtract_accidentals).ok();
    Ok(fit_report(&fit, extreme))
}
