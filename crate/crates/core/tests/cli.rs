use std::path::Path;
use std::process::{Command, Output};

use pulsepair::analysis::{FitOptions, ScanMode};
use pulsepair::cli::{fit_text, EXIT_CONFIG, EXIT_IO, EXIT_OK};
use pulsepair::config::KEYS;
use pulsepair::output::{quantize_scan, read_scan_csv, CSV_HEADER};
use pulsepair::{polarization_scan, DetectorConfig, RunConfig, SourceConfig};

fn pulsepair(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pulsepair"));
    cmd.args(args);
    for (k, _) in std::env::vars() {
        if k.starts_with("PULSEPAIR_") {
            cmd.env_remove(k);
        }
    }
    cmd.envs(env.iter().copied());
    cmd.output().expect("spawn pulsepair")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#') && *l != CSV_HEADER && !l.is_empty())
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn chsh_prints_maximal_violation() {
    let o = pulsepair(&["chsh"], &[]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    assert_eq!(stdout(&o).trim(), "2.828427");
}

#[test]
fn chsh_with_partial_overlap() {
    let o = pulsepair(&["chsh"], &[("PULSEPAIR_OVERLAP_MU", "0.86")]);
    assert_eq!(stdout(&o).trim(), "2.630437");
}

#[test]
fn analytic_scan_has_36_rows_peaking_at_45() {
    let o = pulsepair(&["scan", "--theta2-deg", "45"], &[]);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains(CSV_HEADER));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 36);
    let (scan, _) = read_scan_csv(&text).unwrap();
    let fit = pulsepair::fit_fringe(&scan, false).unwrap();
    assert!((fit.phase.to_degrees() - 45.0).abs() < 1e-6, "max at {}", fit.phase.to_degrees());
    let best = rows.iter().max_by(|a, b| a[1].total_cmp(&b[1])).unwrap();
    assert!([40.0, 50.0, 220.0, 230.0].contains(&best[0]));
}

#[test]
fn scan_echoes_every_config_key() {
    let o = pulsepair(&["scan"], &[]);
    let text = stdout(&o);
    for key in KEYS {
        assert!(text.lines().any(|l| l.starts_with(&format!("# {key}="))), "{key} missing");
    }
}

#[test]
fn config_file_and_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.conf");
    std::fs::write(&path, "# test\noverlap_mu = 0.5\nmean_pairs_per_pulse=0.02\n").unwrap();
    let p = path.to_str().unwrap();

    let o = pulsepair(&["--config", p, "state"], &[]);
    assert!(stdout(&o).contains("concurrence=0.500000"));

    let o = pulsepair(&["--config", p, "state"], &[("PULSEPAIR_OVERLAP_MU", "0.25")]);
    assert!(stdout(&o).contains("concurrence=0.250000"));
    let o = pulsepair(&["--config", p, "scan"], &[("PULSEPAIR_OVERLAP_MU", "0.25")]);
    assert!(stdout(&o).contains("# mean_pairs_per_pulse=0.02"));
}

#[test]
fn exit_codes() {
    assert_eq!(pulsepair(&["--help"], &[]).status.code(), Some(EXIT_OK));
    assert_eq!(pulsepair(&["nonsense"], &[]).status.code(), Some(EXIT_CONFIG));
    assert_eq!(pulsepair(&["scan", "--mode", "fast"], &[]).status.code(), Some(EXIT_CONFIG));
    assert_eq!(pulsepair(&["scan", "--step-deg", "0"], &[]).status.code(), Some(EXIT_CONFIG));
    assert_eq!(pulsepair(&["state"], &[("PULSEPAIR_OVERLAP_MU", "1.5")]).status.code(), Some(EXIT_CONFIG));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.conf");
    let o = pulsepair(&["--config", missing.to_str().unwrap(), "state"], &[]);
    assert_eq!(o.status.code(), Some(EXIT_IO));
    assert!(!o.stderr.is_empty());

    let o = pulsepair(&["fit", missing.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(EXIT_IO));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "not,a,scan\n").unwrap();
    assert_eq!(pulsepair(&["fit", bad.to_str().unwrap()], &[]).status.code(), Some(EXIT_IO));

    let unwritable = dir.path().join("no/such/dir/out.csv");
    assert_eq!(pulsepair(&["scan", "--out", unwritable.to_str().unwrap()], &[]).status.code(), Some(EXIT_IO));
}

#[test]
fn fit_of_flat_counts_has_zero_visibility() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.csv");
    let mut text = format!("# mode=analytic\n# theta2_deg=45\n{CSV_HEADER}\n");
    for k in 0..36 {
        text.push_str(&format!("{},1000,5000,5000,3\n", 10 * k));
    }
    std::fs::write(&path, text).unwrap();
    let o = pulsepair(&["fit", path.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    assert!(stdout(&o).lines().any(|l| l == "visibility=0.000000"), "{}", stdout(&o));
}

#[test]
fn scan_then_fit_matches_in_process_fit() {
    let dir = tempfile::tempdir().unwrap();
    for mode in ["analytic", "monte-carlo"] {
        let csv = dir.path().join(format!("{mode}.csv"));
        let env = [("PULSEPAIR_N_PULSES", "20000"), ("PULSEPAIR_SEED", "11"), ("PULSEPAIR_OVERLAP_MU", "0.7")];
        let o = pulsepair(&["scan", "--mode", mode, "--out", csv.to_str().unwrap()], &env);
        assert_eq!(o.status.code(), Some(EXIT_OK));
        let o = pulsepair(&["fit", csv.to_str().unwrap(), "--subtract-accidentals"], &[]);
        assert_eq!(o.status.code(), Some(EXIT_OK));

        let source = SourceConfig { overlap_mu: 0.7, ..SourceConfig::default() };
        let run = RunConfig { n_pulses: 20000, seed: 11, workers: 1 };
        let thetas: Vec<f64> = (0..36).map(|k| (10.0 * k as f64).to_radians()).collect();
        let scan = polarization_scan(&source, &DetectorConfig::default(), &run, 45f64.to_radians(), &thetas, mode.parse::<ScanMode>().unwrap()).unwrap();
        let expected = fit_text(&quantize_scan(&scan), FitOptions { subtract_accidentals: true, weighted: false }).unwrap();
        assert_eq!(stdout(&o), expected, "{mode}");

        let (read, _) = read_scan_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap();
        assert_eq!(read, quantize_scan(&scan));
    }
}

#[test]
fn scan_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("scan.svg");
    let o = pulsepair(&["scan", "--svg", svg.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let body = std::fs::read_to_string(Path::new(&svg)).unwrap();
    assert!(body.starts_with("<svg") || body.starts_with("<?xml"));
    assert!(body.trim_end().ends_with("</svg>"));
}

#[test]
fn reproduce_small_run() {
    let o = pulsepair(&["reproduce-fig3", "--n-pulses", "20000", "--workers", "2"], &[]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let text = stdout(&o);
    for key in ["epsilon=0.569", "raw_visibility=", "corrected_visibility=", "extreme_bin_raw=", "singles_fluctuation="] {
        assert!(text.contains(key), "{key} missing:\n{text}");
    }
}
