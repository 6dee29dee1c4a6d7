//! Scan CSV files, fit reports and the SVG fringe chart.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::analysis::{FringeFit, FringePoint, FringeScan, ScanMode};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "theta1_deg,coincidences,singles1,singles2,accidentals";

/// Formats like C's `%.9g`.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..9).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mantissa), sign, exp.abs())
    } else {
        let decimals = (8 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}"))
    }
}

fn requantize(x: f64) -> f64 {
    fmt_sig9(x).parse().expect("formatted float parses")
}

/// The scan exactly as it reads back from its CSV form.
pub fn quantize_scan(scan: &FringeScan) -> FringeScan {
    let points = scan
        .points
        .iter()
        .map(|p| FringePoint {
            theta1: requantize(p.theta1.to_degrees()).to_radians(),
            coincidences: requantize(p.coincidences),
            singles1: requantize(p.singles1),
            singles2: requantize(p.singles2),
            accidentals: requantize(p.accidentals),
        })
        .collect();
    FringeScan { theta2: requantize(scan.theta2.to_degrees()).to_radians(), points, mode: scan.mode }
}

/// Writes `scan` as CSV; `metadata` pairs become `# key=value` lines ahead of
/// the header.
pub fn write_scan_csv<W: Write>(mut w: W, scan: &FringeScan, metadata: &[(String, String)]) -> io::Result<()> {
    writeln!(w, "# pulsepair polarization scan")?;
    writeln!(w, "# mode={}", scan.mode.as_str())?;
    writeln!(w, "# theta2_deg={}", fmt_sig9(scan.theta2.to_degrees()))?;
    for (k, v) in metadata {
        writeln!(w, "# {k}={v}")?;
    }
    writeln!(w, "{CSV_HEADER}")?;
    for p in &scan.points {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_sig9(p.theta1.to_degrees()),
            fmt_sig9(p.coincidences),
            fmt_sig9(p.singles1),
            fmt_sig9(p.singles2),
            fmt_sig9(p.accidentals)
        )?;
    }
    Ok(())
}

/// Parses a scan CSV. Returns the scan and its `# key=value` metadata.
pub fn read_scan_csv(text: &str) -> Result<(FringeScan, Vec<(String, String)>)> {
    let mut metadata = Vec::new();
    let mut header_seen = false;
    let mut points = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.trim().split_once('=') {
                metadata.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        if !header_seen {
            if line != CSV_HEADER {
                return Err(Error::Parse(format!("line {}: expected header {CSV_HEADER:?}", lineno + 1)));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        let [theta1, coincidences, singles1, singles2, accidentals] = fields[..] else {
            return Err(Error::Parse(format!("line {}: expected 5 columns, got {}", lineno + 1, fields.len())));
        };
        points.push(FringePoint { theta1: theta1.to_radians(), coincidences, singles1, singles2, accidentals });
    }
    if !header_seen {
        return Err(Error::Parse("missing CSV header".into()));
    }
    let lookup = |key: &str| metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    let theta2 = match lookup("theta2_deg") {
        Some(v) => v.parse::<f64>().map_err(|e| Error::Parse(format!("theta2_deg: {e}")))?.to_radians(),
        None => 0.0,
    };
    let mode = match lookup("mode") {
        Some(v) => v.parse()?,
        None => ScanMode::Analytic,
    };
    Ok((FringeScan::new(theta2, points, mode)?, metadata))
}

pub fn fit_report(fit: &FringeFit, extreme_bin: Option<f64>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "offset={:.6}", fit.offset);
    let _ = writeln!(s, "amplitude={:.6}", fit.amplitude);
    let _ = writeln!(s, "phase_deg={:.6}", fit.phase.to_degrees());
    let _ = writeln!(s, "phase_err_deg={:.6}", fit.phase_err.to_degrees());
    let _ = writeln!(s, "visibility={:.6}", fit.visibility);
    let _ = writeln!(s, "visibility_err={:.6}", fit.visibility_err);
    let _ = writeln!(s, "rms_residual={:.6}", fit.rms_residual);
    if let Some(v) = extreme_bin {
        let _ = writeln!(s, "extreme_bin_visibility={v:.6}");
    }
    s
}

/// Single-polyline chart of coincidences against θ₁.
pub fn render_svg(scan: &FringeScan, title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const L: f64 = 70.0;
    const R: f64 = 20.0;
    const T: f64 = 40.0;
    const B: f64 = 50.0;
    let xs: Vec<f64> = scan.points.iter().map(|p| p.theta1.to_degrees()).collect();
    let ys: Vec<f64> = scan.points.iter().map(|p| p.coincidences).collect();
    let (xmin, xmax) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let ymax = ys.iter().copied().fold(0.0, f64::max);
    let xspan = if xmax > xmin { xmax - xmin } else { 1.0 };
    let yspan = if ymax > 0.0 { ymax } else { 1.0 };
    let px = |x: f64| L + (x - xmin) / xspan * (W - L - R);
    let py = |y: f64| H - B - y / yspan * (H - T - B);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#, W / 2.0, xml_escape(title));
    let _ = writeln!(svg, r#"<line x1="{L}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, H - B, W - R, H - B);
    let _ = writeln!(svg, r#"<line x1="{L}" y1="{T}" x2="{L}" y2="{}" stroke="black"/>"#, H - B);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">analyzer 1 angle (deg)</text>"#, (L + W - R) / 2.0, H - 12.0);
    let _ = writeln!(svg, r#"<text x="18" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {})">coincidences</text>"#, (T + H - B) / 2.0, (T + H - B) / 2.0);
    let _ = writeln!(svg, r#"<text x="{L}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#, H - B + 16.0, fmt_sig9(xmin));
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#, W - R, H - B + 16.0, fmt_sig9(xmax));
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#, L - 6.0, T + 4.0, fmt_sig9(ymax));
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">0</text>"#, L - 6.0, H - B + 4.0);
    let pts: Vec<String> = xs.iter().zip(&ys).map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
    let _ = writeln!(svg, r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#, pts.join(" "));
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sig9_matches_printf_g() {
        let cases = [
            (0.0, "0"),
            (500.0, "500"),
            (9000.0, "9000"),
            (0.5, "0.5"),
            (2.547e-3, "0.002547"),
            (1.0 / 3.0, "0.333333333"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (6.49e-6, "6.49e-06"),
            (-45.0, "-45"),
            (0.0001, "0.0001"),
        ];
        for (x, s) in cases {
            assert_eq!(fmt_sig9(x), s, "{x}");
        }
    }

    proptest! {
        #[test]
        fn sig9_keeps_nine_digits(x in -1e12f64..1e12) {
            let back: f64 = fmt_sig9(x).parse().unwrap();
            prop_assert!((back - x).abs() <= 5e-9 * x.abs().max(1e-300));
        }

        #[test]
        fn csv_round_trip_equals_quantized_scan(
            counts in proptest::collection::vec((0.0f64..1e7, 0.0f64..1e7, 0.0f64..1e7, 0.0f64..1e3), 4..40),
            theta2 in -3.0f64..3.0,
        ) {
            let points = counts
                .iter()
                .enumerate()
                .map(|(k, &(c, s1, s2, a))| FringePoint { theta1: (k as f64 * 7.3).to_radians(), coincidences: c, singles1: s1, singles2: s2, accidentals: a })
                .collect();
            let scan = FringeScan::new(theta2, points, ScanMode::MonteCarlo).unwrap();
            let mut buf = Vec::new();
            write_scan_csv(&mut buf, &scan, &[("seed".into(), "3".into())]).unwrap();
            let (back, meta) = read_scan_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
            prop_assert_eq!(back, quantize_scan(&scan));
            prop_assert!(meta.iter().any(|(k, v)| k == "seed" && v == "3"));
        }
    }

    #[test]
    fn reader_rejects_malformed_files() {
        assert!(read_scan_csv("1,2,3,4,5\n").is_err());
        assert!(read_scan_csv(&format!("{CSV_HEADER}\n1,2,3\n")).is_err());
        assert!(read_scan_csv(&format!("{CSV_HEADER}\n1,2,x,4,5\n")).is_err());
        assert!(read_scan_csv(&format!("{CSV_HEADER}\n1,-2,3,4,5\n")).is_err());
        assert!(read_scan_csv("").is_err());
    }

    #[test]
    fn svg_has_one_polyline() {
        let points = (0..36)
            .map(|k| FringePoint { theta1: (10.0 * k as f64).to_radians(), coincidences: k as f64, singles1: 0.0, singles2: 0.0, accidentals: 0.0 })
            .collect();
        let scan = FringeScan::new(0.0, points, ScanMode::Analytic).unwrap();
        let svg = render_svg(&scan, "fringe <test>");
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("analyzer 1 angle (deg)"));
        assert!(svg.contains("fringe &lt;test&gt;"));
    }
}
