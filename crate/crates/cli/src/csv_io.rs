//! CSV reading/writing with locale-independent, round-trip-exact floats.

use std::fs;
use std::io::Write;
use std::path::Path;

use isb_core::analysis::{Bin, BinnedSpectrum, ScanDirection, ScanRecord};
use isb_core::types::{from_angular, Spectrum};

/// Shortest round-trip decimal; scientific notation outside a readable
/// range. Always '.' as the decimal separator.
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-4..1e7).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Write a temporary file then rename, so a crashed run never leaves a
/// partial output at the final path.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension(match path.extension() {
        Some(e) => format!("{}.tmp", e.to_string_lossy()),
        None => "tmp".to_string(),
    });
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Spectrum CSV: `detuning_hz,excitation_fraction,sigma` (sigma empty
/// when absent). Detunings are converted back to ordinary Hz.
pub fn spectrum_csv(spectrum: &Spectrum) -> String {
    let mut out = String::from("detuning_hz,excitation_fraction,sigma\n");
    for p in spectrum.points() {
        out.push_str(&format_float(from_angular(p.detuning)));
        out.push(',');
        out.push_str(&format_float(p.excitation));
        out.push(',');
        if let Some(s) = p.sigma {
            out.push_str(&format_float(s));
        }
        out.push('\n');
    }
    out
}

/// Binned-spectrum CSV: `detuning_hz,mean,sem,count`.
pub fn binned_csv(binned: &BinnedSpectrum) -> String {
    let mut out = String::from("detuning_hz,mean,sem,count\n");
    for b in &binned.bins {
        out.push_str(&format!(
            "{},{},{},{}\n",
            format_float(b.center),
            format_float(b.mean),
            format_float(b.sem),
            b.count
        ));
    }
    out
}

/// Parse a binned CSV back (the inverse of [`binned_csv`]).
pub fn parse_binned_csv(text: &str, bin_width: f64) -> Result<BinnedSpectrum, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "detuning_hz,mean,sem,count" => {}
        other => return Err(format!("bad binned CSV header: {other:?}")),
    }
    let mut bins = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(format!("binned CSV row {} malformed", i + 2));
        }
        let parse = |s: &str| -> Result<f64, String> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| format!("binned CSV row {}: {e}", i + 2))
        };
        bins.push(Bin {
            center: parse(cols[0])?,
            mean: parse(cols[1])?,
            sem: parse(cols[2])?,
            count: cols[3]
                .trim()
                .parse::<usize>()
                .map_err(|e| format!("binned CSV row {}: {e}", i + 2))?,
        });
    }
    Ok(BinnedSpectrum { bins, bin_width })
}

/// Parse one scan file (header `detuning_hz,excitation`). The sweep
/// direction is inferred from the detuning order.
pub fn parse_scan_csv(text: &str, scan_id: u64) -> Result<ScanRecord, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "detuning_hz,excitation" => {}
        other => return Err(format!("bad scan CSV header: {other:?}")),
    }
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 2 {
            return Err(format!("scan CSV row {} malformed", i + 2));
        }
        let x = cols[0]
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("scan CSV row {}: {e}", i + 2))?;
        let y = cols[1]
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("scan CSV row {}: {e}", i + 2))?;
        points.push((x, y));
    }
    if points.len() < 2 {
        return Err("scan CSV needs at least two points".to_string());
    }
    let direction = if points[1].0 > points[0].0 {
        ScanDirection::Up
    } else {
        ScanDirection::Down
    };
    ScanRecord::new(points, direction, scan_id).map_err(|e| e.to_string())
}

/// Scan CSV writer (used when synthesizing data).
pub fn scan_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("detuning_hz,excitation\n");
    for &(x, y) in points {
        out.push_str(&format_float(x));
        out.push(',');
        out.push_str(&format_float(y));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for &v in &[0.0, 1.5, -2e-9, 3.14159e12, 0.1 + 0.2, f64::MIN_POSITIVE] {
            let s = format_float(v);
            assert!(!s.contains(','));
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, v, "{s}");
        }
    }

    #[test]
    fn scan_round_trip() {
        let pts = vec![(-10.0, 0.1), (-8.0, 0.15), (-6.0, 0.2)];
        let text = scan_csv(&pts);
        let scan = parse_scan_csv(&text, 3).unwrap();
        assert_eq!(scan.points, pts);
        assert_eq!(scan.direction, ScanDirection::Up);
    }
}
