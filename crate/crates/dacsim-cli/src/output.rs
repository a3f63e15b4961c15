//! Plain-text artifact writers: trajectory CSV and metrics report.

use dacsim::{MetricsReport64, TimeSeries64};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

/// Formats `v` with `sig` significant digits, shortest of fixed and
/// scientific notation — the `%g` convention, with a two-digit exponent
/// field (`1e-07`, `1e+11`).
pub fn fmt_sig(v: f64, sig: usize) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.*e}", sig - 1, v);
    let (mant, exp) = sci.split_once('e').expect("exponential format");
    let exp: i32 = exp.parse().expect("exponent parses");
    if exp < -4 || exp >= sig as i32 {
        let mant = trim_fraction(mant);
        format!("{mant}e{exp:+03}")
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{v:.decimals$}"))
    }
}

/// `fmt_sig` at the 9 significant digits used in run artifacts.
pub fn fmt_g(v: f64) -> String {
    fmt_sig(v, 9)
}

fn trim_fraction(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Writes the recorded series as CSV with a `", "`-separated header:
/// `t, nu_1.., err_1.., phibar_1..(one per final component),
/// fhat_<from>_<to>.., x2norm_1..`.
pub fn write_trajectory(ts: &TimeSeries64, path: &Path) -> io::Result<()> {
    let n = ts.nu.first().map_or(0, |row| row.len());
    let ncomp = ts.phibar.first().map_or(0, |row| row.len());
    let mut header: Vec<String> = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("nu_{i}")));
    header.extend((1..=n).map(|i| format!("err_{i}")));
    header.extend((1..=ncomp).map(|c| format!("phibar_{c}")));
    header.extend(ts.monitored.iter().map(|(f, t)| format!("fhat_{f}_{t}")));
    header.extend((1..=n).map(|i| format!("x2norm_{i}")));

    let mut text = header.join(", ");
    text.push('\n');
    for k in 0..ts.len() {
        let row = std::iter::once(ts.t[k])
            .chain(ts.nu[k].iter().copied())
            .chain(ts.err[k].iter().copied())
            .chain(ts.phibar[k].iter().copied())
            .chain(ts.fhat[k].iter().copied())
            .chain(ts.x2norm[k].iter().copied());
        let mut first = true;
        for v in row {
            if !first {
                text.push_str(", ");
            }
            text.push_str(&fmt_g(v));
            first = false;
        }
        text.push('\n');
    }
    fs::write(path, text)
}

/// Writes a metrics report as `key = value` lines, windows folded into
/// the key names.
pub fn write_metrics(report: &MetricsReport64, path: &Path) -> io::Result<()> {
    let (a, b) = report.window;
    let (wa, wb) = (fmt_g(a), fmt_g(b));
    let mut text = String::new();
    for (i, v) in report.rms_err.iter().enumerate() {
        writeln!(text, "rms_err_node{}_{wa}_{wb} = {}", i + 1, fmt_g(*v)).unwrap();
    }
    for (i, v) in report.max_x2.iter().enumerate() {
        writeln!(text, "max_x2_node{}_{wa}_{wb} = {}", i + 1, fmt_g(*v)).unwrap();
    }
    for ((from, to), v) in report.monitored.iter().zip(&report.rms_fhat_err) {
        writeln!(text, "rms_fhat_err_{from}_{to}_{wa}_{wb} = {}", fmt_g(*v)).unwrap();
    }
    fs::write(path, text)
}
