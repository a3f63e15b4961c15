//! Command implementations behind the `dacsim` binary.
//!
//! Exit-code contract: 0 success, 1 usage or configuration error,
//! 2 divergence during integration, 3 design-check failure.

pub mod output;
pub mod scenario_file;

use dacsim::consensus::verify_design;
use dacsim::fdi::{build_extended, uio_design, uio_existence_check};
use dacsim::sim::{builtin_scenario, metrics, run};
use dacsim::Scenario64;
use nalgebra::DMatrix;
use output::fmt_sig;
use scenario_file::ScenarioFile;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("state diverged at t = {0}")]
    Divergence(f64),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Divergence(_) => 2,
            CliError::CheckFailed(_) => 3,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

/// Command-line overrides applied after a scenario is loaded.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOverrides {
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
}

/// Loads a scenario from a builtin name or a TOML file path. Builtin
/// names are checked first.
pub fn load_scenario(arg: &str) -> Result<Scenario64, CliError> {
    if let Some(sc) = builtin_scenario::<f64>(arg) {
        return Ok(sc);
    }
    let text = fs::read_to_string(arg).map_err(io_err(format!(
        "cannot read scenario {arg:?} (not a builtin name either)"
    )))?;
    let file = ScenarioFile::parse(&text)
        .map_err(|e| CliError::Config(format!("{arg}: {e}")))?;
    file.to_scenario()
        .map_err(|e| CliError::Config(format!("{arg}: {e}")))
}

/// Runs a scenario and writes `trajectory.csv` and `metrics.txt` into
/// `out_dir` (created if needed).
pub fn cmd_run(
    arg: &str,
    out_dir: &Path,
    overrides: RunOverrides,
    w: &mut impl Write,
) -> Result<(), CliError> {
    let mut sc = load_scenario(arg)?;
    if let Some(dt) = overrides.dt {
        sc.dt = dt;
    }
    if let Some(t_end) = overrides.t_end {
        sc.t_end = t_end;
    }
    let ts = run(&sc).map_err(|e| match e {
        dacsim::Error::Divergence { t } => CliError::Divergence(t),
        other => CliError::Config(other.to_string()),
    })?;
    for warning in &ts.warnings {
        writeln!(w, "warning: {warning}").map_err(io_err("write output"))?;
    }
    let report = metrics(&ts, sc.metrics_window)
        .map_err(|e| CliError::Config(e.to_string()))?;

    fs::create_dir_all(out_dir)
        .map_err(io_err(format!("cannot create {}", out_dir.display())))?;
    let traj = out_dir.join("trajectory.csv");
    output::write_trajectory(&ts, &traj)
        .map_err(io_err(format!("cannot write {}", traj.display())))?;
    let metr = out_dir.join("metrics.txt");
    output::write_metrics(&report, &metr)
        .map_err(io_err(format!("cannot write {}", metr.display())))?;
    writeln!(
        w,
        "wrote {} ({} samples) and {}",
        traj.display(),
        ts.len(),
        metr.display()
    )
    .map_err(io_err("write output"))?;
    Ok(())
}

fn f6(v: f64) -> String {
    fmt_sig(v, 6)
}

fn c6(z: &nalgebra::Complex<f64>) -> String {
    format!("{} {} {}i", f6(z.re), if z.im < 0.0 { "-" } else { "+" }, f6(z.im.abs()))
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Verifies the tracking-design conditions and observer existence,
/// printing a line per condition. Fails (exit 3) naming the first
/// violated condition.
pub fn cmd_check(arg: &str, w: &mut impl Write) -> Result<(), CliError> {
    let sc = load_scenario(arg)?;
    sc.validate().map_err(|e| CliError::Config(e.to_string()))?;

    let lap = sc
        .graph
        .laplacian::<f64>()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let input_dens: Vec<_> = sc
        .signals
        .iter()
        .map(|s| s.generator_denominator())
        .collect();
    let report = verify_design(
        sc.design.h_tf(),
        sc.design.g_tf(),
        &sc.design.d,
        &input_dens,
        &lap.eigenvalues,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    let ext = build_extended(&sc.design);
    let existence =
        uio_existence_check(&ext).map_err(|e| CliError::Config(e.to_string()))?;

    let mut text = String::new();
    let mut first_fail: Option<&str> = None;
    let mut line = |ok: bool, name: &'static str, detail: String| {
        writeln!(text, "{} {name}: {detail}", pass(ok)).unwrap();
        if !ok && first_fail.is_none() {
            first_fail = Some(name);
        }
    };

    line(
        report.premise_connected,
        "graph_connected",
        format!("fiedler value {}", f6(lap.fiedler_value())),
    );
    line(
        report.premise_no_common_unstable,
        "no_common_unstable_roots",
        "h and g share no unstable pole".into(),
    );
    let inputs_ok = !report.input_models.is_empty() && report.input_models.iter().all(|&b| b);
    line(
        inputs_ok,
        "input_generators_absorbed",
        format!(
            "{}/{} node inputs divisible by d",
            report.input_models.iter().filter(|&&b| b).count(),
            report.input_models.len()
        ),
    );
    line(
        report.h_internal_model.pass,
        "h_internal_model",
        "d divides n_h - d_h".into(),
    );
    line(report.h_stable, "h_stable", "all poles of h strictly stable".into());
    let coupling_ok = report.coupling.iter().all(|c| c.pass);
    let worst = report
        .coupling
        .iter()
        .map(|c| c.worst_real_part)
        .fold(f64::NEG_INFINITY, f64::max);
    line(
        coupling_ok,
        "coupling_stable",
        format!(
            "worst root real part {} over {} nonzero eigenvalues",
            f6(worst),
            report.coupling.len()
        ),
    );
    line(
        report.g_internal_model.pass,
        "g_internal_model",
        "d divides d_g".into(),
    );
    line(
        existence.ce_nonzero,
        "uio_input_decoupled",
        format!("C*E = {}", f6(existence.ce)),
    );
    let zeros = existence
        .invariant_zeros
        .iter()
        .map(c6)
        .collect::<Vec<_>>()
        .join(", ");
    line(
        existence.zeros_stable,
        "uio_zeros_stable",
        if zeros.is_empty() {
            "no invariant zeros".into()
        } else {
            format!("invariant zeros {zeros}")
        },
    );

    let overall = report.overall && existence.exists;
    writeln!(text, "{} overall", pass(overall)).unwrap();
    w.write_all(text.as_bytes()).map_err(io_err("write output"))?;
    match first_fail {
        None => Ok(()),
        Some(name) => Err(CliError::CheckFailed(name.to_string())),
    }
}

fn write_matrix(text: &mut String, name: &str, m: &DMatrix<f64>) {
    writeln!(text, "{name} =").unwrap();
    for r in 0..m.nrows() {
        let row = (0..m.ncols())
            .map(|c| f6(m[(r, c)]))
            .collect::<Vec<_>>()
            .join(", ");
        writeln!(text, "  [{row}]").unwrap();
    }
}

/// Prints the observer design (H, T, F, K1, K2, K and the eigenvalues
/// of F) for a scenario's estimator. Design failures exit 3 naming the
/// violated condition.
pub fn cmd_design(arg: &str, w: &mut impl Write) -> Result<(), CliError> {
    let sc = load_scenario(arg)?;
    let ext = build_extended(&sc.design);
    let obs = uio_design(&ext, &sc.observer.gain)
        .map_err(|e| CliError::CheckFailed(e.to_string()))?;

    let col = |v: &nalgebra::DVector<f64>| DMatrix::from_column_slice(v.len(), 1, v.as_slice());
    let mut text = String::new();
    write_matrix(&mut text, "H", &col(&obs.h));
    write_matrix(&mut text, "T", &obs.t);
    write_matrix(&mut text, "F", &obs.f);
    write_matrix(&mut text, "K1", &col(&obs.k1));
    write_matrix(&mut text, "K2", &col(&obs.k2));
    write_matrix(&mut text, "K", &col(&obs.k));
    let eigs = obs
        .f_eigenvalues
        .iter()
        .map(c6)
        .collect::<Vec<_>>()
        .join(", ");
    writeln!(text, "eig(F) = [{eigs}]").unwrap();
    w.write_all(text.as_bytes()).map_err(io_err("write output"))?;
    Ok(())
}
