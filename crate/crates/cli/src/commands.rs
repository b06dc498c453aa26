use std::fmt::Write as _;
use std::path::Path;

use dnls_core::functionals::{
    lifespan_bound, ode_lower_bound, ode_singular_time, pairing_integral, OdeBound,
};
use dnls_core::solver::{integrate, BlowupReport, Trajectory, Verdict};
use dnls_core::verify::{verify_run, CheckResult, VerifyReport, ABS_FLOOR};
use dnls_core::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;
use crate::output::{ensure_dir, write_atomic};
use crate::spec::{anchored, AlphaSource, RunSpec};

/// Relative tolerance on the constancy of `T0(A) · A^{p-1}` across a sweep.
pub const SCALING_TOLERANCE: f64 = 1e-10;
/// Extra points written past the last sample when extending the ODE bound.
const BOUND_EXTENSION_POINTS: usize = 1000;

pub struct RunArtifacts {
    pub report: BlowupReport,
    pub verification: VerifyReport,
}

impl RunArtifacts {
    pub fn exit_code(&self) -> u8 {
        if self.verification.all_passed {
            0
        } else {
            1
        }
    }
}

#[derive(Serialize)]
struct Metadata {
    n: usize,
    p: f64,
    lambda: Complex64,
    alpha: Complex64,
    alpha_source: AlphaSource,
    pairing_integral: Complex64,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct RunReportJson<'a> {
    #[serde(flatten)]
    report: &'a BlowupReport,
    metadata: Metadata,
}

fn pretty_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(dnls_core::DnlsError::from)?;
    text.push('\n');
    Ok(text.into_bytes())
}

/// Integrates, verifies and writes `trajectory.csv`, `report.json` and `verify.json` into `out`.
pub fn execute_run(spec: &RunSpec, out: &Path) -> Result<RunArtifacts, CliError> {
    let pairing = pairing_integral(&spec.u0)?;
    let (trajectory, report) = integrate(&spec.u0, &spec.params, &spec.solver)?;
    let verification = verify_run(&trajectory, Some(&report), &spec.params)?;

    ensure_dir(out)?;
    write_atomic(out, "trajectory.csv", trajectory.to_csv_string()?.as_bytes())?;
    let metadata = Metadata {
        n: spec.u0.grid().n(),
        p: spec.params.p,
        lambda: spec.params.lambda,
        alpha: spec.params.alpha,
        alpha_source: spec.alpha_source,
        pairing_integral: pairing,
        seed: spec.seed(),
    };
    write_atomic(out, "report.json", &pretty_json(&RunReportJson { report: &report, metadata })?)?;
    write_atomic(out, "verify.json", &pretty_json(&verification)?)?;
    Ok(RunArtifacts { report, verification })
}

fn describe_report(report: &BlowupReport) -> String {
    let mut text = String::new();
    match report.t_detected {
        Some(t) => write!(text, "blowup detected at t = {t:.12} ({:?})", report.trigger),
        None => write!(text, "no blowup up to t_max"),
    }
    .ok();
    match report.bound_t0 {
        Some(bound) => write!(text, "; lifespan bound T0 = {bound:.12}"),
        None => write!(text, "; no lifespan bound (condition fails)"),
    }
    .ok();
    write!(text, "; verdict {:?}", report.verdict).ok();
    text
}

fn describe_checks(verification: &VerifyReport) -> String {
    let mut text = String::new();
    for check in &verification.checks {
        let status = match (check.applicable, check.passed) {
            (false, _) => "n/a ",
            (true, true) => "pass",
            (true, false) => "FAIL",
        };
        writeln!(text, "  [{status}] {:<16} {:.3e} (tol {:.0e})", check.name, check.max_violation, check.tolerance).ok();
    }
    text
}

pub fn cmd_run(spec: &RunSpec, out: &Path) -> Result<u8, CliError> {
    let artifacts = execute_run(spec, out)?;
    println!("{}", describe_report(&artifacts.report));
    print!("{}", describe_checks(&artifacts.verification));
    println!("outputs written to {}", out.display());
    Ok(artifacts.exit_code())
}

pub fn parse_amplitudes(list: &str) -> Result<Vec<f64>, CliError> {
    let amplitudes = list
        .split(',')
        .map(|item| {
            let value: f64 = item
                .trim()
                .parse()
                .map_err(|_| CliError::InvalidInput(format!("amplitude {:?} is not a number", item.trim())))?;
            if value.is_finite() && value > 0.0 {
                Ok(value)
            } else {
                Err(CliError::InvalidInput(format!("amplitude {value} must be positive and finite")))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    if amplitudes.len() < 2 {
        return Err(CliError::InvalidInput(format!(
            "a sweep needs at least 2 amplitudes, got {}",
            amplitudes.len()
        )));
    }
    Ok(amplitudes)
}

struct SweepRow {
    amplitude: f64,
    pairing_abs: f64,
    bound: Option<f64>,
    outcome: Result<RunArtifacts, CliError>,
}

fn scaling_check(rows: &[SweepRow], p: f64) -> CheckResult {
    let scaled: Option<Vec<(f64, f64)>> =
        rows.iter().map(|r| r.bound.map(|b| (r.amplitude, b * r.amplitude.powf(p - 1.0)))).collect();
    let base = CheckResult {
        name: "bound_scaling".to_string(),
        max_violation: 0.0,
        tolerance: SCALING_TOLERANCE,
        passed: true,
        worst_time: None,
        applicable: false,
        note: None,
    };
    let Some(scaled) = scaled else {
        return CheckResult { note: Some("lifespan bound undefined for some amplitude".into()), ..base };
    };
    let reference = scaled[0].1;
    let mut worst = (None, 0.0f64);
    for &(amplitude, value) in &scaled {
        let scale = value.abs().max(reference.abs()).max(ABS_FLOOR / SCALING_TOLERANCE);
        let violation = (value - reference).abs() / scale;
        if violation > worst.1 || worst.0.is_none() {
            worst = (Some(amplitude), violation);
        }
    }
    CheckResult {
        max_violation: worst.1,
        passed: worst.1 <= SCALING_TOLERANCE,
        applicable: true,
        note: Some(format!("T0 * A^(p-1) = {reference:.15e}; worst_time holds the amplitude")),
        worst_time: worst.0,
        ..base
    }
}

fn format_optional(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

pub fn cmd_sweep(template: &RunSpec, amplitudes: &[f64], jobs: usize, out: &Path) -> Result<u8, CliError> {
    ensure_dir(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::InvalidInput(format!("cannot build a pool of {jobs} threads: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        amplitudes
            .par_iter()
            .enumerate()
            .map(|(index, &amplitude)| {
                let spec = template.scaled(amplitude);
                let pairing_abs = pairing_integral(&spec.u0).map(|i| i.norm()).unwrap_or(f64::NAN);
                let bound = lifespan_bound(&spec.u0, spec.params.p, spec.params.lambda).ok();
                let outcome = execute_run(&spec, &out.join(format!("run-{index:02}")));
                SweepRow { amplitude, pairing_abs, bound, outcome }
            })
            .collect()
    });

    let mut writer = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Core(e.into());
    writer.write_record(["A", "I_abs", "bound_T0", "t_detected", "consistent"]).map_err(io)?;
    let mut worst = 0u8;
    for (index, row) in rows.iter().enumerate() {
        let (t_detected, consistent) = match &row.outcome {
            Ok(run) => {
                let consistent = run.exit_code() == 0 && run.report.verdict != Verdict::BoundViolated;
                worst = worst.max(run.exit_code());
                println!("A = {}: {}", row.amplitude, describe_report(&run.report));
                (run.report.t_detected, consistent)
            }
            Err(e) => {
                worst = worst.max(e.exit_code().max(1));
                eprintln!("A = {} (run-{index:02}) failed: {e}", row.amplitude);
                (None, false)
            }
        };
        writer
            .write_record([
                format!("{:.16e}", row.amplitude),
                format!("{:.16e}", row.pairing_abs),
                format_optional(row.bound),
                format_optional(t_detected),
                consistent.to_string(),
            ])
            .map_err(io)?;
    }
    let summary = writer.into_inner().map_err(|e| CliError::InvalidInput(e.to_string()))?;
    write_atomic(out, "summary.csv", &summary)?;

    let scaling = scaling_check(&rows, template.params.p);
    println!(
        "bound scaling T0 ~ A^-(p-1): {} (max violation {:.3e})",
        if !scaling.applicable { "n/a" } else if scaling.passed { "pass" } else { "FAIL" },
        scaling.max_violation
    );
    if !scaling.passed {
        worst = worst.max(1);
    }
    write_atomic(out, "scaling.json", &pretty_json(&scaling)?)?;
    Ok(worst)
}

fn read_trajectory(path: &Path) -> Result<Trajectory, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Trajectory::read_csv(file).map_err(|e| CliError::InvalidInput(format!("{}: {e}", path.display())))
}

fn series(header: &str, points: impl IntoIterator<Item = (f64, f64)>) -> String {
    let mut text = format!("# {header}\n");
    for (t, v) in points {
        writeln!(text, "{t:.16e} {v:.16e}").ok();
    }
    text
}

/// `(t, ode_lower_bound)` at every sample time before the singular time `t*`,
/// continued on a uniform grid from the last sample up to (excluding) `t*`.
fn bound_series(trajectory: &Trajectory, spec: &RunSpec) -> String {
    let params = &spec.params;
    let m0 = trajectory.samples[0].m;
    let t_star = match ode_singular_time(m0, params.p, params.lambda, params.alpha) {
        Ok(t) => t,
        Err(e) => return format!("# t ode_lower_bound: not applicable ({e})\n"),
    };
    let value = |t: f64| match ode_lower_bound(m0, t, params.p, params.lambda, params.alpha) {
        Ok(OdeBound::Finite(v)) => Some((t, v)),
        _ => None,
    };
    let mut points: Vec<(f64, f64)> =
        trajectory.samples.iter().map(|s| s.t).take_while(|&t| t < t_star).filter_map(value).collect();
    let start = points.last().map_or(0.0, |&(t, _)| t);
    let step = (t_star - start) / BOUND_EXTENSION_POINTS as f64;
    points.extend((1..BOUND_EXTENSION_POINTS).filter_map(|i| value(start + i as f64 * step)));
    series(&format!("t ode_lower_bound; singular time t* = {t_star:.16e}"), points)
}

pub fn cmd_plotdata(trajectory_path: &Path, spec: &RunSpec, out: &Path) -> Result<u8, CliError> {
    let trajectory = read_trajectory(trajectory_path)?;
    ensure_dir(out)?;
    let m = series("t M", trajectory.samples.iter().map(|s| (s.t, s.m)));
    let sup = series("t sup", trajectory.samples.iter().map(|s| (s.t, s.sup)));
    write_atomic(out, "m.dat", m.as_bytes())?;
    write_atomic(out, "bound.dat", bound_series(&trajectory, spec).as_bytes())?;
    write_atomic(out, "sup.dat", sup.as_bytes())?;
    println!("wrote m.dat, bound.dat and sup.dat to {}", out.display());
    Ok(0)
}

pub fn cmd_verify(
    trajectory_path: &Path,
    report_path: Option<&Path>,
    spec: &RunSpec,
    out: &Path,
) -> Result<u8, CliError> {
    let trajectory = read_trajectory(trajectory_path)?;
    let report = match report_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let report: BlowupReport = serde_json::from_str(&text)
                .map_err(|e| CliError::InvalidInput(anchored(&path.display().to_string(), &e)))?;
            Some(report)
        }
        None => None,
    };
    let verification = verify_run(&trajectory, report.as_ref(), &spec.params)?;
    ensure_dir(out)?;
    write_atomic(out, "verify.json", &pretty_json(&verification)?)?;
    print!("{}", describe_checks(&verification));
    Ok(if verification.all_passed { 0 } else { 1 })
}
