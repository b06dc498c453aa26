//! Trajectory-level checks of the identities and inequalities behind the
//! blowup argument. All checks read recorded observables only, so they work
//! equally on fresh runs and on trajectories read back from CSV.
//!
//! Tolerances are applied as `|a - b| <= max(tol * scale, 1e-14)` with
//! `scale` the larger comparand; the reported violation is normalized so
//! that `passed <=> max_violation <= tolerance`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{DnlsError, Result};
use crate::functionals::{holder_majorant_from_norm, ode_lower_bound, OdeBound, ProblemParams};
use crate::solver::{gauge_transform_trajectory, BlowupReport, Trajectory, LIFESPAN_RTOL, TAIL_FRACTION_LIMIT};

pub const ABS_FLOOR: f64 = 1e-14;
pub const GROWTH_TOLERANCE: f64 = 1e-4;
pub const HOLDER_TOLERANCE: f64 = 1e-10;
pub const ODE_TOLERANCE: f64 = 1e-4;
pub const DENSITY_TOLERANCE: f64 = 1e-10;
pub const DRIFT_TOLERANCE: f64 = 1e-8;
pub const GAUGE_MODULUS_TOLERANCE: f64 = 1e-12;
pub const ENERGY_TOLERANCE: f64 = 1e-5;
/// Centered differences of `M` are trusted only while the sampling resolves
/// its growth: `h |dM/dt| / |M| <= 1 / MIN_SAMPLES_PER_EFOLD`.
pub const MIN_SAMPLES_PER_EFOLD: f64 = 200.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub max_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub worst_time: Option<f64>,
    pub applicable: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl CheckResult {
    fn from_violations(name: &str, tolerance: f64, violations: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut worst = (None, 0.0f64);
        for (t, v) in violations {
            let v = if v.is_nan() { f64::INFINITY } else { v };
            if worst.0.is_none() || v > worst.1 {
                worst = (Some(t), v);
            }
        }
        Self {
            name: name.to_string(),
            max_violation: worst.1,
            tolerance,
            passed: worst.1 <= tolerance,
            worst_time: worst.0,
            applicable: true,
            note: None,
        }
    }

    fn not_applicable(name: &str, tolerance: f64, note: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            max_violation: 0.0,
            tolerance,
            passed: true,
            worst_time: None,
            applicable: false,
            note: Some(note.into()),
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Two-sided relative discrepancy, normalized against `tol`.
fn relative(a: f64, b: f64, tol: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(ABS_FLOOR / tol);
    (a - b).abs() / scale
}

/// One-sided excess of `lhs` over `rhs`, normalized against `tol`.
fn excess(lhs: f64, rhs: f64, tol: f64) -> f64 {
    (lhs - rhs).max(0.0) / rhs.abs().max(ABS_FLOOR / tol)
}

fn growth_rate(params: &ProblemParams, lp1: f64) -> f64 {
    2.0 * params.alpha.re * params.lambda.re * lp1.powf(params.p + 1.0)
}

/// Number of leading samples that are spatially resolved.
fn resolved_prefix(traj: &Trajectory) -> usize {
    traj.samples
        .iter()
        .position(|s| s.tail_fraction.is_some_and(|f| f > TAIL_FRACTION_LIMIT))
        .unwrap_or(traj.len())
}

/// Relative residuals `(t_i, |ΔM/2h - dM/dt|)` at interior samples of the
/// resolved, uniformly sampled prefix of the trajectory.
pub fn growth_identity_residuals(traj: &Trajectory, params: &ProblemParams) -> Result<Vec<(f64, f64)>> {
    let s = &traj.samples;
    if s.len() < 5 {
        return Err(DnlsError::TooFewSamples { needed: 5, have: s.len() });
    }
    let h = traj.sample_interval;
    let uniform = |i: usize| ((s[i].t - s[i - 1].t) - h).abs() <= 1e-9 * h;
    let limit = resolved_prefix(traj);
    let mut out = Vec::new();
    for i in 1..limit.saturating_sub(1) {
        if !uniform(i) || !uniform(i + 1) {
            break;
        }
        let rhs = growth_rate(params, s[i].lp1);
        if s[i].m != 0.0 && h * rhs.abs() / s[i].m.abs() > 1.0 / MIN_SAMPLES_PER_EFOLD {
            break;
        }
        let fd = (s[i + 1].m - s[i - 1].m) / (2.0 * h);
        out.push((s[i].t, relative(fd, rhs, GROWTH_TOLERANCE)));
    }
    Ok(out)
}

/// `dM/dt = 2 Re α Re λ ‖u‖^{p+1}_{L^{p+1}}` on the resolved portion. When the
/// right side vanishes identically (`Re α Re λ = 0`), checks constancy of `M`.
pub fn check_growth_identity(traj: &Trajectory, params: &ProblemParams, tolerance: f64) -> Result<CheckResult> {
    const NAME: &str = "growth_identity";
    if params.alpha.re * params.lambda.re == 0.0 {
        if traj.len() < 5 {
            return Err(DnlsError::TooFewSamples { needed: 5, have: traj.len() });
        }
        let m0 = traj.samples[0].m;
        return Ok(CheckResult::from_violations(
            NAME,
            DRIFT_TOLERANCE,
            traj.samples.iter().map(|s| (s.t, relative(s.m, m0, DRIFT_TOLERANCE))),
        )
        .with_note("Re α · Re λ = 0: M must stay constant"));
    }
    let residuals = growth_identity_residuals(traj, params)?;
    if residuals.is_empty() {
        return Ok(CheckResult::not_applicable(NAME, tolerance, "no resolved interior samples"));
    }
    let end = residuals.last().map(|r| r.0).unwrap_or_default();
    Ok(CheckResult::from_violations(NAME, tolerance, residuals)
        .with_note(format!("resolved portion ends at t = {end}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthRefinement {
    pub coarse_residual: f64,
    pub fine_residual: f64,
    pub ratio: f64,
    /// `C` in `residual ≈ C h²`, fitted from the pair.
    pub c_estimate: f64,
}

/// Compares growth-identity residuals of two runs whose sample intervals
/// differ by a factor two, over the times resolved by the coarse run.
pub fn growth_refinement(coarse: &Trajectory, fine: &Trajectory, params: &ProblemParams) -> Result<GrowthRefinement> {
    let coarse_res = growth_identity_residuals(coarse, params)?;
    let fine_res = growth_identity_residuals(fine, params)?;
    let window_end = coarse_res
        .last()
        .map(|r| r.0)
        .ok_or_else(|| DnlsError::MalformedTrajectory("coarse run has no resolved samples".to_string()))?;
    let tol = 1e-9 * coarse.sample_interval;
    let coarse_residual = coarse_res.iter().map(|r| r.1).fold(0.0, f64::max);
    let fine_residual = fine_res
        .iter()
        .filter(|r| r.0 <= window_end + tol && coarse_res.iter().any(|c| (c.0 - r.0).abs() <= tol))
        .map(|r| r.1)
        .fold(0.0, f64::max);
    let h = coarse.sample_interval;
    Ok(GrowthRefinement {
        coarse_residual,
        fine_residual,
        ratio: coarse_residual / fine_residual,
        c_estimate: (coarse_residual - fine_residual) / (0.75 * h * h),
    })
}

/// `|M| <= |α| ‖u‖²_{L¹} <= (2π)^{2p/(p+1)} |α| ‖u‖²_{L^{p+1}}` at every sample.
pub fn check_holder_chain(traj: &Trajectory, params: &ProblemParams) -> CheckResult {
    let alpha_abs = params.alpha.norm();
    let mut has_l1 = true;
    let violations: Vec<(f64, f64)> = traj
        .samples
        .iter()
        .map(|s| {
            let outer = holder_majorant_from_norm(s.lp1, params.alpha, params.p);
            let v = match s.l1 {
                Some(l1) => {
                    let middle = alpha_abs * l1 * l1;
                    excess(s.m.abs(), middle, HOLDER_TOLERANCE).max(excess(middle, outer, HOLDER_TOLERANCE))
                }
                None => {
                    has_l1 = false;
                    excess(s.m.abs(), outer, HOLDER_TOLERANCE)
                }
            };
            (s.t, v)
        })
        .collect();
    let result = CheckResult::from_violations("holder_chain", HOLDER_TOLERANCE, violations);
    if has_l1 {
        result
    } else {
        result.with_note("L1 norms not recorded; checked |M| against the outer majorant only")
    }
}

/// `M(t) >= (1 - tol) · (comparison lower bound)` on the resolved samples.
pub fn check_ode_comparison(traj: &Trajectory, params: &ProblemParams, tolerance: f64) -> CheckResult {
    const NAME: &str = "ode_comparison";
    let Some(first) = traj.samples.first() else {
        return CheckResult::not_applicable(NAME, tolerance, "empty trajectory");
    };
    let m0 = first.m;
    if !(m0 > 0.0) {
        return CheckResult::not_applicable(NAME, tolerance, "M(0) <= 0");
    }
    if !params.is_blowup_mode() {
        return CheckResult::not_applicable(NAME, tolerance, "Re α · Re λ <= 0");
    }
    let limit = resolved_prefix(traj);
    let violations = traj.samples[..limit].iter().map(|s| {
        let v = match ode_lower_bound(m0, s.t, params.p, params.lambda, params.alpha) {
            Ok(OdeBound::Finite(bound)) => ((bound - s.m) / bound).max(0.0),
            Ok(OdeBound::BlownUp) | Err(_) => f64::INFINITY,
        };
        (s.t, v)
    });
    CheckResult::from_violations(NAME, tolerance, violations)
}

/// `t_detected <= T0 (1 + 1e-6)`.
pub fn check_lifespan(report: &BlowupReport) -> CheckResult {
    const NAME: &str = "lifespan";
    match (report.detected, report.t_detected, report.bound_t0) {
        (true, Some(t), Some(bound)) => {
            CheckResult::from_violations(NAME, LIFESPAN_RTOL, [(t, (t / bound - 1.0).max(0.0))])
        }
        (_, _, None) => CheckResult::not_applicable(NAME, LIFESPAN_RTOL, "no blowup expected"),
        _ => CheckResult::not_applicable(NAME, LIFESPAN_RTOL, "no blowup detected before t_max"),
    }
}

fn is_gauge_regime(params: &ProblemParams) -> bool {
    (params.p - 3.0).abs() <= 1e-12 && (params.lambda - crate::Complex64::new(0.0, -1.0)).norm() <= 1e-12
}

/// Total density always; `L²` and `M` drift when `Re λ = 0`; gauge modulus and
/// `E₂` drift when `p = 3, λ = -i` and field states are available.
pub fn check_conservation_suite(traj: &Trajectory, params: &ProblemParams) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    out.push(CheckResult::from_violations(
        "total_density",
        DENSITY_TOLERANCE,
        traj.samples.iter().map(|s| {
            let scale = s.l2.max(ABS_FLOOR / DENSITY_TOLERANCE);
            (s.t, s.total_density_abs / scale)
        }),
    ));

    let Some(first) = traj.samples.first() else {
        return Ok(out);
    };
    if params.lambda.re == 0.0 {
        out.push(CheckResult::from_violations(
            "l2_drift",
            DRIFT_TOLERANCE,
            traj.samples.iter().map(|s| (s.t, relative(s.l2, first.l2, DRIFT_TOLERANCE))),
        ));
        out.push(CheckResult::from_violations(
            "m_drift",
            DRIFT_TOLERANCE,
            traj.samples.iter().map(|s| (s.t, relative(s.m, first.m, DRIFT_TOLERANCE))),
        ));
    } else {
        out.push(CheckResult::not_applicable("l2_drift", DRIFT_TOLERANCE, "Re λ != 0"));
        out.push(CheckResult::not_applicable("m_drift", DRIFT_TOLERANCE, "Re λ != 0"));
    }

    if is_gauge_regime(params) && traj.has_states() {
        let gauge = gauge_transform_trajectory(traj, params)?;
        let modulus = gauge.states.iter().zip(&traj.states).zip(&gauge.times).map(|((w, u), &t)| {
            let v = w
                .samples()
                .iter()
                .zip(u.samples())
                .map(|(w, u)| relative(w.norm(), u.norm(), GAUGE_MODULUS_TOLERANCE))
                .fold(0.0, f64::max);
            (t, v)
        });
        out.push(CheckResult::from_violations("gauge_modulus", GAUGE_MODULUS_TOLERANCE, modulus));
        let energies = gauge.energies();
        let e0 = energies[0];
        out.push(
            CheckResult::from_violations(
                "e2_drift",
                ENERGY_TOLERANCE,
                gauge.times.iter().zip(energies).map(|(&t, &e)| (t, relative(e, e0, ENERGY_TOLERANCE))),
            )
            .with_note(format!(
                "max gauge periodicity mismatch {:.3e}",
                gauge.max_periodicity_mismatch()
            )),
        );
    } else {
        let note = if is_gauge_regime(params) {
            "field states unavailable"
        } else {
            "gauge transform only defined for p = 3, lambda = -i"
        };
        out.push(CheckResult::not_applicable("gauge_modulus", GAUGE_MODULUS_TOLERANCE, note));
        out.push(CheckResult::not_applicable("e2_drift", ENERGY_TOLERANCE, note));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
    #[serde(default)]
    pub diagnostics: BTreeMap<String, f64>,
}

impl VerifyReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Runs every applicable check on a trajectory (and its report, if any).
pub fn verify_run(traj: &Trajectory, report: Option<&BlowupReport>, params: &ProblemParams) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    let mut diagnostics = BTreeMap::new();

    checks.push(match check_growth_identity(traj, params, GROWTH_TOLERANCE) {
        Ok(c) => c,
        Err(DnlsError::TooFewSamples { needed, have }) => CheckResult::not_applicable(
            "growth_identity",
            GROWTH_TOLERANCE,
            format!("needs {needed} samples, trajectory has {have}"),
        ),
        Err(e) => return Err(e),
    });
    checks.push(check_holder_chain(traj, params));
    checks.push(check_ode_comparison(traj, params, ODE_TOLERANCE));
    if let Some(report) = report {
        checks.push(check_lifespan(report));
        if let Some(t) = report.first_under_resolved {
            diagnostics.insert("first_under_resolved_time".to_string(), t);
        }
    }
    checks.extend(check_conservation_suite(traj, params)?);

    if is_gauge_regime(params) && traj.has_states() {
        let gauge = gauge_transform_trajectory(traj, params)?;
        diagnostics.insert("gauge_periodicity_mismatch".to_string(), gauge.max_periodicity_mismatch());
    }

    let all_passed = checks.iter().all(|c| !c.applicable || c.passed);
    Ok(VerifyReport {
        checks,
        all_passed,
        diagnostics,
    })
}
