//! Adaptive time integration of `i u_t + u_xx = λ ∂_x(|u|^{p-1} u)` with
//! blowup detection.

mod gauge;
mod stepper;
mod trajectory;

pub use gauge::{gauge_transform_trajectory, GaugeTrajectory};
pub use stepper::{nonlinearity, padded_size, step_ifrk4, IfRk4};
pub use trajectory::{Sample, Trajectory, CSV_HEADER};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DnlsError, Result};
use crate::field::Field;
use crate::functionals::{check_condition_i, lifespan_bound, ProblemParams};

/// Relative tolerance on `|∫ u dx|` against `‖u‖_{L²}`.
pub const DENSITY_RTOL: f64 = 1e-10;
/// Samples whose top-10% modes carry more than this energy fraction are under-resolved.
pub const TAIL_FRACTION_LIMIT: f64 = 1e-4;
/// Relative slack allowed on the lifespan comparison.
pub const LIFESPAN_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub dt_init: f64,
    pub dt_min: f64,
    pub t_max: f64,
    pub step_tolerance: f64,
    pub blowup_sup_threshold: f64,
    pub sample_interval: f64,
    pub dealias_factor: f64,
    /// Coefficients below `filter_threshold · max_k |û_k|` are zeroed after
    /// every accepted step; `0` disables the filter.
    pub filter_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt_init: 1e-3,
            dt_min: 1e-12,
            t_max: 25.0,
            step_tolerance: 1e-8,
            blowup_sup_threshold: 1e8,
            sample_interval: 1e-3,
            dealias_factor: 2.0,
            filter_threshold: 1e-13,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt_init", self.dt_init),
            ("dt_min", self.dt_min),
            ("t_max", self.t_max),
            ("step_tolerance", self.step_tolerance),
            ("blowup_sup_threshold", self.blowup_sup_threshold),
            ("sample_interval", self.sample_interval),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(DnlsError::InvalidConfig(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.dealias_factor >= 1.0) {
            return Err(DnlsError::InvalidConfig(format!(
                "dealias_factor must be >= 1, got {}",
                self.dealias_factor
            )));
        }
        if !(self.filter_threshold >= 0.0 && self.filter_threshold < 1.0) {
            return Err(DnlsError::InvalidConfig(format!(
                "filter_threshold must lie in [0, 1), got {}",
                self.filter_threshold
            )));
        }
        if !(self.dt_min < self.dt_init && self.dt_init <= self.sample_interval && self.sample_interval <= self.t_max) {
            return Err(DnlsError::InvalidConfig(
                "need dt_min < dt_init <= sample_interval <= t_max".to_string(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    SupThreshold,
    DtFloor,
    NonfiniteValue,
    TMaxReached,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    BoundViolated,
    NoBlowupExpected,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub detected: bool,
    pub t_detected: Option<f64>,
    pub trigger: Trigger,
    pub bound_t0: Option<f64>,
    pub verdict: Verdict,
    /// First sample time whose tail-energy fraction exceeded the limit.
    pub first_under_resolved: Option<f64>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl BlowupReport {
    fn new(trigger: Trigger, t_last: f64, bound_t0: Option<f64>) -> Self {
        let detected = trigger != Trigger::TMaxReached;
        let t_detected = detected.then_some(t_last);
        let verdict = match (bound_t0, t_detected) {
            (None, _) => Verdict::NoBlowupExpected,
            (Some(_), None) => Verdict::Inconclusive,
            (Some(bound), Some(t)) if t <= bound * (1.0 + LIFESPAN_RTOL) => Verdict::Consistent,
            (Some(_), Some(_)) => Verdict::BoundViolated,
        };
        Self {
            detected,
            t_detected,
            trigger,
            bound_t0,
            verdict,
            first_under_resolved: None,
            steps_accepted: 0,
            steps_rejected: 0,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn max_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn relative_discrepancy(coarse: &[Complex64], fine: &[Complex64]) -> f64 {
    let diff = coarse
        .iter()
        .zip(fine)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let scale = max_abs(fine);
    if diff == 0.0 {
        0.0
    } else if scale > 0.0 {
        diff / scale
    } else {
        f64::INFINITY
    }
}

/// Zeroes modes below `threshold` relative to the largest one, so that
/// roundoff cannot seed the short-wave instability of the `Re λ != 0` flow.
fn filter_noise(coefficients: &mut [Complex64], threshold: f64) {
    if threshold == 0.0 {
        return;
    }
    let cutoff = threshold * max_abs(coefficients);
    for c in coefficients.iter_mut() {
        if c.norm() < cutoff {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

struct Recorder<'a> {
    params: &'a ProblemParams,
    trajectory: Trajectory,
    first_under_resolved: Option<f64>,
}

impl Recorder<'_> {
    fn record(&mut self, u: &Field, t: f64) -> Result<()> {
        if self.trajectory.samples.last().is_some_and(|s| s.t >= t) {
            return Ok(());
        }
        let sample = Sample::observe(u, t, self.params.alpha, self.params.p)?;
        let tolerance = (DENSITY_RTOL * sample.l2).max(1e-14);
        if sample.total_density_abs > tolerance {
            return Err(DnlsError::DensityDrift {
                t,
                density: sample.total_density_abs,
                tolerance,
            });
        }
        if self.first_under_resolved.is_none() && sample.tail_fraction.unwrap_or(0.0) > TAIL_FRACTION_LIMIT {
            self.first_under_resolved = Some(t);
        }
        self.trajectory.samples.push(sample);
        self.trajectory.states.push(u.clone());
        Ok(())
    }
}

/// Integrates from `u0` with step-doubling error control, recording
/// observables every `sample_interval`, until blowup is detected or `t_max`.
pub fn integrate(u0: &Field, params: &ProblemParams, config: &SolverConfig) -> Result<(Trajectory, BlowupReport)> {
    params.validate()?;
    config.validate()?;
    u0.ensure_zero_mean()?;

    let grid = u0.grid();
    let bound_t0 = if check_condition_i(u0, params.lambda)? {
        Some(lifespan_bound(u0, params.p, params.lambda)?)
    } else {
        None
    };
    let stepper = IfRk4::new(grid, params.p, params.lambda, config.dealias_factor)?;

    let mut recorder = Recorder {
        params,
        trajectory: Trajectory {
            sample_interval: config.sample_interval,
            samples: Vec::new(),
            states: Vec::new(),
        },
        first_under_resolved: None,
    };
    recorder.record(u0, 0.0)?;

    let mut u: Vec<Complex64> = u0.coefficients().to_vec();
    let mut t = 0.0;
    let mut dt = config.dt_init;
    let mut sample_index = 1usize;
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    let trigger = loop {
        let target = (sample_index as f64 * config.sample_interval).min(config.t_max);
        let h = dt.min(target - t);

        let coarse = stepper.step(&u, h);
        let mid = stepper.step(&u, 0.5 * h);
        let fine = stepper.step(&mid, 0.5 * h);

        if fine.iter().chain(&coarse).any(|c| !c.is_finite()) {
            rejected += 1;
            dt *= 0.5;
            if dt < config.dt_min {
                break Trigger::NonfiniteValue;
            }
            continue;
        }
        let err = relative_discrepancy(&coarse, &fine);
        if err > config.step_tolerance {
            rejected += 1;
            dt *= 0.5;
            if dt < config.dt_min {
                break Trigger::DtFloor;
            }
            continue;
        }

        let mut fine = fine;
        filter_noise(&mut fine, config.filter_threshold);
        let candidate = Field::from_coefficients(grid, fine)?;
        if candidate.sup_norm() > config.blowup_sup_threshold {
            break Trigger::SupThreshold;
        }
        accepted += 1;
        u = candidate.coefficients().to_vec();
        let landed = h >= target - t;
        t = if landed { target } else { t + h };
        if err < config.step_tolerance / 64.0 {
            dt = (2.0 * dt).min(config.sample_interval);
        }
        if landed {
            recorder.record(&candidate, t)?;
            sample_index += 1;
            if t >= config.t_max {
                break Trigger::TMaxReached;
            }
        }
    };

    // the last accepted state is the last stable one
    let last = Field::from_coefficients(grid, u)?;
    recorder.record(&last, t)?;

    let mut report = BlowupReport::new(trigger, t, bound_t0);
    report.first_under_resolved = recorder.first_under_resolved;
    report.steps_accepted = accepted;
    report.steps_rejected = rejected;
    Ok((recorder.trajectory, report))
}
