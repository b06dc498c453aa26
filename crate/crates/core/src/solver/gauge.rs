//! Gauge transform of a `p = 3, λ = -i` trajectory:
//!
//! `w = u · exp((i/2) ∫_0^x |u|² dy - (i/2) ∫_0^t [Im(ū ∂_x u)(t',0) + 4|u(t',0)|⁴] dt')`.
//!
//! The spatial phase is evaluated on the branch `[0, 2π)`. Its wrap-around
//! mismatch `|exp((i/2)‖u‖²_{L²}) - 1|` is reported per sample.
//!
//! `E₂` is evaluated on the same branch, using the classical derivative
//! `∂_x w = (∂_x u + (i/2)|u|² u)·e^{iθ}` on the open interval. This keeps the
//! integrand periodic, so the jump of `w` at `x = 0` does not enter.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{DnlsError, Result};
use crate::field::{resize_spectrum, Field, TorusGrid};
use crate::functionals::ProblemParams;

use super::Trajectory;

#[derive(Debug, Clone)]
pub struct GaugeTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Field>,
    pub periodicity_mismatch: Vec<f64>,
    energies: Vec<f64>,
}

impl GaugeTrajectory {
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn max_periodicity_mismatch(&self) -> f64 {
        self.periodicity_mismatch.iter().copied().fold(0.0, f64::max)
    }
}

/// `(∫_0^{x_j} |u|² dy)_j` and `‖u‖²_{L²}`, computed exactly through a
/// doubled grid that holds every mode of `|u|²`.
fn density_primitive(u: &Field, fine: &TorusGrid) -> Result<(Vec<f64>, f64)> {
    let n = u.grid().n();
    let padded = Field::from_coefficients(fine, resize_spectrum(u.coefficients(), fine.n()))?;
    let density: Vec<Complex64> = padded.samples().iter().map(|v| Complex64::new(v.norm_sqr(), 0.0)).collect();
    let mut spectrum = fine.forward(&density);
    let mean = spectrum[0].re;
    spectrum[0] = Complex64::new(0.0, 0.0);
    let oscillating = Field::from_coefficients(fine, spectrum)?.antiderivative_from_zero()?;
    let primitive = (0..n)
        .map(|j| oscillating.samples()[2 * j].re + mean * u.grid().point(j))
        .collect();
    Ok((primitive, 2.0 * PI * mean))
}

/// `E₂(w)` on the branch `[0, 2π)`, written in terms of `u`:
/// `∫ |u_x + (i/2)|u|²u|² + ½|u|²(Im(ū u_x) + ½|u|⁴) dx`.
/// The integrand has degree at most `3n`, so the rectangle rule on `4n` points is exact.
fn branch_energy(u: &Field, fine: &TorusGrid) -> Result<f64> {
    let v = u.resample(fine);
    let dv = u.derivative().resample(fine);
    let total: f64 = v
        .samples()
        .iter()
        .zip(dv.samples())
        .map(|(&v, &dv)| {
            let rho = v.norm_sqr();
            let wx = dv + Complex64::new(0.0, 0.5 * rho) * v;
            wx.norm_sqr() + 0.5 * rho * ((v.conj() * dv).im + 0.5 * rho * rho)
        })
        .sum();
    Ok(total * fine.spacing())
}

fn boundary_integrand(u: &Field) -> f64 {
    let u0 = u.samples()[0];
    let du0 = u.derivative().samples()[0];
    (u0.conj() * du0).im + 4.0 * u0.norm_sqr().powi(2)
}

pub fn gauge_transform_trajectory(traj: &Trajectory, params: &ProblemParams) -> Result<GaugeTrajectory> {
    if (params.p - 3.0).abs() > 1e-12 || (params.lambda - Complex64::new(0.0, -1.0)).norm() > 1e-12 {
        return Err(DnlsError::InvalidParameter(format!(
            "gauge transform needs p = 3 and lambda = -i, got p = {}, lambda = {}",
            params.p, params.lambda
        )));
    }
    if !traj.has_states() {
        return Err(DnlsError::MalformedTrajectory(
            "gauge transform needs the field states of the trajectory".to_string(),
        ));
    }
    let grid = traj.states[0].grid();
    let fine = TorusGrid::new(2 * grid.n())?;
    let finest = TorusGrid::new(4 * grid.n())?;

    let mut times = Vec::with_capacity(traj.len());
    let mut states = Vec::with_capacity(traj.len());
    let mut mismatch = Vec::with_capacity(traj.len());
    let mut energies = Vec::with_capacity(traj.len());
    let mut time_phase = 0.0;
    let mut previous: Option<(f64, f64)> = None;

    for (sample, u) in traj.samples.iter().zip(&traj.states) {
        let g = boundary_integrand(u);
        if let Some((t_prev, g_prev)) = previous {
            time_phase += 0.5 * (sample.t - t_prev) * (g + g_prev);
        }
        previous = Some((sample.t, g));

        let (primitive, mass) = density_primitive(u, &fine)?;
        let w: Vec<Complex64> = u
            .samples()
            .iter()
            .zip(&primitive)
            .map(|(v, s)| v * Complex64::from_polar(1.0, 0.5 * s - 0.5 * time_phase))
            .collect();
        times.push(sample.t);
        states.push(Field::from_samples(grid, w)?);
        mismatch.push((Complex64::from_polar(1.0, 0.5 * mass) - 1.0).norm());
        energies.push(branch_energy(u, &finest)?);
    }
    Ok(GaugeTrajectory {
        times,
        states,
        periodicity_mismatch: mismatch,
        energies,
    })
}
