//! Integrating-factor RK4 for `û_k' = -ik² û_k - i N̂_k`, where `N` is the
//! dealiased transform of `λ ∂_x(|u|^{p-1} u)`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{DnlsError, Result};
use crate::field::{resize_spectrum, Field, TorusGrid};

const MINUS_I: Complex64 = Complex64 { re: 0.0, im: -1.0 };

/// Right-hand side and time stepper for one `(p, λ)` pair on a fixed grid.
///
/// Unlike [`crate::functionals::ProblemParams`], `λ = 0` is accepted here so
/// the stepper can be exercised on the pure linear flow.
pub struct IfRk4 {
    grid: TorusGrid,
    p: f64,
    lambda: Complex64,
    padded_n: usize,
    pad_forward: Arc<dyn Fft<f64>>,
    pad_inverse: Arc<dyn Fft<f64>>,
    derivative: Vec<Complex64>,
    k_squared: Vec<f64>,
}

/// Smallest even size `>= factor * n`.
pub fn padded_size(n: usize, dealias_factor: f64) -> usize {
    let m = (dealias_factor * n as f64 - 1e-9).ceil() as usize;
    let m = m.max(n);
    m + m % 2
}

impl IfRk4 {
    pub fn new(grid: &TorusGrid, p: f64, lambda: Complex64, dealias_factor: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(DnlsError::InvalidParameter(format!("p must exceed 1, got {p}")));
        }
        if !(dealias_factor >= 1.0) || !dealias_factor.is_finite() {
            return Err(DnlsError::InvalidConfig(format!(
                "dealias_factor must be >= 1, got {dealias_factor}"
            )));
        }
        let n = grid.n();
        let padded_n = padded_size(n, dealias_factor);
        let mut planner = FftPlanner::new();
        let derivative = (0..n)
            .map(|i| {
                if i == n / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, grid.wavenumber(i) as f64)
                }
            })
            .collect();
        let k_squared = (0..n).map(|i| (grid.wavenumber(i) as f64).powi(2)).collect();
        Ok(Self {
            grid: grid.clone(),
            p,
            lambda,
            padded_n,
            pad_forward: planner.plan_fft_forward(padded_n),
            pad_inverse: planner.plan_fft_inverse(padded_n),
            derivative,
            k_squared,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn padded_n(&self) -> usize {
        self.padded_n
    }

    /// Coefficients of `λ ∂_x(|u|^{p-1} u)`, evaluating the power on the padded grid.
    pub fn nonlinearity(&self, coefficients: &[Complex64]) -> Vec<Complex64> {
        if self.lambda == Complex64::new(0.0, 0.0) {
            return vec![Complex64::new(0.0, 0.0); coefficients.len()];
        }
        let mut buf = resize_spectrum(coefficients, self.padded_n);
        self.pad_inverse.process(&mut buf);
        let exponent = self.p - 1.0;
        for v in buf.iter_mut() {
            let modulus = v.norm();
            *v *= if modulus == 0.0 { 0.0 } else { modulus.powf(exponent) };
        }
        self.pad_forward.process(&mut buf);
        let scale = 1.0 / self.padded_n as f64;
        let mut out = resize_spectrum(&buf, self.grid.n());
        for (c, d) in out.iter_mut().zip(&self.derivative) {
            *c *= d * self.lambda * scale;
        }
        out
    }

    fn rhs(&self, coefficients: &[Complex64]) -> Vec<Complex64> {
        let mut n = self.nonlinearity(coefficients);
        n.iter_mut().for_each(|c| *c *= MINUS_I);
        n
    }

    fn propagator(&self, dt: f64) -> Vec<Complex64> {
        self.k_squared
            .iter()
            .map(|k2| Complex64::from_polar(1.0, -k2 * dt))
            .collect()
    }

    /// One integrating-factor RK4 step of size `dt`.
    pub fn step(&self, u: &[Complex64], dt: f64) -> Vec<Complex64> {
        let full = self.propagator(dt);
        let half = self.propagator(0.5 * dt);
        let h2 = 0.5 * dt;

        let k1 = self.rhs(u);
        let u2: Vec<Complex64> = (0..u.len()).map(|i| half[i] * (u[i] + h2 * k1[i])).collect();
        let k2 = self.rhs(&u2);
        let u3: Vec<Complex64> = (0..u.len()).map(|i| half[i] * u[i] + h2 * k2[i]).collect();
        let k3 = self.rhs(&u3);
        let u4: Vec<Complex64> = (0..u.len())
            .map(|i| full[i] * u[i] + dt * half[i] * k3[i])
            .collect();
        let k4 = self.rhs(&u4);

        (0..u.len())
            .map(|i| {
                full[i] * u[i]
                    + dt / 6.0 * (full[i] * k1[i] + 2.0 * half[i] * (k2[i] + k3[i]) + k4[i])
            })
            .collect()
    }
}

/// `λ ∂_x(|u|^{p-1} u)` for a field, dealiased by zero-padding to `dealias_factor · n`.
pub fn nonlinearity(u: &Field, p: f64, lambda: Complex64, dealias_factor: f64) -> Result<Field> {
    let stepper = IfRk4::new(u.grid(), p, lambda, dealias_factor)?;
    Field::from_coefficients(u.grid(), stepper.nonlinearity(u.coefficients()))
}

/// A single IF-RK4 step; nonfinite output is reported as an error.
pub fn step_ifrk4(u: &Field, dt: f64, p: f64, lambda: Complex64, dealias_factor: f64) -> Result<Field> {
    if !(dt > 0.0) {
        return Err(DnlsError::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let stepper = IfRk4::new(u.grid(), p, lambda, dealias_factor)?;
    let next = stepper.step(u.coefficients(), dt);
    if next.iter().any(|c| !c.is_finite()) {
        return Err(DnlsError::InvalidParameter(
            "step produced nonfinite values".to_string(),
        ));
    }
    Field::from_coefficients(u.grid(), next)
}
