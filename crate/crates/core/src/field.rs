//! Collocation grids on the torus `[0, 2π)` and complex periodic fields.
//!
//! Fourier convention: `u(x) = Σ_k û_k e^{ikx}` with `û_k = (1/2π) ∫ u e^{-ikx} dx`.
//! Coefficient vectors are stored in FFT order: index `i` holds wavenumber
//! `i` for `i < n/2` and `i - n` otherwise, so index `n/2` is the Nyquist
//! mode `k = -n/2`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{DnlsError, Result};

const TWO_PI: f64 = 2.0 * PI;

/// Relative zero-mean tolerance, scaled by the largest coefficient modulus.
pub const ZERO_MEAN_RTOL: f64 = 1e-12;
/// Absolute floor for the zero-mean tolerance.
pub const ZERO_MEAN_FLOOR: f64 = 1e-300;

/// Uniform grid `x_j = 2πj/n` with wavenumbers `-n/2 ..= n/2 - 1`.
#[derive(Clone)]
pub struct TorusGrid {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid").field("n", &self.n).finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl TorusGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(DnlsError::InvalidGridSize(n));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        TWO_PI / self.n as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        TWO_PI * j as f64 / self.n as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Wavenumber stored at FFT-order index `i`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        wavenumber_at(i, self.n)
    }

    /// FFT-order index of wavenumber `k`, if `k` belongs to the grid's band.
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k < -half || k >= half {
            None
        } else if k >= 0 {
            Some(k as usize)
        } else {
            Some((self.n as i64 + k) as usize)
        }
    }

    /// Wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<i64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    /// Samples to normalized coefficients `û_k = (1/n) Σ_j u_j e^{-ikx_j}`.
    pub fn forward(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let mut buf = samples.to_vec();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    /// Coefficients to samples `u_j = Σ_k û_k e^{ikx_j}`.
    pub fn inverse(&self, coefficients: &[Complex64]) -> Vec<Complex64> {
        let mut buf = coefficients.to_vec();
        self.inverse.process(&mut buf);
        buf
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(DnlsError::SizeMismatch {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }
}

pub(crate) fn wavenumber_at(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Moves an FFT-ordered coefficient vector onto a band of size `m`,
/// zero-padding when growing and truncating to `-m/2 ..= m/2 - 1` when shrinking.
pub(crate) fn resize_spectrum(coefficients: &[Complex64], m: usize) -> Vec<Complex64> {
    let n = coefficients.len();
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    let half_m = (m / 2) as i64;
    for (i, c) in coefficients.iter().enumerate() {
        let k = wavenumber_at(i, n);
        if k >= -half_m && k < half_m {
            let j = if k >= 0 { k as usize } else { (m as i64 + k) as usize };
            out[j] = *c;
        }
    }
    out
}

/// Complex periodic function held as collocation samples together with
/// its Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: TorusGrid,
    samples: Vec<Complex64>,
    coefficients: Vec<Complex64>,
}

impl Field {
    pub fn from_samples(grid: &TorusGrid, samples: Vec<Complex64>) -> Result<Self> {
        grid.check_len(samples.len())?;
        let coefficients = grid.forward(&samples);
        Ok(Self {
            grid: grid.clone(),
            samples,
            coefficients,
        })
    }

    pub fn from_coefficients(grid: &TorusGrid, coefficients: Vec<Complex64>) -> Result<Self> {
        grid.check_len(coefficients.len())?;
        let samples = grid.inverse(&coefficients);
        Ok(Self {
            grid: grid.clone(),
            samples,
            coefficients,
        })
    }

    /// Builds a field from `(k, û_k)` pairs; modes outside the band are rejected.
    pub fn from_modes(grid: &TorusGrid, modes: &[(i64, Complex64)]) -> Result<Self> {
        let mut coefficients = vec![Complex64::new(0.0, 0.0); grid.n()];
        for &(k, c) in modes {
            let i = grid.index_of(k).ok_or_else(|| {
                DnlsError::InvalidParameter(format!(
                    "wavenumber {k} outside the band of a grid with n = {}",
                    grid.n()
                ))
            })?;
            coefficients[i] += c;
        }
        Self::from_coefficients(grid, coefficients)
    }

    pub fn from_fn(grid: &TorusGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let samples: Vec<Complex64> = (0..grid.n()).map(|j| f(grid.point(j))).collect();
        Self::from_samples(grid, samples).expect("sample count matches grid")
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self {
            grid: grid.clone(),
            samples: vec![Complex64::new(0.0, 0.0); grid.n()],
            coefficients: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Coefficient of wavenumber `k`; zero outside the band.
    pub fn coefficient(&self, k: i64) -> Complex64 {
        self.grid
            .index_of(k)
            .map(|i| self.coefficients[i])
            .unwrap_or_default()
    }

    pub fn max_coefficient(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn zero_mean_tolerance(&self) -> f64 {
        (ZERO_MEAN_RTOL * self.max_coefficient()).max(ZERO_MEAN_FLOOR)
    }

    pub fn is_zero_mean(&self) -> bool {
        self.coefficients[0].norm() <= self.zero_mean_tolerance()
    }

    pub fn ensure_zero_mean(&self) -> Result<()> {
        if self.is_zero_mean() {
            Ok(())
        } else {
            Err(DnlsError::NotZeroMean {
                mean_abs: self.coefficients[0].norm(),
                tolerance: self.zero_mean_tolerance(),
            })
        }
    }

    pub fn conj(&self) -> Self {
        let samples = self.samples.iter().map(|c| c.conj()).collect();
        Self::from_samples(&self.grid, samples).expect("same grid")
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|c| c * factor).collect(),
            coefficients: self.coefficients.iter().map(|c| c * factor).collect(),
        }
    }

    /// Spectral derivative: multiplies `û_k` by `ik`, zeroing the Nyquist mode.
    pub fn derivative(&self) -> Self {
        let n = self.grid.n();
        let coefficients = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i == n / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * Complex64::new(0.0, self.grid.wavenumber(i) as f64)
                }
            })
            .collect();
        Self::from_coefficients(&self.grid, coefficients).expect("same grid")
    }

    /// Periodic antiderivative vanishing at `x = 0`:
    /// `V(x) = Σ_{k≠0} û_k (e^{ikx} - 1)/(ik)`.
    pub fn antiderivative_from_zero(&self) -> Result<Self> {
        self.ensure_zero_mean()?;
        let mut coefficients: Vec<Complex64> = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, c)| match self.grid.wavenumber(i) {
                0 => Complex64::new(0.0, 0.0),
                k => c / Complex64::new(0.0, k as f64),
            })
            .collect();
        coefficients[0] = -coefficients.iter().skip(1).sum::<Complex64>();
        let mut samples = self.grid.inverse(&coefficients);
        samples[0] = Complex64::new(0.0, 0.0);
        Self::from_samples(&self.grid, samples)
    }

    /// Rectangle-rule `L^q` norm; `q = f64::INFINITY` gives the sup norm.
    pub fn norm(&self, q: f64) -> Result<f64> {
        if q.is_nan() || q < 1.0 {
            return Err(DnlsError::InvalidNormExponent(q));
        }
        if q.is_infinite() {
            return Ok(self.sup_norm());
        }
        Ok(quadrature_norm(&self.samples, q))
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Rectangle-rule integral `∫_0^{2π} u dx`.
    pub fn integrate(&self) -> Complex64 {
        self.samples.iter().sum::<Complex64>() * self.grid.spacing()
    }

    /// Spectral interpolation onto a grid with `m` points.
    pub fn resample(&self, grid: &TorusGrid) -> Self {
        let coefficients = resize_spectrum(&self.coefficients, grid.n());
        Self::from_coefficients(grid, coefficients).expect("resized to grid")
    }

    /// Fraction of spectral energy held by modes with `|k| > 0.9 n/2`.
    pub fn tail_energy_fraction(&self) -> f64 {
        let cutoff = 0.9 * (self.grid.n() / 2) as f64;
        let mut total = 0.0;
        let mut tail = 0.0;
        for (i, c) in self.coefficients.iter().enumerate() {
            let e = c.norm_sqr();
            total += e;
            if self.grid.wavenumber(i).unsigned_abs() as f64 > cutoff {
                tail += e;
            }
        }
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&FieldJson::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let parsed: FieldJson = serde_json::from_str(text)?;
        parsed.into_field()
    }
}

pub(crate) fn quadrature_norm(samples: &[Complex64], q: f64) -> f64 {
    let h = TWO_PI / samples.len() as f64;
    let sum: f64 = samples.iter().map(|c| c.norm().powf(q)).sum();
    (sum * h).powf(1.0 / q)
}

/// Wire form of a field: `{"n": .., "coefficients": [[k, re, im], ..]}`,
/// listing only nonzero modes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldJson {
    pub n: usize,
    pub coefficients: Vec<(i64, f64, f64)>,
}

impl From<&Field> for FieldJson {
    fn from(field: &Field) -> Self {
        let mut coefficients: Vec<(i64, f64, f64)> = field
            .coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
            .map(|(i, c)| (field.grid.wavenumber(i), c.re, c.im))
            .collect();
        coefficients.sort_by_key(|entry| entry.0);
        Self {
            n: field.grid.n(),
            coefficients,
        }
    }
}

impl FieldJson {
    pub fn into_field(self) -> Result<Field> {
        let grid = TorusGrid::new(self.n)?;
        let modes: Vec<(i64, Complex64)> = self
            .coefficients
            .into_iter()
            .map(|(k, re, im)| (k, Complex64::new(re, im)))
            .collect();
        Field::from_modes(&grid, &modes)
    }
}

/// Deterministic random zero-mean field: `û_0 = 0` and, for
/// `0 < |k| ≤ n_modes`, `û_k = |k|^{-decay} e^{iθ_k}` with independent uniform phases.
///
/// Equal magnitudes at `±k` make the pairing integral vanish identically;
/// use [`random_zero_mean_jittered`] for data with a nonzero pairing.
pub fn random_zero_mean(grid: &TorusGrid, seed: u64, n_modes: usize, decay: f64) -> Result<Field> {
    random_zero_mean_jittered(grid, seed, n_modes, decay, 0.0)
}

/// As [`random_zero_mean`], with each magnitude multiplied by an
/// independent factor uniform in `[1 - jitter, 1 + jitter]`.
pub fn random_zero_mean_jittered(
    grid: &TorusGrid,
    seed: u64,
    n_modes: usize,
    decay: f64,
    jitter: f64,
) -> Result<Field> {
    let half = grid.n() / 2;
    if n_modes >= half {
        return Err(DnlsError::TooManyModes { n_modes, half });
    }
    if !(decay > 0.0) {
        return Err(DnlsError::InvalidParameter(format!(
            "decay must be positive, got {decay}"
        )));
    }
    if !(0.0..1.0).contains(&jitter) {
        return Err(DnlsError::InvalidParameter(format!(
            "jitter must lie in [0, 1), got {jitter}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::with_capacity(2 * n_modes);
    for k in 1..=n_modes as i64 {
        let magnitude = (k as f64).powf(-decay);
        for signed in [k, -k] {
            let phase: f64 = rng.gen_range(0.0..TWO_PI);
            let factor: f64 = rng.gen_range(-1.0..1.0);
            modes.push((signed, Complex64::from_polar(magnitude * (1.0 + jitter * factor), phase)));
        }
    }
    Field::from_modes(grid, &modes)
}
