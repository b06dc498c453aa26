//! Scalar functionals driving the blowup argument: the pairing integral
//! `I(u) = ∫_0^{2π} u(x) ∫_0^x ū(y) dy dx`, the blowup functional
//! `M = Im(α I)`, the sign conditions on the data, the lifespan bound and
//! the comparison-ODE lower bound, plus total density and the torus energy.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DnlsError, Result};
use crate::field::Field;

const TWO_PI: f64 = 2.0 * PI;

/// Exponent `p`, coupling `λ` and multiplier `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub p: f64,
    pub lambda: Complex64,
    pub alpha: Complex64,
}

impl ProblemParams {
    pub fn new(p: f64, lambda: Complex64, alpha: Complex64) -> Result<Self> {
        let params = Self { p, lambda, alpha };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(DnlsError::InvalidParameter(format!(
                "exponent p must be a finite real > 1, got {}",
                self.p
            )));
        }
        if self.lambda == Complex64::new(0.0, 0.0) || !self.lambda.is_finite() {
            return Err(DnlsError::InvalidParameter(
                "lambda must be nonzero".to_string(),
            ));
        }
        if !self.alpha.is_finite() {
            return Err(DnlsError::InvalidParameter("alpha must be finite".to_string()));
        }
        Ok(())
    }

    /// `Re α · Re λ > 0`, the first half of the multiplier condition.
    pub fn is_blowup_mode(&self) -> bool {
        self.alpha.re * self.lambda.re > 0.0
    }
}

/// Spectral closed form `I(u) = 2πi Σ_{k≠0} |û_k|²/k`, exactly imaginary.
pub fn pairing_integral(u: &Field) -> Result<Complex64> {
    u.ensure_zero_mean()?;
    let grid = u.grid();
    let sum: f64 = u
        .coefficients()
        .iter()
        .enumerate()
        .filter_map(|(i, c)| match grid.wavenumber(i) {
            0 => None,
            k => Some(c.norm_sqr() / k as f64),
        })
        .sum();
    Ok(Complex64::new(0.0, TWO_PI * sum))
}

/// `M = Im(α I(u))`.
pub fn blowup_functional(u: &Field, alpha: Complex64) -> Result<f64> {
    Ok((alpha * pairing_integral(u)?).im)
}

/// `Re λ · Im I(u0) > 0`, strict.
pub fn check_condition_i(u0: &Field, lambda: Complex64) -> Result<bool> {
    Ok(lambda.re * pairing_integral(u0)?.im > 0.0)
}

/// Returns `α = sign(Re λ)` when the data condition holds. Since `I` is
/// purely imaginary, a valid complex `α` exists exactly when it does.
pub fn choose_alpha(u0: &Field, lambda: Complex64) -> Result<Option<Complex64>> {
    if check_condition_i(u0, lambda)? {
        Ok(Some(Complex64::new(lambda.re.signum(), 0.0)))
    } else {
        Ok(None)
    }
}

/// Both strict inequalities of the multiplier condition for a given `α`.
pub fn satisfies_alpha_condition(u0: &Field, lambda: Complex64, alpha: Complex64) -> Result<bool> {
    Ok(alpha.re * lambda.re > 0.0 && blowup_functional(u0, alpha)? > 0.0)
}

/// `(2π)^p / ((p-1)|Re λ|) · |I(u0)|^{-(p-1)/2}`.
pub fn lifespan_bound(u0: &Field, p: f64, lambda: Complex64) -> Result<f64> {
    let pairing = pairing_integral(u0)?;
    lifespan_bound_from_pairing(pairing.norm(), p, lambda)
}

pub fn lifespan_bound_from_pairing(pairing_abs: f64, p: f64, lambda: Complex64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(DnlsError::InvalidParameter(format!("p must exceed 1, got {p}")));
    }
    if lambda.re == 0.0 {
        return Err(DnlsError::BoundUndefined);
    }
    if pairing_abs == 0.0 {
        return Err(DnlsError::BoundInfinite);
    }
    Ok(TWO_PI.powf(p) / ((p - 1.0) * lambda.re.abs()) * pairing_abs.powf(-(p - 1.0) / 2.0))
}

/// Lifespan bound for a specific multiplier `α` before the infimum is taken:
/// `(2π)^p |α|^{(p+1)/2} / ((p-1) Re α Re λ) · M(0)^{-(p-1)/2}`.
pub fn lifespan_bound_for_alpha(m0: f64, p: f64, lambda: Complex64, alpha: Complex64) -> f64 {
    TWO_PI.powf(p) * alpha.norm().powf((p + 1.0) / 2.0)
        / ((p - 1.0) * alpha.re * lambda.re)
        * m0.powf(-(p - 1.0) / 2.0)
}

/// `∫_T u dx = 2π û_0`.
pub fn total_density(u: &Field) -> Complex64 {
    u.coefficient(0) * TWO_PI
}

/// `E₂(w) = ∫ |∂_x w|² + ½ Im(|w|² w̄ ∂_x w) dx`, with `∂_x w` taken spectrally.
pub fn energy_e2(w: &Field) -> f64 {
    let dw = w.derivative();
    let sum: f64 = w
        .samples()
        .iter()
        .zip(dw.samples())
        .map(|(w, dw)| dw.norm_sqr() + 0.5 * (w.norm_sqr() * w.conj() * dw).im)
        .sum();
    sum * w.grid().spacing()
}

/// `(2π)^{2p/(p+1)} |α| ‖u‖²_{L^{p+1}}`, the outer majorant of `|M|`.
pub fn holder_majorant(u: &Field, alpha: Complex64, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(DnlsError::InvalidParameter(format!("p must exceed 1, got {p}")));
    }
    let lp1 = u.norm(p + 1.0)?;
    Ok(holder_majorant_from_norm(lp1, alpha, p))
}

pub fn holder_majorant_from_norm(lp1: f64, alpha: Complex64, p: f64) -> f64 {
    TWO_PI.powf(2.0 * p / (p + 1.0)) * alpha.norm() * lp1 * lp1
}

/// Value of the comparison-ODE lower bound on `M(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OdeBound {
    Finite(f64),
    /// The comparison solution has already escaped to infinity.
    BlownUp,
}

impl OdeBound {
    pub fn value(self) -> Option<f64> {
        match self {
            OdeBound::Finite(v) => Some(v),
            OdeBound::BlownUp => None,
        }
    }
}

fn ode_rate(p: f64, lambda: Complex64, alpha: Complex64) -> f64 {
    (p - 1.0) * TWO_PI.powf(-p) * alpha.norm().powf(-(p + 1.0) / 2.0) * alpha.re * lambda.re
}

fn check_ode_preconditions(m0: f64, p: f64, lambda: Complex64, alpha: Complex64) -> Result<()> {
    if !(m0 > 0.0) {
        return Err(DnlsError::InvalidParameter(format!("M(0) must be positive, got {m0}")));
    }
    if !(p > 1.0) {
        return Err(DnlsError::InvalidParameter(format!("p must exceed 1, got {p}")));
    }
    if !(alpha.re * lambda.re > 0.0) {
        return Err(DnlsError::InvalidParameter(
            "comparison bound needs Re α · Re λ > 0".to_string(),
        ));
    }
    Ok(())
}

/// `(M0^{-(p-1)/2} - (p-1)(2π)^{-p}|α|^{-(p+1)/2} Re α Re λ t)^{-2/(p-1)}`.
pub fn ode_lower_bound(m0: f64, t: f64, p: f64, lambda: Complex64, alpha: Complex64) -> Result<OdeBound> {
    check_ode_preconditions(m0, p, lambda, alpha)?;
    let bracket = m0.powf(-(p - 1.0) / 2.0) - ode_rate(p, lambda, alpha) * t;
    if bracket <= 0.0 {
        Ok(OdeBound::BlownUp)
    } else {
        Ok(OdeBound::Finite(bracket.powf(-2.0 / (p - 1.0))))
    }
}

/// Time at which the comparison bound becomes singular.
pub fn ode_singular_time(m0: f64, p: f64, lambda: Complex64, alpha: Complex64) -> Result<f64> {
    check_ode_preconditions(m0, p, lambda, alpha)?;
    Ok(m0.powf(-(p - 1.0) / 2.0) / ode_rate(p, lambda, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::TorusGrid;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mode(grid: &TorusGrid, k: i64, amp: f64) -> Field {
        Field::from_modes(grid, &[(k, c(amp, 0.0))]).unwrap()
    }

    #[test]
    fn pairing_integral_examples() {
        let g = TorusGrid::new(32).unwrap();
        let i1 = pairing_integral(&mode(&g, 1, 1.0)).unwrap();
        assert_relative_eq!(i1.im, TWO_PI, max_relative = 1e-15);
        assert_eq!(i1.re, 0.0);
        assert_eq!(pairing_integral(&Field::zeros(&g)).unwrap(), c(0.0, 0.0));
        let cos = Field::from_fn(&g, |x| c(x.cos(), 0.0));
        assert!(pairing_integral(&cos).unwrap().norm() < 1e-15);
        for k in [2, 3] {
            let ik = pairing_integral(&mode(&g, k, 1.0)).unwrap();
            assert_relative_eq!(ik.im, TWO_PI / k as f64, max_relative = 1e-15);
        }
        let with_mean = Field::from_fn(&g, |x| c(1.0 + x.cos(), 0.0));
        assert!(pairing_integral(&with_mean).is_err());
    }

    #[test]
    fn blowup_functional_examples() {
        let g = TorusGrid::new(16).unwrap();
        let e = mode(&g, 1, 1.0);
        assert_relative_eq!(blowup_functional(&e, c(1.0, 0.0)).unwrap(), TWO_PI);
        assert!(blowup_functional(&e, c(0.0, 1.0)).unwrap().abs() < 1e-15);
        assert_eq!(blowup_functional(&e, c(0.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn condition_and_alpha_examples() {
        let g = TorusGrid::new(16).unwrap();
        let e = mode(&g, 1, 1.0);
        let em = mode(&g, -1, 1.0);
        assert!(check_condition_i(&e, c(1.0, 0.0)).unwrap());
        assert!(!check_condition_i(&e, c(0.0, -1.0)).unwrap());
        assert!(!check_condition_i(&em, c(1.0, 0.0)).unwrap());

        let alpha = choose_alpha(&e, c(1.0, 0.0)).unwrap().unwrap();
        assert_eq!(alpha, c(1.0, 0.0));
        assert!(satisfies_alpha_condition(&e, c(1.0, 0.0), alpha).unwrap());
        assert_eq!(choose_alpha(&e, c(-2.0, 0.0)).unwrap(), None);
        assert_eq!(choose_alpha(&Field::zeros(&g), c(1.0, 0.0)).unwrap(), None);
        // negative Re λ with the opposite orientation works with α = -1
        assert_eq!(choose_alpha(&em, c(-2.0, 0.0)).unwrap(), Some(c(-1.0, 0.0)));
    }

    #[test]
    fn lifespan_bound_examples() {
        let g = TorusGrid::new(16).unwrap();
        let t0 = lifespan_bound(&mode(&g, 1, 1.0), 3.0, c(1.0, 0.0)).unwrap();
        assert_relative_eq!(t0, TWO_PI * TWO_PI / 2.0, max_relative = 1e-14);
        assert!((t0 - 19.7392).abs() < 1e-4);
        let a = 3.0;
        let ta = lifespan_bound(&mode(&g, 1, a), 3.0, c(1.0, 0.0)).unwrap();
        assert_relative_eq!(ta, TWO_PI * TWO_PI / (2.0 * a * a), max_relative = 1e-14);
        assert!(matches!(
            lifespan_bound(&mode(&g, 1, 1.0), 3.0, c(0.0, 1.0)),
            Err(DnlsError::BoundUndefined)
        ));
        assert!(matches!(
            lifespan_bound(&Field::zeros(&g), 3.0, c(1.0, 0.0)),
            Err(DnlsError::BoundInfinite)
        ));
    }

    #[test]
    fn total_density_examples() {
        let g = TorusGrid::new(16).unwrap();
        assert_relative_eq!(total_density(&Field::from_fn(&g, |_| c(1.0, 0.0))).re, TWO_PI);
        assert!(total_density(&mode(&g, 1, 1.0)).norm() < 1e-15);
        let f = Field::from_fn(&g, |x| c(3.0, 0.0) + Complex64::from_polar(1.0, x));
        assert_relative_eq!(total_density(&f).re, 6.0 * PI, max_relative = 1e-14);
    }

    #[test]
    fn energy_examples() {
        let g = TorusGrid::new(32).unwrap();
        assert_relative_eq!(energy_e2(&mode(&g, 1, 1.0)), 3.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(energy_e2(&mode(&g, -1, 1.0)), PI, max_relative = 1e-14);
        assert!(energy_e2(&Field::from_fn(&g, |_| c(0.5, 2.0))).abs() < 1e-14);
    }

    #[test]
    fn holder_examples() {
        let g = TorusGrid::new(32).unwrap();
        let e = mode(&g, 1, 1.0);
        let maj = holder_majorant(&e, c(1.0, 0.0), 3.0).unwrap();
        assert_relative_eq!(maj, TWO_PI * TWO_PI, max_relative = 1e-14);
        assert!(maj >= blowup_functional(&e, c(1.0, 0.0)).unwrap());
        assert_eq!(holder_majorant(&Field::zeros(&g), c(1.0, 0.0), 3.0).unwrap(), 0.0);
    }

    #[test]
    fn ode_bound_examples() {
        let one = c(1.0, 0.0);
        let m0 = TWO_PI;
        assert_eq!(ode_lower_bound(m0, 0.0, 3.0, one, one).unwrap(), OdeBound::Finite(m0));
        let t_star = ode_singular_time(m0, 3.0, one, one).unwrap();
        assert_relative_eq!(t_star, TWO_PI * TWO_PI / 2.0, max_relative = 1e-14);
        let g = TorusGrid::new(16).unwrap();
        let t0 = lifespan_bound(&mode(&g, 1, 1.0), 3.0, one).unwrap();
        assert_relative_eq!(t_star, t0, max_relative = 1e-14);

        // analytically the value at 0.999999 t* is exactly 1e6 M0
        let near = ode_lower_bound(m0, 0.999999 * t_star, 3.0, one, one).unwrap().value().unwrap();
        assert_relative_eq!(near / m0, 1e6, max_relative = 1e-8);
        assert_eq!(ode_lower_bound(m0, t_star * 1.01, 3.0, one, one).unwrap(), OdeBound::BlownUp);
        assert!(ode_lower_bound(0.0, 1.0, 3.0, one, one).is_err());
        assert!(ode_lower_bound(-1.0, 1.0, 3.0, one, one).is_err());
        assert!(ode_lower_bound(1.0, 1.0, 3.0, c(0.0, -1.0), one).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ProblemParams::new(3.0, c(1.0, 0.0), c(1.0, 0.0)).is_ok());
        assert!(ProblemParams::new(1.0, c(1.0, 0.0), c(1.0, 0.0)).is_err());
        assert!(ProblemParams::new(3.0, c(0.0, 0.0), c(1.0, 0.0)).is_err());
        let p = ProblemParams::new(3.0, c(-1.0, 2.0), c(-1.0, 0.0)).unwrap();
        assert!(p.is_blowup_mode());
    }
}
