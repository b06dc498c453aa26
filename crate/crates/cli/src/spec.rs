//! Run specification files.
//!
//! ```json
//! {
//!   "initial_data": { "mode": { "k": 1, "amplitude": [1.0, 0.0] } },
//!   "params": { "p": 3.0, "lambda": [1.0, 0.0] },
//!   "n": 256,
//!   "solver": { "t_max": 25.0 },
//!   "outputs": "out"
//! }
//! ```
//!
//! Every field is optional; the defaults reproduce the single-mode blowup run.
//! `initial_data` may instead be `{"coefficients": [[k, re, im], ...]}` or
//! `{"random": {"seed": 7, "n_modes": 10, "decay": 1.5, "jitter": 0.5}}`.

use std::path::{Path, PathBuf};

use dnls_core::field::{random_zero_mean_jittered, Field, TorusGrid};
use dnls_core::functionals::{choose_alpha, ProblemParams};
use dnls_core::{Complex64, SolverConfig};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::CliError;

pub const SEED_ENV: &str = "DNLS_SEED";

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Mode(ModeSpec),
    Coefficients(Vec<(i64, f64, f64)>),
    Random(RandomSpec),
}

impl Default for InitialData {
    fn default() -> Self {
        Self::Mode(ModeSpec { k: 1, amplitude: Complex64::new(1.0, 0.0) })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawMode")]
pub struct ModeSpec {
    pub k: i64,
    pub amplitude: Complex64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMode {
    k: i64,
    amplitude: Complex64,
}

impl TryFrom<RawMode> for ModeSpec {
    type Error = String;

    fn try_from(raw: RawMode) -> Result<Self, String> {
        if raw.k == 0 {
            return Err("mode k must be nonzero (initial data has zero mean)".into());
        }
        if !(raw.amplitude.re.is_finite() && raw.amplitude.im.is_finite()) {
            return Err("mode amplitude must be finite".into());
        }
        Ok(Self { k: raw.k, amplitude: raw.amplitude })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub seed: u64,
    pub n_modes: usize,
    pub decay: f64,
    #[serde(default)]
    pub jitter: f64,
}

/// Equation parameters as written in a spec file. `alpha` is optional and
/// only affects the tracked functional, never the lifespan bound.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    #[serde(deserialize_with = "exponent")]
    pub p: f64,
    #[serde(deserialize_with = "nonzero_complex")]
    pub lambda: Complex64,
    #[serde(default, deserialize_with = "optional_finite_complex")]
    pub alpha: Option<Complex64>,
}

impl Default for ParamsSpec {
    fn default() -> Self {
        Self { p: 3.0, lambda: Complex64::new(1.0, 0.0), alpha: None }
    }
}

fn exponent<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    let p = f64::deserialize(d)?;
    if p.is_finite() && p > 1.0 {
        Ok(p)
    } else {
        Err(D::Error::custom(format!("p must be a finite real > 1, got {p}")))
    }
}

fn finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn nonzero_complex<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
    let z = Complex64::deserialize(d)?;
    if finite(z) && z.norm() > 0.0 {
        Ok(z)
    } else {
        Err(D::Error::custom(format!("lambda must be finite and nonzero, got {z}")))
    }
}

fn optional_finite_complex<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Complex64>, D::Error> {
    match Option::<Complex64>::deserialize(d)? {
        Some(z) if !finite(z) => Err(D::Error::custom(format!("alpha must be finite, got {z}"))),
        other => Ok(other),
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(try_from = "SolverConfig")]
pub struct CheckedSolver(pub SolverConfig);

impl TryFrom<SolverConfig> for CheckedSolver {
    type Error = String;

    fn try_from(config: SolverConfig) -> Result<Self, String> {
        config.validate().map_err(|e| e.to_string())?;
        Ok(Self(config))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSource {
    /// Picked from the initial data so that the blowup conditions hold.
    Chosen,
    /// Supplied in the spec file.
    User,
    /// No admissible α exists; `α = 1` is tracked.
    Fallback,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRunSpec {
    #[serde(default)]
    initial_data: InitialData,
    #[serde(default)]
    params: ParamsSpec,
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default)]
    solver: CheckedSolver,
    #[serde(default)]
    outputs: Option<PathBuf>,
}

fn default_n() -> usize {
    256
}

impl Default for RawRunSpec {
    fn default() -> Self {
        Self {
            initial_data: InitialData::default(),
            params: ParamsSpec::default(),
            n: default_n(),
            solver: CheckedSolver::default(),
            outputs: None,
        }
    }
}

/// A validated run: initial field, resolved parameters and solver settings.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub initial_data: InitialData,
    pub u0: Field,
    pub params: ProblemParams,
    pub alpha_source: AlphaSource,
    pub solver: SolverConfig,
    pub outputs: Option<PathBuf>,
}

impl RunSpec {
    /// The built-in single-mode run `u0 = e^{ix}`, `p = 3`, `λ = 1`, `n = 256`.
    pub fn preset(seed_override: Option<u64>) -> Result<Self, CliError> {
        Self::build(RawRunSpec::default(), seed_override, "<preset>")
    }

    pub fn from_json(text: &str, origin: &str, seed_override: Option<u64>) -> Result<Self, CliError> {
        let raw: RawRunSpec = serde_json::from_str(text).map_err(|e| CliError::InvalidSpec(anchored(origin, &e)))?;
        Self::build(raw, seed_override, origin)
    }

    pub fn load(path: Option<&Path>, seed_override: Option<u64>) -> Result<Self, CliError> {
        match path {
            None => Self::preset(seed_override),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                Self::from_json(&text, &path.display().to_string(), seed_override)
            }
        }
    }

    fn build(mut raw: RawRunSpec, seed_override: Option<u64>, origin: &str) -> Result<Self, CliError> {
        if let (Some(seed), InitialData::Random(random)) = (seed_override, &mut raw.initial_data) {
            random.seed = seed;
        }
        let invalid = |field: &str, e: dnls_core::DnlsError| CliError::InvalidSpec(format!("{origin}: {field}: {e}"));
        let grid = TorusGrid::new(raw.n).map_err(|e| invalid("n", e))?;
        let u0 = match &raw.initial_data {
            InitialData::Mode(mode) => Field::from_modes(&grid, &[(mode.k, mode.amplitude)]),
            InitialData::Coefficients(list) => {
                let modes: Vec<(i64, Complex64)> = list.iter().map(|&(k, re, im)| (k, Complex64::new(re, im))).collect();
                Field::from_modes(&grid, &modes)
            }
            InitialData::Random(r) => random_zero_mean_jittered(&grid, r.seed, r.n_modes, r.decay, r.jitter),
        }
        .and_then(|u| u.ensure_zero_mean().map(|_| u))
        .map_err(|e| invalid("initial_data", e))?;

        let spec = raw.params;
        let (alpha, alpha_source) = match spec.alpha {
            Some(alpha) => (alpha, AlphaSource::User),
            None => match choose_alpha(&u0, spec.lambda).map_err(|e| invalid("initial_data", e))? {
                Some(alpha) => (alpha, AlphaSource::Chosen),
                None => (Complex64::new(1.0, 0.0), AlphaSource::Fallback),
            },
        };
        let params = ProblemParams::new(spec.p, spec.lambda, alpha).map_err(|e| invalid("params", e))?;
        Ok(Self {
            initial_data: raw.initial_data,
            u0,
            params,
            alpha_source,
            solver: raw.solver.0,
            outputs: raw.outputs,
        })
    }

    /// The same run with initial data multiplied by `amplitude`.
    pub fn scaled(&self, amplitude: f64) -> Self {
        let mut scaled = self.clone();
        scaled.u0 = self.u0.scale(Complex64::new(amplitude, 0.0));
        scaled
    }

    pub fn seed(&self) -> Option<u64> {
        match &self.initial_data {
            InitialData::Random(r) => Some(r.seed),
            _ => None,
        }
    }
}

/// `origin:line:column: message` for a JSON error.
pub fn anchored(origin: &str, e: &serde_json::Error) -> String {
    let message = e.to_string();
    let suffix = format!(" at line {} column {}", e.line(), e.column());
    let message = message.strip_suffix(&suffix).unwrap_or(&message);
    format!("{origin}:{}:{}: {message}", e.line(), e.column())
}

pub fn seed_from_env() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(value) => value
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::InvalidSpec(format!("{SEED_ENV}: expected an unsigned integer, got {value:?}"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::InvalidSpec(format!("{SEED_ENV}: {e}"))),
    }
}
