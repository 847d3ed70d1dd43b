use serde::{Deserialize, Serialize};

use crate::cylnoise::{json_error, ModelSpec, RuleSpec};
use crate::error::{Error, Result};
use crate::galerkin::{MonotonicityForm, Preset};
use crate::stochint::SamplerConfig;

/// One run: the seed, a noise model and a parameter block per command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Required, from here or `--seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    /// Noise model; `solve` and `converge` default to zero noise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dichotomy: Option<DichotomyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converge: Option<ConvergeConfig>,
}

fn default_terms() -> usize {
    10_000
}

fn default_samples() -> usize {
    1000
}

fn one() -> f64 {
    1.0
}

fn one_path() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default = "default_terms")]
    pub n_terms: usize,
    /// Levels for A6; defaults to the model levels, then to `1, 2, 4, 8, 16`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_list: Option<Vec<f64>>,
    /// The square-summable sequence the series conditions are tested against;
    /// defaults to `1 / j`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_alpha: Option<RuleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<CoefficientCheckConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientCheckConfig {
    pub preset: Preset,
    pub n: usize,
    /// Truncation level whose `Q_k` enters the checks.
    #[serde(default = "one")]
    pub level: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default)]
    pub monotonicity_form: MonotonicityForm,
    #[serde(default)]
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DichotomyConfig {
    pub n: usize,
    pub k: f64,
    pub n_paths: usize,
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_c_terms: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_ceiling: Option<f64>,
    /// KS significance level.
    #[serde(default = "default_significance")]
    pub significance: f64,
}

fn default_significance() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub preset: Preset,
    pub n: usize,
    pub dt: f64,
    pub horizon: f64,
    /// Defaults to `e_1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Truncation ladder; defaults to the model levels, then to `[1]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    /// Patch across the ladder instead of solving at the first level.
    #[serde(default)]
    pub patched: bool,
    #[serde(default = "one_path")]
    pub n_paths: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerConfig>,
    /// Skip the A6 certification of the levels.
    #[serde(default)]
    pub force: bool,
    /// Run the energy identity with this `lambda` (needs `n_paths >= 2`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    pub preset: Preset,
    pub ns: Vec<usize>,
    pub dts: Vec<f64>,
    pub horizon: f64,
    #[serde(default = "one_path")]
    pub n_paths: usize,
    /// Leading coordinates of the initial state, zero-padded; defaults to `e_1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerConfig>,
    #[serde(default)]
    pub force: bool,
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {x}")))
    }
}

fn at_least(name: &str, x: usize, min: usize) -> Result<()> {
    if x >= min {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be at least {min}, got {x}")))
    }
}

fn steps(dt: f64, horizon: f64) -> Result<usize> {
    let m = (horizon / dt).round();
    if !(m >= 1.0 && m <= 1e8) || ((m * dt - horizon).abs() > 1e-9 * horizon) {
        return Err(Error::Domain(format!("horizon {horizon} is not a multiple of dt {dt}")));
    }
    Ok(m as usize)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(json_error)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

impl CheckConfig {
    pub fn validate(&self) -> Result<()> {
        at_least("check.n_terms", self.n_terms, 10)?;
        if let Some(c) = &self.coefficients {
            at_least("check.coefficients.n", c.n, 1)?;
            positive("check.coefficients.level", c.level)?;
            positive("check.coefficients.radius", c.radius)?;
            at_least("check.coefficients.samples", c.samples, 1)?;
        }
        Ok(())
    }
}

impl DichotomyConfig {
    pub fn validate(&self) -> Result<()> {
        at_least("dichotomy.n", self.n, 1)?;
        positive("dichotomy.k", self.k)?;
        at_least("dichotomy.n_paths", self.n_paths, 100)?;
        positive("dichotomy.horizon", self.horizon)?;
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(Error::Domain("dichotomy.significance must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

impl SolveConfig {
    /// Number of time steps.
    pub fn validate(&self) -> Result<usize> {
        at_least("solve.n", self.n, 1)?;
        positive("solve.dt", self.dt)?;
        positive("solve.horizon", self.horizon)?;
        at_least("solve.n_paths", self.n_paths, 1)?;
        if let Some(x0) = &self.x0 {
            if x0.len() != self.n || x0.iter().any(|x| !x.is_finite()) {
                return Err(Error::Domain(format!("solve.x0 must hold {} finite values", self.n)));
            }
        }
        if let Some(l) = self.energy_lambda {
            if !(l >= 0.0 && l.is_finite()) || self.n_paths < 2 {
                return Err(Error::Domain("solve.energy_lambda needs lambda >= 0 and n_paths >= 2".into()));
            }
        }
        steps(self.dt, self.horizon)
    }
}

impl ConvergeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ns.is_empty() || self.dts.is_empty() {
            return Err(Error::Domain("converge.ns and converge.dts must be nonempty".into()));
        }
        for &n in &self.ns {
            at_least("converge.ns entry", n, 1)?;
        }
        positive("converge.horizon", self.horizon)?;
        for &dt in &self.dts {
            positive("converge.dts entry", dt)?;
            steps(dt, self.horizon)?;
        }
        at_least("converge.n_paths", self.n_paths, 1)?;
        if let Some(k) = self.level {
            positive("converge.level", k)?;
        }
        Ok(())
    }
}

pub(crate) fn step_count(dt: f64, horizon: f64) -> Result<usize> {
    steps(dt, horizon)
}
