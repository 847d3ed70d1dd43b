//! JSON model specification.
//!
//! ```json
//! {
//!   "family": "symmetric-stable",
//!   "alpha": 1.0,
//!   "sigma_rule": { "type": "geometric", "a": 1.0, "p_or_r": 0.5 },
//!   "weight_rule": { "type": "stable-compensating" },
//!   "levels": [1.0, 2.0, 4.0]
//! }
//! ```
//!
//! `family` is one of `symmetric-stable`, `one-sided-stable` (needs
//! `intensity`), `regularly-varying` (needs `cutoff`) or `finite-activity`
//! (needs `rate_rule` and either `law` as `[[u, q], ...]` rows or
//! `law_file`). `gaussian_rule` is optional and defaults to zero.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::process::{ClosedFormFamily, DiagonalCylindricalLevy, FamilyKind};
use super::rules::{DecayRule, RuleSpec, WeightSequence};
use crate::error::{Error, Result};
use crate::levy1d::TabulatedLaw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilySpec {
    SymmetricStable,
    OneSidedStable,
    RegularlyVarying,
    FiniteActivity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    Power,
    Geometric,
    Constant,
    StableCompensating,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    #[serde(rename = "type")]
    pub kind: WeightKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_or_r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: FamilySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_rule: Option<RuleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaussian_rule: Option<RuleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_rule: Option<RuleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law_file: Option<String>,
    pub weight_rule: WeightSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub process: DiagonalCylindricalLevy,
    pub weights: WeightSequence,
    pub levels: Vec<f64>,
}

pub(crate) fn json_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    }
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(json_error)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model spec serializes")
    }

    /// Build the process. `law_file` is resolved against `base_dir` when relative;
    /// with `base_dir = None` file references are refused.
    pub fn build(&self, base_dir: Option<&Path>) -> Result<BuiltModel> {
        let bad = |m: &str| Error::InvalidModel(m.to_string());
        let gaussian = match &self.gaussian_rule {
            Some(r) => r.build()?,
            None => DecayRule::zero(),
        };
        if gaussian.as_monomial().is_some_and(|(a, _, _)| a < 0.0) {
            return Err(bad("gaussian_rule must be nonnegative"));
        }
        let (process, sigma, alpha) = match self.family {
            FamilySpec::FiniteActivity => {
                let rate = self.rate_rule.ok_or_else(|| bad("finite-activity needs rate_rule"))?.build()?;
                if rate.as_monomial().is_some_and(|(a, _, _)| a < 0.0) {
                    return Err(bad("rate_rule must be nonnegative"));
                }
                let law = match (&self.law, &self.law_file) {
                    (Some(rows), None) => TabulatedLaw::new(
                        rows.iter().map(|r| r[0]).collect(),
                        rows.iter().map(|r| r[1]).collect(),
                    )?,
                    (None, Some(file)) => {
                        let base = base_dir.ok_or_else(|| bad("law_file not allowed here"))?;
                        let path = base.join(file);
                        let text = std::fs::read_to_string(&path)
                            .map_err(|e| Error::InvalidModel(format!("{}: {e}", path.display())))?;
                        TabulatedLaw::parse(&text)?
                    }
                    _ => return Err(bad("finite-activity needs exactly one of law, law_file")),
                };
                (DiagonalCylindricalLevy::finite_activity(rate, law, gaussian), None, None)
            }
            fam => {
                let alpha = self.alpha.ok_or_else(|| bad("stable families need alpha"))?;
                let sigma = self.sigma_rule.ok_or_else(|| bad("stable families need sigma_rule"))?.build()?;
                let kind = match fam {
                    FamilySpec::SymmetricStable => FamilyKind::SymmetricStable,
                    FamilySpec::OneSidedStable => FamilyKind::OneSidedStable {
                        intensity: self.intensity.ok_or_else(|| bad("one-sided-stable needs intensity"))?,
                    },
                    _ => FamilyKind::RegularlyVarying {
                        cutoff: self.cutoff.ok_or_else(|| bad("regularly-varying needs cutoff"))?,
                    },
                };
                let family = ClosedFormFamily {
                    kind,
                    alpha,
                    sigma: sigma.clone(),
                };
                (DiagonalCylindricalLevy::from_family(family, gaussian)?, Some(sigma), Some(alpha))
            }
        };
        let w = &self.weight_rule;
        let need_a = || w.a.ok_or_else(|| bad("weight_rule needs a"));
        let weights = match w.kind {
            WeightKind::StableCompensating => {
                let (sigma, alpha) = sigma
                    .zip(alpha)
                    .ok_or_else(|| bad("stable-compensating weights need a stable family"))?;
                WeightSequence::stable_compensating(&sigma, alpha)?
            }
            WeightKind::Constant => WeightSequence::constant(need_a()?)?,
            WeightKind::Power => WeightSequence::new(DecayRule::power(need_a()?, w.p_or_r.unwrap_or(0.0))?)?,
            WeightKind::Geometric => {
                WeightSequence::new(DecayRule::geometric(need_a()?, w.p_or_r.unwrap_or(1.0))?)?
            }
        };
        if self.levels.iter().any(|&k| !(k > 0.0 && k.is_finite())) || self.levels.windows(2).any(|p| p[1] <= p[0]) {
            return Err(bad("levels must be positive and strictly ascending"));
        }
        Ok(BuiltModel {
            process,
            weights,
            levels: self.levels.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GEOMETRIC: &str = r#"{
        "family": "symmetric-stable", "alpha": 1.0,
        "sigma_rule": {"type": "geometric", "a": 1.0, "p_or_r": 0.5},
        "weight_rule": {"type": "stable-compensating"},
        "levels": [1, 2, 4]
    }"#;

    #[test]
    fn round_trip_and_build() {
        let spec = ModelSpec::from_json(GEOMETRIC).unwrap();
        assert_eq!(ModelSpec::from_json(&spec.to_json()).unwrap(), spec);
        let built = spec.build(None).unwrap();
        assert_eq!(built.weights.value(2), 0.25);
        assert_eq!(built.levels, vec![1.0, 2.0, 4.0]);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(ModelSpec::from_json(""), Err(Error::Parse { .. })));
        assert!(ModelSpec::from_json(r#"{"family": "gaussian", "weight_rule": {"type": "constant", "a": 1}}"#).is_err());
        let unknown = GEOMETRIC.replace("\"levels\"", "\"extra\": 1, \"levels\"");
        assert!(ModelSpec::from_json(&unknown).is_err());
        let no_alpha = ModelSpec::from_json(&GEOMETRIC.replace("\"alpha\": 1.0,", "")).unwrap();
        assert!(no_alpha.build(None).is_err());
        let descending = ModelSpec::from_json(&GEOMETRIC.replace("[1, 2, 4]", "[2, 1]")).unwrap();
        assert!(descending.build(None).is_err());
    }

    #[test]
    fn finite_activity_inline_law() {
        let text = r#"{
            "family": "finite-activity",
            "rate_rule": {"type": "power", "a": 2.0, "p_or_r": 2.0},
            "law": [[0, -1], [1, 1]],
            "weight_rule": {"type": "constant", "a": 1.0}
        }"#;
        let built = ModelSpec::from_json(text).unwrap().build(None).unwrap();
        let t = built.process.component(2).unwrap();
        assert!((t.measure.tail_mass(0.5).unwrap() - 0.25).abs() < 1e-15);
        let with_file = text.replace(r#""law": [[0, -1], [1, 1]]"#, r#""law_file": "x.txt""#);
        assert!(ModelSpec::from_json(&with_file).unwrap().build(None).is_err());
    }
}
