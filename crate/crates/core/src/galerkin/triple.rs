use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `V_n ⊆ H_n ⊆ V*_n` in the eigenbasis of a positive operator with
/// nondecreasing eigenvalues `mu_j >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGelfandTriple {
    mu: Vec<f64>,
}

impl SpectralGelfandTriple {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::Domain("empty spectrum".into()));
        }
        if mu.iter().any(|m| !(m.is_finite() && *m >= 1.0)) || mu.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Domain("eigenvalues must be finite, >= 1 and nondecreasing".into()));
        }
        Ok(Self { mu })
    }

    /// Rescales a positive nondecreasing spectrum so that `mu_1 >= 1`.
    pub fn normalized(mut mu: Vec<f64>) -> Result<Self> {
        let m1 = mu.first().copied().unwrap_or(0.0);
        if !(m1 > 0.0) {
            return Err(Error::Domain("eigenvalues must be positive".into()));
        }
        if m1 < 1.0 {
            mu.iter_mut().for_each(|m| *m /= m1);
        }
        Self::new(mu)
    }

    /// Dirichlet Laplacian on `(0, 1)`: `mu_j = (pi j)^2`.
    pub fn dirichlet_laplacian(n: usize) -> Result<Self> {
        Self::new((1..=n).map(|j| (PI * j as f64).powi(2)).collect())
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.mu
    }

    pub fn h_norm_sq(&self, v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum()
    }

    pub fn v_norm_sq(&self, v: &[f64]) -> f64 {
        v.iter().zip(&self.mu).map(|(x, m)| m * x * x).sum()
    }

    pub fn vstar_norm_sq(&self, w: &[f64]) -> f64 {
        w.iter().zip(&self.mu).map(|(x, m)| x * x / m).sum()
    }

    /// `<w, v>`, the pairing of `V*` with `V` in coordinates.
    pub fn pairing(&self, w: &[f64], v: &[f64]) -> f64 {
        w.iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

pub type DriftFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type DiffusionFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Constants of the coercivity, monotonicity and growth conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub alpha: f64,
    /// Coercivity `lambda`.
    pub lambda: f64,
    pub beta: f64,
    /// Monotonicity `lambda`.
    pub lambda_monotone: f64,
    /// Linear growth `c`; `None` when `F` grows faster.
    pub growth_c: Option<f64>,
}

pub type ConstantsFn = Arc<dyn Fn(&[f64]) -> Constants + Send + Sync>;

/// `(F, G)` with `F: V_n -> V*_n` and `G(v)` an `n_H x n_U` matrix.
#[derive(Clone)]
pub struct CoefficientPair {
    pub name: String,
    pub f: DriftFn,
    pub g: DiffusionFn,
    /// Analytic constants as a function of the noise covariance diagonal.
    pub constants: Option<ConstantsFn>,
}

impl std::fmt::Debug for CoefficientPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientPair").field("name", &self.name).finish_non_exhaustive()
    }
}

impl CoefficientPair {
    /// Registered constants for covariance `Q = diag(q)`.
    pub fn registered_constants(&self, q: &[f64]) -> Option<Constants> {
        self.constants.as_ref().map(|c| c(q))
    }
}

/// Registered problems. Every preset uses `A = diag(mu_j)` from the triple and
/// noise on the same `n` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Preset {
    /// `F = -A v`, `G = diag(g0 / j)`.
    HeatAdditive { g0: f64 },
    /// `F = -A v`, `G(v) = diag((gamma sin v_j + gamma0) / j)`.
    HeatMultiplicativeLipschitz { gamma: f64, gamma0: f64 },
    /// `F = -A v - v^3` coordinatewise, `G = diag(g0 / j)`.
    Cubic { g0: f64 },
    /// `F = v^3`, `G = 0`. Blows up in finite time.
    AntiCoercive,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::HeatAdditive { .. } => "heat-additive",
            Preset::HeatMultiplicativeLipschitz { .. } => "heat-multiplicative-lipschitz",
            Preset::Cubic { .. } => "cubic",
            Preset::AntiCoercive => "anti-coercive",
        }
    }

    pub fn build(&self, triple: &SpectralGelfandTriple) -> Result<CoefficientPair> {
        let mu = Arc::new(triple.eigenvalues().to_vec());
        let n = mu.len();
        let finite = |x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{} parameters must be finite", self.name())))
            }
        };
        // sum_j q_j / j^2 and max_j q_j / j^2
        let weights = |q: &[f64]| {
            let w: Vec<f64> = q.iter().enumerate().map(|(j, q)| q / ((j + 1) as f64).powi(2)).collect();
            (w.iter().sum::<f64>(), w.iter().cloned().fold(0.0, f64::max))
        };
        let heat = {
            let mu = mu.clone();
            move |v: &[f64]| -> Vec<f64> { v.iter().zip(mu.iter()).map(|(x, m)| -m * x).collect() }
        };
        let additive = move |g0: f64| -> DiffusionFn {
            let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |j, _| g0 / (j + 1) as f64));
            Arc::new(move |_| d.clone())
        };
        let pair = match *self {
            Preset::HeatAdditive { g0 } => {
                finite(g0)?;
                CoefficientPair {
                    name: self.name().into(),
                    f: Arc::new(heat),
                    g: additive(g0),
                    constants: Some(Arc::new(move |q| Constants {
                        alpha: 2.0,
                        lambda: 0.0,
                        beta: g0 * g0 * weights(q).0,
                        lambda_monotone: 0.0,
                        growth_c: Some(1.0),
                    })),
                }
            }
            Preset::HeatMultiplicativeLipschitz { gamma, gamma0 } => {
                finite(gamma)?;
                finite(gamma0)?;
                CoefficientPair {
                    name: self.name().into(),
                    f: Arc::new(heat),
                    g: Arc::new(move |v| {
                        DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |j, _| {
                            (gamma * v[j].sin() + gamma0) / (j + 1) as f64
                        }))
                    }),
                    // |sin x| <= |x| and (a + b)^2 <= 2a^2 + 2b^2
                    constants: Some(Arc::new(move |q| {
                        let (sum, max) = weights(q);
                        Constants {
                            alpha: 2.0,
                            lambda: 2.0 * gamma * gamma * max,
                            beta: 2.0 * gamma0 * gamma0 * sum,
                            lambda_monotone: gamma * gamma * max,
                            growth_c: Some(1.0),
                        }
                    })),
                }
            }
            Preset::Cubic { g0 } => {
                finite(g0)?;
                CoefficientPair {
                    name: self.name().into(),
                    f: Arc::new(move |v| heat(v).iter().zip(v).map(|(a, x)| a - x * x * x).collect()),
                    g: additive(g0),
                    constants: Some(Arc::new(move |q| Constants {
                        alpha: 2.0,
                        lambda: 0.0,
                        beta: g0 * g0 * weights(q).0,
                        lambda_monotone: 0.0,
                        growth_c: None,
                    })),
                }
            }
            Preset::AntiCoercive => CoefficientPair {
                name: self.name().into(),
                f: Arc::new(|v| v.iter().map(|x| x * x * x).collect()),
                g: Arc::new(move |_| DMatrix::zeros(n, n)),
                constants: None,
            },
        };
        Ok(pair)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_are_ordered() {
        let t = SpectralGelfandTriple::dirichlet_laplacian(5).unwrap();
        let v = [0.3, -1.0, 2.0, 0.0, 0.5];
        assert!(t.h_norm_sq(&v) <= t.v_norm_sq(&v));
        assert!(t.vstar_norm_sq(&v) <= t.h_norm_sq(&v));
        assert!(SpectralGelfandTriple::new(vec![0.5, 1.0]).is_err());
        assert_eq!(SpectralGelfandTriple::normalized(vec![0.5, 1.0]).unwrap().eigenvalues(), &[1.0, 2.0]);
    }

    #[test]
    fn preset_json_names() {
        let p: Preset = serde_json::from_str(r#"{"name": "heat-multiplicative-lipschitz", "gamma": 0.5, "gamma0": 1.0}"#).unwrap();
        assert_eq!(p.name(), "heat-multiplicative-lipschitz");
        assert_eq!(serde_json::to_string(&Preset::AntiCoercive).unwrap(), r#"{"name":"anti-coercive"}"#);
    }
}
