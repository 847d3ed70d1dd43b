use rand::Rng;
use rand_distr::StandardNormal;

use super::measure::{stable_exponent_constant, LevyMeasureModel};
use super::stable::sample_standard_stable;
use crate::error::{domain, Error, Result};

/// Characteristics `(b, s, rho)` of a real Levy process with respect to the
/// truncation function `1_{|x| <= 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyTriplet {
    pub drift_b: f64,
    pub gaussian_s: f64,
    pub measure: LevyMeasureModel,
}

impl LevyTriplet {
    pub fn new(drift_b: f64, gaussian_s: f64, measure: LevyMeasureModel) -> Result<Self> {
        if !drift_b.is_finite() {
            return Err(Error::InvalidModel("drift must be finite".into()));
        }
        if !(gaussian_s >= 0.0 && gaussian_s.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "Gaussian variance must be >= 0, got {gaussian_s}"
            )));
        }
        // int (x^2 ∧ 1) rho(dx) < inf
        let small = measure.annulus(0.0, 1.0).second;
        let large = measure.annulus(1.0, f64::INFINITY).mass;
        if !(small.is_finite() && large.is_finite()) {
            return Err(Error::InvalidModel("measure violates int (x^2 ∧ 1) d rho < inf".into()));
        }
        Ok(Self {
            drift_b,
            gaussian_s,
            measure,
        })
    }

    /// The family's canonical process (strictly stable, centered or pure jump,
    /// see [`LevyMeasureModel::canonical_drift`]) without Gaussian part.
    pub fn canonical(measure: LevyMeasureModel) -> Result<Self> {
        let b = measure.canonical_drift();
        Self::new(b, 0.0, measure)
    }

    pub fn zero() -> Self {
        Self {
            drift_b: 0.0,
            gaussian_s: 0.0,
            measure: LevyMeasureModel::zero(),
        }
    }

    /// Sample `l(t + dt) - l(t)`.
    ///
    /// Stable measures use the Chambers–Mallows–Stuck transform on the
    /// strictly stable part plus the residual drift; finite measures use the
    /// compound Poisson sum. The Gaussian part is exact.
    pub fn sample_increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> Result<f64> {
        if !(dt > 0.0) {
            return Err(domain(format!("dt must be positive, got {dt}")));
        }
        let gauss = if self.gaussian_s > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            (self.gaussian_s * dt).sqrt() * z
        } else {
            0.0
        };
        let m = &self.measure;
        if m.is_zero() {
            return Ok(self.drift_b * dt + gauss);
        }
        let jumps = match *m {
            LevyMeasureModel::SymmetricStable { alpha, sigma } => {
                let scale = sigma.abs() * (stable_exponent_constant(alpha) * dt).powf(1.0 / alpha);
                scale * sample_standard_stable(alpha, 0.0, rng) - m.canonical_drift() * dt
            }
            LevyMeasureModel::OneSidedStable {
                alpha,
                sigma,
                intensity,
            } => {
                let density = intensity / super::measure::one_sided_normalizer(alpha);
                let scale = sigma.abs()
                    * (density * stable_exponent_constant(alpha) * dt).powf(1.0 / alpha);
                scale * sample_standard_stable(alpha, sigma.signum(), rng) - m.canonical_drift() * dt
            }
            _ => {
                // compound Poisson: all jumps, minus the compensator of those in the unit ball
                let rate = m.annulus(0.0, f64::INFINITY).mass;
                let count = if rate > 0.0 {
                    rng.sample(rand_distr::Poisson::new(rate * dt).map_err(|e| domain(e.to_string()))?)
                        as u64
                } else {
                    0
                };
                let mut sum = 0.0;
                for _ in 0..count {
                    sum += m.sample_size_above(0.0, rng).unwrap_or(0.0);
                }
                sum - m.annulus(0.0, 1.0).first * dt
            }
        };
        Ok(self.drift_b * dt + jumps + gauss)
    }
}
