use super::checks::{check_assumption_a6, drift_coordinate, DivergenceRule, VerdictStatus};
use super::process::DiagonalCylindricalLevy;
use super::rules::WeightSequence;
use crate::error::{Error, Result};

/// `l_j = p_j + m_j + r_j` at level `k`: drift, compensated jumps of size
/// `|x| <= k / c_j` plus the Gaussian part, and the remaining large jumps.
#[derive(Debug, Clone)]
pub struct TruncationDecomposition {
    level_k: f64,
    weights: WeightSequence,
    process: DiagonalCylindricalLevy,
    forced: bool,
}

/// Terms used when `decompose` verifies Assumption A6 itself.
pub const DECOMPOSE_CHECK_TERMS: usize = 10_000;

/// Decompose `L` at level `k`. Refuses unless A6 is certified for `(c, k)`
/// or `force` is set.
pub fn decompose(
    l: &DiagonalCylindricalLevy,
    c: &WeightSequence,
    k: f64,
    force: bool,
) -> Result<TruncationDecomposition> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Domain(format!("truncation level must be positive, got {k}")));
    }
    if !force {
        let report = check_assumption_a6(l, c, &[k], DECOMPOSE_CHECK_TERMS, DivergenceRule::default())?;
        if report.overall() != VerdictStatus::Converges {
            return Err(Error::AssumptionViolated(report.diagnostics().join("; ")));
        }
    }
    Ok(TruncationDecomposition {
        level_k: k,
        weights: c.clone(),
        process: l.clone(),
        forced: force,
    })
}

impl TruncationDecomposition {
    pub fn level_k(&self) -> f64 {
        self.level_k
    }

    pub fn weights(&self) -> &WeightSequence {
        &self.weights
    }

    pub fn process(&self) -> &DiagonalCylindricalLevy {
        &self.process
    }

    /// Whether A6 was skipped when this was built.
    pub fn forced(&self) -> bool {
        self.forced
    }

    /// Same process and weights at another level, re-checked unless forced.
    pub fn at_level(&self, k: f64) -> Result<Self> {
        decompose(&self.process, &self.weights, k, self.forced)
    }

    /// `k / c_j`
    pub fn residual_threshold(&self, j: usize) -> f64 {
        self.level_k / self.weights.value(j)
    }

    /// `p_j^{c,k}(1)`.
    ///
    /// For thresholds below 1 the shift is the signed integral
    /// `-int_{k/c_j<|x|<=1} x rho_j(dx)`, so that the three parts always add
    /// up to `l_j`.
    pub fn drift_p(&self, j: usize) -> Result<f64> {
        drift_coordinate(&self.process, &self.weights, self.level_k, j)
    }

    /// `s_j + int_{|x| <= k/c_j} x^2 rho_j(dx)`, the `j`-th diagonal entry of `Q_k`.
    pub fn martingale_var(&self, j: usize) -> Result<f64> {
        let t = self.process.component(j)?;
        Ok(t.gaussian_s + t.measure.truncated_second_moment(self.residual_threshold(j))?)
    }

    pub fn drift_vector(&self, n: usize) -> Result<Vec<f64>> {
        (1..=n).map(|j| self.drift_p(j)).collect()
    }

    pub fn q_diag(&self, n: usize) -> Result<Vec<f64>> {
        (1..=n).map(|j| self.martingale_var(j)).collect()
    }
}
