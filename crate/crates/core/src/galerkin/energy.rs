//! Ensemble diagnostics: the energy identity, the `V`-energy bound across
//! dimensions and the expected number of level switches.

use serde::Serialize;

use super::solver::{solve_projected, GalerkinSolution, SolveError};
use super::triple::{CoefficientPair, SpectralGelfandTriple};
use super::checks::hs_norm_sq;
use crate::error::{Error, Result};
use crate::rng::{mean_and_se, run_ensemble};
use crate::stochint::{PathSampler, SamplePath};

/// One path's terms of the discrete energy identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyTerms {
    /// `e^{-lambda T}||X_T||^2 - ||X_0||^2 - sum_i [w_{i+1} h (2<X_i, Phi_i> + ||G(X_i) Q^{1/2}||^2) + (w_{i+1} - w_i)||X_i||^2]`
    pub residual: f64,
    /// `sum_i w_{i+1} h^2 ||Phi_i||^2`, the Euler bias of the residual.
    pub bias: f64,
    pub v_energy: f64,
    pub h_sup: f64,
}

/// Energy identity terms with `Phi = F(X) + G(X) p`, `w_i = e^{-lambda t_i}`,
/// `Q` and `p` of ladder position `level`.
pub fn energy_terms(
    triple: &SpectralGelfandTriple,
    coeffs: &CoefficientPair,
    path: &SamplePath,
    level: usize,
    sol: &GalerkinSolution,
    lambda: f64,
) -> EnergyTerms {
    let q = path.q_diag(level);
    let p = path.drift_p(level);
    let w = |t: f64| (-lambda * t).exp();
    let (mut sum, mut bias) = (0.0, 0.0);
    for i in 0..sol.times.len() - 1 {
        let (t0, t1) = (sol.times[i], sol.times[i + 1]);
        let h = t1 - t0;
        let x = &sol.states[i];
        let g = (coeffs.g)(x);
        let phi: Vec<f64> = (coeffs.f)(x)
            .iter()
            .enumerate()
            .map(|(r, f)| f + (0..p.len()).map(|j| g[(r, j)] * p[j]).sum::<f64>())
            .collect();
        let xphi = triple.pairing(&phi, x);
        sum += w(t1) * h * (2.0 * xphi + hs_norm_sq(&g, q)) + (w(t1) - w(t0)) * triple.h_norm_sq(x);
        bias += w(t1) * h * h * triple.h_norm_sq(&phi);
    }
    let tn = *sol.times.last().unwrap();
    EnergyTerms {
        residual: w(tn) * triple.h_norm_sq(sol.terminal()) - triple.h_norm_sq(&sol.states[0]) - sum,
        bias,
        v_energy: *sol.ledger.v_energy.last().unwrap(),
        h_sup: *sol.ledger.h_sup.last().unwrap(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub n_paths: usize,
    pub lambda: f64,
    /// Mean and standard error of the identity residual.
    pub residual_mean: f64,
    pub residual_se: f64,
    /// Declared `O(dt)` bias: mean of the Euler term.
    pub bias_budget: f64,
    /// Standardized residual after removing the declared bias.
    pub identity_residual_z: f64,
    /// Standardized residual without the bias correction.
    pub raw_z: f64,
    /// `E int_0^T ||X(s)||_V^2 ds`.
    pub v_energy: f64,
    pub v_energy_se: f64,
    /// `E sup_t ||X(t)||_H^2`.
    pub h_sup: f64,
}

fn z(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / se
    }
}

#[allow(clippy::too_many_arguments)]
pub fn energy_monitor(
    triple: &SpectralGelfandTriple,
    coeffs: &CoefficientPair,
    sampler: &PathSampler,
    level: usize,
    x0: &[f64],
    lambda: f64,
    n_paths: usize,
    master_seed: u64,
    workers: usize,
) -> std::result::Result<EnergyReport, SolveError> {
    if !(lambda >= 0.0) || n_paths < 2 {
        return Err(Error::Domain("energy monitor needs lambda >= 0 and at least two paths".into()).into());
    }
    let terms = run_ensemble(n_paths, workers, |i| -> std::result::Result<EnergyTerms, SolveError> {
        let path = sampler.sample(master_seed, i)?;
        let sol = solve_projected(triple, coeffs, &path, level, x0)?;
        Ok(energy_terms(triple, coeffs, &path, level, &sol, lambda))
    });
    let terms: Vec<EnergyTerms> = terms.into_iter().collect::<std::result::Result<_, _>>()?;
    let col = |f: fn(&EnergyTerms) -> f64| mean_and_se(&terms.iter().map(f).collect::<Vec<_>>());
    let (res, res_se) = col(|t| t.residual);
    let (bias, _) = col(|t| t.bias);
    let (corr, corr_se) = col(|t| t.residual - t.bias);
    let (v, v_se) = col(|t| t.v_energy);
    let (h, _) = col(|t| t.h_sup);
    Ok(EnergyReport {
        n_paths,
        lambda,
        residual_mean: res,
        residual_se: res_se,
        bias_budget: bias,
        identity_residual_z: z(corr, corr_se),
        raw_z: z(res, res_se),
        v_energy: v,
        v_energy_se: v_se,
        h_sup: h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EnergyTrend {
    /// Largest and smallest estimate within a factor 2.
    Bounded,
    Growing,
}

/// Trend of `E int ||X_n||_V^2` over increasing `n`.
pub fn v_energy_trend(estimates: &[f64]) -> EnergyTrend {
    let max = estimates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = estimates.iter().cloned().fold(f64::INFINITY, f64::min);
    if max <= 2.0 * min || max == 0.0 {
        EnergyTrend::Bounded
    } else {
        EnergyTrend::Growing
    }
}

/// Expected number of level switches on `[0, T]` for the patched solver.
///
/// `rates[i]` is the rate of jumps beyond level `i`, nonincreasing in `i`.
/// The level performs a Markov chain: from `i` it jumps to `l > i` at rate
/// `rates[l-1] - rates[l]` and leaves the ladder at rate `rates[last]`. The
/// expectation is `int_0^T sum_i P(level i at s)(rates[i] - rates[last]) ds`,
/// integrated with classical Runge–Kutta.
pub fn expected_patch_count(rates: &[f64], horizon: f64, steps: usize) -> Result<f64> {
    if rates.is_empty() || rates.windows(2).any(|w| w[1] > w[0]) || rates.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
        return Err(Error::Domain("rates must be finite, nonnegative and nonincreasing".into()));
    }
    if !(horizon > 0.0) || steps == 0 {
        return Err(Error::Domain("need a positive horizon and steps".into()));
    }
    let l = rates.len();
    let last = rates[l - 1];
    // state: occupation probabilities of the levels, then the accumulated count
    let deriv = |y: &[f64]| -> Vec<f64> {
        let mut d = vec![0.0; l + 1];
        for i in 0..l {
            d[i] -= rates[i] * y[i];
            for to in i + 1..l {
                d[to] += (rates[to - 1] - rates[to]) * y[i];
            }
            d[l] += (rates[i] - last) * y[i];
        }
        d
    };
    let h = horizon / steps as f64;
    let mut y = vec![0.0; l + 1];
    y[0] = 1.0;
    let axpy = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    for _ in 0..steps {
        let k1 = deriv(&y);
        let k2 = deriv(&axpy(&y, &k1, h / 2.0));
        let k3 = deriv(&axpy(&y, &k2, h / 2.0));
        let k4 = deriv(&axpy(&y, &k3, h));
        for i in 0..=l {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(y[l])
}
