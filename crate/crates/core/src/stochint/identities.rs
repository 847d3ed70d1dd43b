//! Pathwise identities of the simple integral and Monte Carlo checks of its
//! second-moment structure.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use super::path::{Increments, Part, PathSampler};
use super::simple::{angle_bracket, integrate_increments, PathPrefix, SimpleProcess};
use crate::error::{Error, Result};
use crate::rng::{mean_and_se, run_ensemble};

fn prefix_at<'a>(inc: &'a Increments, m: usize) -> PathPrefix<'a> {
    PathPrefix {
        grid: &inc.grid[..=m],
        increments: &inc.data[..m * inc.n],
        n: inc.n,
    }
}

fn grid_index(inc: &Increments, t: f64) -> Result<usize> {
    inc.grid.iter().position(|&g| g == t).ok_or(Error::NotGridValued(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub holds: bool,
    /// The scalar `X` for linearity, the stopping time for stopping.
    pub value: f64,
    /// Grid points compared.
    pub compared: usize,
}

/// `int_s^t X Psi dL = X int_s^t Psi dL` at every grid `t >= s`, compared
/// with `==`.
///
/// `X` is computed from the path up to `s`. Both sides use the same
/// summation order, so equality is exact whenever multiplying by `X` is
/// (`X` zero or a signed power of two).
pub fn verify_linearity<F>(psi: &SimpleProcess, inc: &Increments, s: f64, x: F) -> Result<IdentityCheck>
where
    F: Fn(&PathPrefix<'_>) -> f64,
{
    let m = grid_index(inc, s)?;
    let x = x(&prefix_at(inc, m));
    let psi = psi.realize(inc)?;
    let lhs = integrate_increments(&psi.scaled_after(s, x)?, inc)?;
    let rhs = integrate_increments(&psi.scaled_after(s, 1.0)?, inc)?;
    let mut holds = true;
    for t in m..inc.grid.len() {
        let r = &rhs.values[t] * x;
        holds &= lhs.values[t].iter().zip(r.iter()).all(|(a, b)| a == b);
    }
    Ok(IdentityCheck {
        holds,
        value: x,
        compared: inc.grid.len() - m,
    })
}

/// A grid-valued stopping time.
#[derive(Clone)]
pub enum StoppingRule {
    /// A deterministic time; must be a grid point.
    Fixed(f64),
    /// First grid time whose prefix satisfies the predicate, `+inf` if none.
    FirstHit(Arc<dyn Fn(&PathPrefix<'_>) -> bool + Send + Sync>),
}

impl StoppingRule {
    /// First grid time at which `|L(t) e_j| > level`.
    pub fn first_exceedance(j: usize, level: f64) -> Self {
        StoppingRule::FirstHit(Arc::new(move |p: &PathPrefix<'_>| p.value(j).abs() > level))
    }

    pub fn evaluate(&self, inc: &Increments) -> Result<f64> {
        match self {
            StoppingRule::Fixed(t) => {
                if inc.grid.contains(t) {
                    Ok(*t)
                } else {
                    Err(Error::NotGridValued(*t))
                }
            }
            StoppingRule::FirstHit(f) => {
                // running sums keep this linear in the grid size
                let mut running = vec![0.0; inc.n];
                let mut incs = Vec::with_capacity(inc.data.len());
                for m in 0..inc.grid.len() {
                    if m > 0 {
                        incs.extend_from_slice(inc.cell(m - 1));
                        for (r, x) in running.iter_mut().zip(inc.cell(m - 1)) {
                            *r += x;
                        }
                    }
                    let p = PathPrefix {
                        grid: &inc.grid[..=m],
                        increments: &incs,
                        n: inc.n,
                    };
                    if f(&p) {
                        return Ok(inc.grid[m]);
                    }
                }
                Ok(f64::INFINITY)
            }
        }
    }
}

/// `int_0^{t ^ tau} Psi dL = int_0^t Psi 1_{s <= tau} dL` at every grid `t`,
/// compared with `==`.
pub fn verify_stopping(psi: &SimpleProcess, inc: &Increments, rule: &StoppingRule) -> Result<IdentityCheck> {
    let tau = rule.evaluate(inc)?;
    let psi = psi.realize(inc)?;
    let plain = integrate_increments(&psi, inc)?;
    let (d, n) = psi.shape();
    let split = psi.split_at(tau)?;
    let bp = split.breakpoints().to_vec();
    let values: Vec<DMatrix<f64>> = bp
        .windows(2)
        .zip(split.values().unwrap())
        .map(|(w, v)| if w[1] <= tau { v.clone() } else { DMatrix::zeros(d, n) })
        .collect();
    let stopped = integrate_increments(&SimpleProcess::new(bp, values)?, inc)?;
    let m_tau = inc.grid.iter().position(|&g| g == tau).unwrap_or(inc.grid.len() - 1);
    let holds = (0..inc.grid.len()).all(|m| {
        let lhs = &plain.values[m.min(m_tau)];
        lhs.iter().zip(stopped.values[m].iter()).all(|(a, b)| a == b)
    });
    Ok(IdentityCheck {
        holds,
        value: tau,
        compared: inc.grid.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsometryReport {
    pub n_paths: usize,
    /// Monte Carlo mean of `||I(Psi)(T)||^2` against `M^c_k`.
    pub lhs: f64,
    pub se: f64,
    /// `int_0^T ||Psi Q_k^{1/2}||_HS^2 ds`.
    pub rhs: f64,
    pub z_score: f64,
}

/// Itô isometry for a deterministic integrand against the martingale part at
/// ladder position `level`.
pub fn ito_isometry_test(
    psi: &SimpleProcess,
    sampler: &PathSampler,
    level: usize,
    n_paths: usize,
    master_seed: u64,
    workers: usize,
) -> Result<IsometryReport> {
    if psi.is_adapted() {
        return Err(Error::Domain("isometry test needs a deterministic integrand".into()));
    }
    if n_paths < 2 {
        return Err(Error::Domain("need at least two paths".into()));
    }
    let rhs = angle_bracket(psi, &sampler.q_diag(level), psi.horizon())?;
    let sq = run_ensemble(n_paths, workers, |i| -> Result<f64> {
        let p = sampler.sample(master_seed, i)?;
        let inc = p.increments(Part::Martingale, level);
        Ok(integrate_increments(psi, &inc)?.terminal().norm_squared())
    });
    let sq: Vec<f64> = sq.into_iter().collect::<Result<_>>()?;
    let (lhs, se) = mean_and_se(&sq);
    Ok(IsometryReport {
        n_paths,
        lhs,
        se,
        rhs,
        z_score: standardized(lhs - rhs, se),
    })
}

fn standardized(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProxyPoint {
    pub t: f64,
    /// `I(Psi)(t)` on the primary path.
    pub value: Vec<f64>,
    /// Bundle mean of `I(Psi)(T)` over continuations after `t`.
    pub bundle_mean: Vec<f64>,
    pub bundle_se: Vec<f64>,
    pub max_abs_z: f64,
}

/// Martingale property by path bundles: the primary path `(master_seed,
/// path_index)` is continued after each `t` with `bundle` fresh variants, and
/// the mean of `I(Psi)(T)` is compared with `I(Psi)(t)`. Integrates against
/// `M^c_k`. Each `t` must be a base grid point.
#[allow(clippy::too_many_arguments)]
pub fn martingale_proxy(
    psi: &SimpleProcess,
    sampler: &PathSampler,
    level: usize,
    master_seed: u64,
    path_index: u64,
    times: &[f64],
    bundle: usize,
    workers: usize,
) -> Result<Vec<ProxyPoint>> {
    if bundle < 2 {
        return Err(Error::Domain("bundle needs at least two continuations".into()));
    }
    let primary = sampler.sample(master_seed, path_index)?;
    let base = integrate_increments(psi, &primary.increments(Part::Martingale, level))?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let m = primary.grid().iter().position(|&g| g == t).ok_or(Error::NotGridValued(t))?;
        let ends = run_ensemble(bundle, workers, |v| -> Result<Vec<f64>> {
            let cont = sampler.sample_variant(master_seed, path_index, v + 1)?;
            let joined = primary.splice(&cont, t)?;
            let i = integrate_increments(psi, &joined.increments(Part::Martingale, level))?;
            Ok(i.terminal().iter().copied().collect())
        });
        let ends: Vec<Vec<f64>> = ends.into_iter().collect::<Result<_>>()?;
        let d = base.values[m].len();
        let (mut mean, mut se, mut z) = (Vec::new(), Vec::new(), 0.0f64);
        for r in 0..d {
            let col: Vec<f64> = ends.iter().map(|e| e[r]).collect();
            let (mu, s) = mean_and_se(&col);
            z = z.max(standardized(mu - base.values[m][r], s).abs());
            mean.push(mu);
            se.push(s);
        }
        out.push(ProxyPoint {
            t,
            value: base.values[m].iter().copied().collect(),
            bundle_mean: mean,
            bundle_se: se,
            max_abs_z: z,
        });
    }
    Ok(out)
}
