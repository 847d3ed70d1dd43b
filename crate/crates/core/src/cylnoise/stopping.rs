//! Large-jump stopping times `tau_n^c(k)` and the exponential dichotomy.

use serde::Serialize;

use super::checks::{lambda_n, m_c, ConvergenceVerdict, DivergenceRule, VerdictStatus};
use super::process::DiagonalCylindricalLevy;
use super::rules::WeightSequence;
use crate::error::{Error, Result};
use crate::levy1d::first_jump_above;
use crate::rng::{pairwise_sum, run_ensemble, Purpose, RandomStream};
use crate::stats::ks_test;

/// Offset that keeps the stopping-time streams apart from path streams.
const TAU_STREAM_OFFSET: usize = 1 << 40;

/// `tau_n^c(k)`: first time one of `c_1 l_1, ..., c_n l_n` jumps by more than `k`.
///
/// The components never jump together, so this is the minimum over `j` of
/// the first jump of `l_j` above `k / c_j`. Coordinate `j` always draws from
/// the same substream, so the result is nonincreasing in `n` for a fixed
/// stream. Returns `+inf` if no such jump occurs in `(0, horizon]`.
pub fn first_large_jump_time(
    l: &DiagonalCylindricalLevy,
    c: &WeightSequence,
    k: f64,
    n: usize,
    horizon: f64,
    rng: &RandomStream,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if !(k > 0.0) {
        return Err(Error::Domain(format!("k must be positive, got {k}")));
    }
    let mut tau = f64::INFINITY;
    for j in 1..=n {
        let m = l.component(j)?.measure;
        let mut s = rng.substream(TAU_STREAM_OFFSET + j, Purpose::Jumps);
        if let Some(jump) = first_jump_above(&m, k / c.value(j), horizon, &mut s)? {
            // ties resolve to the lower coordinate, which is the one already held
            if jump.time < tau {
                tau = jump.time;
            }
        }
    }
    Ok(tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    AlmostSurelyInfinite,
    Exponential,
    AccumulatesAtZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauSample {
    pub path_index: u64,
    pub tau: f64,
    pub censored: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct DichotomyOptions {
    /// Paths draw from streams `(master_seed, path_index)`.
    pub master_seed: u64,
    pub workers: usize,
    /// Terms used for `m^c(k)`.
    pub m_c_terms: usize,
    /// `lambda_n^k` above this is reported as accumulation at zero.
    pub lambda_ceiling: f64,
    pub divergence: DivergenceRule,
}

impl Default for DichotomyOptions {
    fn default() -> Self {
        Self {
            master_seed: 0,
            workers: 0,
            m_c_terms: 100_000,
            lambda_ceiling: 1e6,
            divergence: DivergenceRule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DichotomyReport {
    pub n: usize,
    pub k: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub n_censored: usize,
    pub ks_statistic: f64,
    pub p_value: f64,
    /// Censored-exponential MLE: uncensored count over total exposure.
    pub lambda_hat: f64,
    pub lambda_analytic: f64,
    pub m_c: f64,
    pub m_c_verdict: ConvergenceVerdict,
    /// `m^c(k) - lambda_n^k`; the simulation samples `tau_n`, not its limit.
    pub lambda_gap: f64,
    pub classification: Classification,
    /// `Inconclusive` when every sample is censored.
    pub status: VerdictStatus,
    #[serde(skip)]
    pub samples: Vec<TauSample>,
}

#[allow(clippy::too_many_arguments)]
pub fn dichotomy_test(
    l: &DiagonalCylindricalLevy,
    c: &WeightSequence,
    k: f64,
    n: usize,
    n_paths: usize,
    horizon: f64,
    opts: &DichotomyOptions,
) -> Result<DichotomyReport> {
    if n_paths < 100 {
        return Err(Error::Domain(format!("need at least 100 paths, got {n_paths}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain("horizon must be positive and finite".into()));
    }
    let lambda = lambda_n(l, c, k, n)?;
    let (m, m_verdict) = m_c(l, c, k, opts.m_c_terms.max(n), opts.divergence)?;
    // materialize before fanning out so workers only read the cache
    l.component(n)?;
    let taus = run_ensemble(n_paths, opts.workers, |i| {
        first_large_jump_time(l, c, k, n, horizon, &RandomStream::new(opts.master_seed, i))
    });
    let mut samples = Vec::with_capacity(n_paths);
    for (i, t) in taus.into_iter().enumerate() {
        let tau = t?;
        samples.push(TauSample {
            path_index: i as u64,
            tau,
            censored: !(tau <= horizon),
        });
    }
    let mut uncensored: Vec<f64> = samples.iter().filter(|s| !s.censored).map(|s| s.tau).collect();
    let n_censored = n_paths - uncensored.len();
    let exposure: Vec<f64> = samples.iter().map(|s| s.tau.min(horizon)).collect();
    let exposure = pairwise_sum(&exposure);
    let lambda_hat = if exposure > 0.0 {
        uncensored.len() as f64 / exposure
    } else {
        f64::INFINITY
    };

    let classification = if lambda == 0.0 && m == 0.0 {
        Classification::AlmostSurelyInfinite
    } else if m_verdict.status == VerdictStatus::Diverges || lambda > opts.lambda_ceiling {
        Classification::AccumulatesAtZero
    } else {
        Classification::Exponential
    };

    let (ks_statistic, p_value, status) = if uncensored.is_empty() {
        let st = if classification == Classification::AlmostSurelyInfinite {
            VerdictStatus::Converges
        } else {
            VerdictStatus::Inconclusive
        };
        (f64::NAN, f64::NAN, st)
    } else if lambda > 0.0 {
        // law of tau given tau <= horizon
        let norm = -(-lambda * horizon).exp_m1();
        let ks = ks_test(&mut uncensored, |t| (-(-lambda * t).exp_m1() / norm).clamp(0.0, 1.0));
        (ks.statistic, ks.p_value, VerdictStatus::Converges)
    } else {
        (1.0, 0.0, VerdictStatus::Diverges)
    };

    Ok(DichotomyReport {
        n,
        k,
        horizon,
        n_paths,
        n_censored,
        ks_statistic,
        p_value,
        lambda_hat,
        lambda_analytic: lambda,
        m_c: m,
        m_c_verdict: m_verdict,
        lambda_gap: m - lambda,
        classification,
        status,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylnoise::process::{ClosedFormFamily, FamilyKind};
    use crate::cylnoise::rules::DecayRule;

    fn sym(alpha: f64, sigma: DecayRule) -> DiagonalCylindricalLevy {
        DiagonalCylindricalLevy::from_family(
            ClosedFormFamily {
                kind: FamilyKind::SymmetricStable,
                alpha,
                sigma,
            },
            DecayRule::zero(),
        )
        .unwrap()
    }

    #[test]
    fn zero_process_never_stops() {
        let l = DiagonalCylindricalLevy::zero();
        let c = WeightSequence::constant(1.0).unwrap();
        let t = first_large_jump_time(&l, &c, 1.0, 5, 10.0, &RandomStream::new(1, 0)).unwrap();
        assert_eq!(t, f64::INFINITY);
        let r = dichotomy_test(&l, &c, 1.0, 5, 100, 1.0, &DichotomyOptions::default()).unwrap();
        assert_eq!(r.classification, Classification::AlmostSurelyInfinite);
        assert_eq!(r.n_censored, 100);
    }

    #[test]
    fn single_cauchy_coordinate_is_unit_exponential() {
        let l = sym(1.0, DecayRule::constant(1.0).unwrap());
        let c = WeightSequence::constant(1.0).unwrap();
        let taus: Vec<f64> = (0..10_000)
            .map(|i| first_large_jump_time(&l, &c, 1.0, 1, 1e9, &RandomStream::new(3, i)).unwrap())
            .collect();
        let (mean, se) = crate::rng::mean_and_se(&taus);
        assert!((mean - 1.0).abs() < 3.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn tau_is_nonincreasing_in_n() {
        let l = sym(1.5, DecayRule::power(1.0, 0.5).unwrap());
        let c = WeightSequence::constant(1.0).unwrap();
        for i in 0..50 {
            let rng = RandomStream::new(8, i);
            let mut prev = f64::INFINITY;
            for n in [1, 2, 5, 10, 40] {
                let t = first_large_jump_time(&l, &c, 2.0, n, 5.0, &rng).unwrap();
                assert!(t <= prev);
                prev = t;
            }
        }
    }

    #[test]
    fn divergent_m_c_accumulates() {
        let l = sym(1.5, DecayRule::power(1.0, 1.0 / 6.0).unwrap());
        let c = WeightSequence::constant(1.0).unwrap();
        let opts = DichotomyOptions {
            m_c_terms: 10_000,
            ..Default::default()
        };
        let r = dichotomy_test(&l, &c, 1.0, 10_000, 100, 1.0, &opts).unwrap();
        assert_eq!(r.classification, Classification::AccumulatesAtZero);
        assert_eq!(r.m_c_verdict.status, VerdictStatus::Diverges);
    }
}
