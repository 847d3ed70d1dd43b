use std::path::Path;

use serde::Serialize;
use serde_json::json;

use super::config::{step_count, CheckConfig, ConvergeConfig, DichotomyConfig, ExperimentConfig, SolveConfig};
use super::output::{exit, num, opt, OutputDir, Timer};
use crate::cylnoise::{
    check_assumption_a6, check_series_conditions, decompose, dichotomy_test, ConvergenceVerdict, DecayRule,
    DiagonalCylindricalLevy, DichotomyOptions, DivergenceRule, ModelSpec, SquareSummable, TruncationDecomposition,
    VerdictStatus, WeightSequence, DEFAULT_K_LIST,
};
use crate::error::{Error, Result};
use crate::galerkin::{
    check_coercivity, check_growth_hemicontinuity, check_monotonicity, energy_monitor, solve_patched,
    solve_projected, v_energy_trend, GalerkinSolution, Preset, SolveError, SolveFailure, SpectralGelfandTriple,
};
use crate::rng::{mean_and_se, run_ensemble, Purpose, RandomStream};
use crate::stochint::{uniform_grid, PathSampler};

/// What a command hands back to the front end.
pub struct Outcome {
    pub exit_code: i32,
    pub results: serde_json::Value,
}

/// Settings resolved from flags and config.
pub struct RunContext<'a> {
    pub config: &'a ExperimentConfig,
    pub seed: u64,
    pub workers: usize,
    /// Directory relative model files are resolved against.
    pub config_dir: &'a Path,
}

fn status_exit(s: VerdictStatus) -> i32 {
    match s {
        VerdictStatus::Converges => exit::PASS,
        VerdictStatus::Diverges => exit::VIOLATION,
        VerdictStatus::Inconclusive => exit::INCONCLUSIVE,
    }
}

fn missing(block: &str) -> Error {
    Error::Domain(format!("config has no `{block}` block"))
}

struct Noise {
    process: DiagonalCylindricalLevy,
    weights: WeightSequence,
    levels: Vec<f64>,
}

fn noise(model: Option<&ModelSpec>, dir: &Path) -> Result<Noise> {
    match model {
        Some(m) => {
            let b = m.build(Some(dir))?;
            Ok(Noise {
                process: b.process,
                weights: b.weights,
                levels: b.levels,
            })
        }
        None => Ok(Noise {
            process: DiagonalCylindricalLevy::zero(),
            weights: WeightSequence::constant(1.0)?,
            levels: Vec::new(),
        }),
    }
}

fn verdict_row(name: &str, k: Option<f64>, v: &ConvergenceVerdict) -> Vec<String> {
    vec![
        name.to_string(),
        opt(k),
        format!("{:?}", v.status),
        num(v.partial_sum),
        v.terms_used.to_string(),
        opt(v.tail_bound),
        v.reason.clone(),
    ]
}

const VERDICT_HEADER: [&str; 7] = ["part", "k", "status", "partial_sum", "terms_used", "tail_bound", "reason"];

pub fn cmd_check(ctx: &RunContext<'_>, out: &mut OutputDir, timer: &mut Timer) -> Result<Outcome> {
    let cfg: &CheckConfig = ctx.config.check.as_ref().ok_or_else(|| missing("check"))?;
    cfg.validate()?;
    let model = ctx.config.model.as_ref().ok_or_else(|| missing("model"))?;
    let nz = noise(Some(model), ctx.config_dir)?;
    let k_list: Vec<f64> = match &cfg.k_list {
        Some(k) => k.clone(),
        None if !nz.levels.is_empty() => nz.levels.clone(),
        None => DEFAULT_K_LIST.to_vec(),
    };
    let alpha = match &cfg.series_alpha {
        Some(r) => r.build()?,
        None => DecayRule::power(1.0, 1.0)?,
    };
    let div = DivergenceRule::default();
    let series = check_series_conditions(&nz.process, &SquareSummable::new(alpha)?, cfg.n_terms, div)?;
    let a6 = check_assumption_a6(&nz.process, &nz.weights, &k_list, cfg.n_terms, div)?;
    timer.stage("noise checks");

    let mut rows = vec![
        verdict_row("series(1)", None, &series.cond1),
        verdict_row("series(2)", None, &series.cond2),
        verdict_row("series(3)", None, &series.cond3),
    ];
    for (name, part) in [("A6(a)", &a6.a), ("A6(b)", &a6.b), ("A6(c)", &a6.c)] {
        for (k, v) in k_list.iter().zip(part) {
            rows.push(verdict_row(name, Some(*k), v));
        }
    }
    out.csv("verdicts.csv", &VERDICT_HEADER, &rows)?;
    let mut diagnostics = a6.diagnostics();
    for (name, v) in [("series(1)", &series.cond1), ("series(2)", &series.cond2), ("series(3)", &series.cond3)] {
        if v.status != VerdictStatus::Converges {
            diagnostics.push(format!("{name}: {:?} ({})", v.status, v.reason));
        }
    }
    let mut statuses = vec![series.overall(), a6.overall()];

    let mut coefficients = serde_json::Value::Null;
    if let Some(cc) = &cfg.coefficients {
        let triple = SpectralGelfandTriple::dirichlet_laplacian(cc.n)?;
        let coeffs = cc.preset.build(&triple)?;
        let d = decompose(&nz.process, &nz.weights, cc.level, cc.force)?;
        let q = d.q_diag(cc.n)?;
        let mut rng = RandomStream::new(ctx.seed, 0).substream(0, Purpose::Probe);
        let growth_c = coeffs.registered_constants(&q).and_then(|k| k.growth_c);
        coefficients = match coeffs.registered_constants(&q) {
            Some(k) => {
                let co = check_coercivity(&triple, &coeffs, &q, &k, cc.samples, cc.radius, &mut rng)?;
                let mo = check_monotonicity(
                    &triple,
                    &coeffs,
                    &q,
                    k.lambda_monotone,
                    cc.monotonicity_form,
                    cc.samples,
                    cc.radius,
                    &mut rng,
                )?;
                let gr = check_growth_hemicontinuity(&triple, &coeffs, growth_c, cc.samples, &mut rng);
                for (name, ok) in [("coercivity", co.passed), ("monotonicity", mo.passed)] {
                    statuses.push(if ok { VerdictStatus::Converges } else { VerdictStatus::Diverges });
                    if !ok {
                        diagnostics.push(format!("{name}: counterexample found"));
                    }
                }
                if gr.growth_ok == Some(false) {
                    statuses.push(VerdictStatus::Diverges);
                    diagnostics.push(format!("growth: ratio {} exceeds registered c", gr.max_ratio));
                }
                if gr.hemicontinuity_flagged {
                    statuses.push(VerdictStatus::Inconclusive);
                    diagnostics.push("hemicontinuity: jump does not shrink under refinement".into());
                }
                json!({"preset": cc.preset.name(), "constants": k, "coercivity": co, "monotonicity": mo, "growth": gr})
            }
            None => {
                statuses.push(VerdictStatus::Inconclusive);
                diagnostics.push(format!("{}: no registered constants", cc.preset.name()));
                let gr = check_growth_hemicontinuity(&triple, &coeffs, None, cc.samples, &mut rng);
                json!({"preset": cc.preset.name(), "growth": gr})
            }
        };
        timer.stage("coefficient checks");
    }
    let overall = crate::cylnoise::combine_status(statuses);
    Ok(Outcome {
        exit_code: status_exit(overall),
        results: json!({
            "status": overall,
            "k_list": k_list,
            "series": series,
            "a6": a6,
            "coefficients": coefficients,
            "diagnostics": diagnostics,
        }),
    })
}

pub fn cmd_dichotomy(ctx: &RunContext<'_>, out: &mut OutputDir, timer: &mut Timer) -> Result<Outcome> {
    let cfg: &DichotomyConfig = ctx.config.dichotomy.as_ref().ok_or_else(|| missing("dichotomy"))?;
    cfg.validate()?;
    let nz = noise(Some(ctx.config.model.as_ref().ok_or_else(|| missing("model"))?), ctx.config_dir)?;
    let defaults = DichotomyOptions::default();
    let opts = DichotomyOptions {
        master_seed: ctx.seed,
        workers: ctx.workers,
        m_c_terms: cfg.m_c_terms.unwrap_or(defaults.m_c_terms),
        lambda_ceiling: cfg.lambda_ceiling.unwrap_or(defaults.lambda_ceiling),
        divergence: defaults.divergence,
    };
    let r = dichotomy_test(&nz.process, &nz.weights, cfg.k, cfg.n, cfg.n_paths, cfg.horizon, &opts)?;
    timer.stage("sampling");
    let rows: Vec<Vec<String>> = r
        .samples
        .iter()
        .map(|s| vec![s.path_index.to_string(), num(s.tau), s.censored.to_string()])
        .collect();
    out.csv("taus.csv", &["path_index", "tau", "censored"], &rows)?;
    let code = if r.status == VerdictStatus::Inconclusive {
        exit::INCONCLUSIVE
    } else if r.classification == crate::cylnoise::Classification::Exponential && r.p_value < cfg.significance {
        exit::VIOLATION
    } else {
        exit::PASS
    };
    Ok(Outcome {
        exit_code: code,
        results: serde_json::to_value(&r).expect("report serializes"),
    })
}

fn ladder(nz: &Noise, levels: &[f64], force: bool) -> Result<Vec<TruncationDecomposition>> {
    levels.iter().map(|&k| decompose(&nz.process, &nz.weights, k, force)).collect()
}

fn initial_state(x0: Option<&Vec<f64>>, n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    match x0 {
        Some(v) => x.iter_mut().zip(v).for_each(|(a, b)| *a = *b),
        None => x[0] = 1.0,
    }
    x
}

/// For the noise-free heat preset: `max_{t, j} |X_j(t) - e^{-mu_j t} x0_j|`
/// and the Euler bound `T max_j mu_j^2 dt |x0_j| / 2`, valid when `mu_j dt <= 1`.
#[derive(Debug, Clone, Copy, Serialize)]
struct DeterministicError {
    max_error: f64,
    euler_bound: f64,
    bound_valid: bool,
}

fn deterministic_error(
    preset: &Preset,
    triple: &SpectralGelfandTriple,
    sol: &GalerkinSolution,
    dt: f64,
) -> Option<DeterministicError> {
    if !matches!(preset, Preset::HeatAdditive { g0 } if *g0 == 0.0) {
        return None;
    }
    let mu = triple.eigenvalues();
    let x0 = &sol.states[0];
    let mut err = 0.0f64;
    for (t, x) in sol.times.iter().zip(&sol.states) {
        for j in 0..x.len() {
            err = err.max((x[j] - (-mu[j] * t).exp() * x0[j]).abs());
        }
    }
    let horizon = *sol.times.last().unwrap();
    let bound = (0..mu.len()).map(|j| horizon * mu[j] * mu[j] * dt * x0[j].abs() / 2.0).fold(0.0, f64::max);
    Some(DeterministicError {
        max_error: err,
        euler_bound: bound,
        bound_valid: mu.iter().zip(x0).all(|(m, x)| *x == 0.0 || m * dt <= 1.0),
    })
}

type PathRun = std::result::Result<GalerkinSolution, SolveError>;

fn failure_exit(runs: &[PathRun]) -> Result<i32> {
    let mut code = exit::PASS;
    for r in runs {
        if let Err(e) = r {
            match &e.failure {
                SolveFailure::BlowUp { .. } => code = exit::BLOW_UP,
                SolveFailure::LadderExhausted { .. } => {
                    if code == exit::PASS {
                        code = exit::INCONCLUSIVE
                    }
                }
                SolveFailure::Invalid(err) => return Err(err.clone()),
            }
        }
    }
    Ok(code)
}

fn solution_of(r: &PathRun) -> Option<&GalerkinSolution> {
    match r {
        Ok(s) => Some(s),
        Err(e) => e.partial.as_ref(),
    }
}

pub fn cmd_solve(ctx: &RunContext<'_>, out: &mut OutputDir, timer: &mut Timer) -> Result<Outcome> {
    let cfg: &SolveConfig = ctx.config.solve.as_ref().ok_or_else(|| missing("solve"))?;
    let steps = cfg.validate()?;
    let nz = noise(ctx.config.model.as_ref(), ctx.config_dir)?;
    let levels = cfg.levels.clone().unwrap_or_else(|| if nz.levels.is_empty() { vec![1.0] } else { nz.levels.clone() });
    let ladder = ladder(&nz, &levels, cfg.force)?;
    let sampler = PathSampler::new(&ladder, cfg.n, uniform_grid(cfg.horizon, steps)?, cfg.sampler.unwrap_or_default())?;
    let triple = SpectralGelfandTriple::dirichlet_laplacian(cfg.n)?;
    let coeffs = cfg.preset.build(&triple)?;
    let x0 = initial_state(cfg.x0.as_ref(), cfg.n);
    timer.stage("setup");

    let runs: Vec<PathRun> = run_ensemble(cfg.n_paths, ctx.workers, |i| {
        let path = sampler.sample(ctx.seed, i)?;
        if cfg.patched {
            solve_patched(&triple, &coeffs, &path, &x0)
        } else {
            solve_projected(&triple, &coeffs, &path, 0, &x0)
        }
    });
    let code = failure_exit(&runs)?;
    timer.stage("solve");

    let first = solution_of(&runs[0]).ok_or_else(|| Error::Domain("first path produced no trajectory".into()))?;
    let mut traj = Vec::with_capacity(first.times.len());
    for (t, x) in first.times.iter().zip(&first.states) {
        let mut row = vec![num(*t)];
        row.extend(x.iter().map(|v| num(*v)));
        traj.push(row);
    }
    let mut header = vec!["t".to_string()];
    header.extend((1..=cfg.n).map(|j| format!("X_{j}")));
    let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    out.csv("trajectory.csv", &header, &traj)?;

    let (mut path_rows, mut patch_rows) = (Vec::new(), Vec::new());
    for (i, r) in runs.iter().enumerate() {
        let status = match r {
            Ok(_) => "completed".to_string(),
            Err(e) => match e.failure {
                SolveFailure::BlowUp { .. } => "blow-up".into(),
                SolveFailure::LadderExhausted { .. } => "ladder-exhausted".into(),
                SolveFailure::Invalid(_) => "invalid".into(),
            },
        };
        let Some(s) = solution_of(r) else { continue };
        path_rows.push(vec![
            i.to_string(),
            status,
            num(*s.times.last().unwrap()),
            num(s.level_k),
            s.patch_log.len().to_string(),
            num(triple.h_norm_sq(s.terminal())),
            num(*s.ledger.v_energy.last().unwrap()),
            num(*s.ledger.h_sup.last().unwrap()),
        ]);
        for p in &s.patch_log {
            patch_rows.push(vec![
                i.to_string(),
                num(p.time),
                p.coord.to_string(),
                num(p.size),
                num(p.from_level),
                num(p.to_level),
            ]);
        }
    }
    out.csv(
        "paths.csv",
        &["path_index", "status", "t_end", "final_level", "patches", "terminal_h_sq", "v_energy", "h_sup"],
        &path_rows,
    )?;
    out.csv("patches.csv", &["path_index", "time", "coord", "size", "from_level", "to_level"], &patch_rows)?;

    let energy = match cfg.energy_lambda {
        Some(lambda) if code == exit::PASS => {
            let rep = energy_monitor(&triple, &coeffs, &sampler, 0, &x0, lambda, cfg.n_paths, ctx.seed, ctx.workers)
                .map_err(|e| Error::Domain(e.to_string()))?;
            timer.stage("energy identity");
            serde_json::to_value(rep).expect("report serializes")
        }
        _ => serde_json::Value::Null,
    };
    let patches: Vec<f64> = runs.iter().filter_map(solution_of).map(|s| s.patch_log.len() as f64).collect();
    let (patch_mean, patch_se) = mean_and_se(&patches);
    let failures: Vec<String> = runs.iter().filter_map(|r| r.as_ref().err()).map(|e| e.to_string()).collect();
    Ok(Outcome {
        exit_code: code,
        results: json!({
            "levels": levels,
            "steps": steps,
            "cutoffs": sampler.cutoffs(),
            "deterministic_error": deterministic_error(&cfg.preset, &triple, first, cfg.dt),
            "energy": energy,
            "patch_count_mean": patch_mean,
            "patch_count_se": patch_se,
            "failures": failures,
        }),
    })
}

pub fn cmd_converge(ctx: &RunContext<'_>, out: &mut OutputDir, timer: &mut Timer) -> Result<Outcome> {
    let cfg: &ConvergeConfig = ctx.config.converge.as_ref().ok_or_else(|| missing("converge"))?;
    cfg.validate()?;
    let nz = noise(ctx.config.model.as_ref(), ctx.config_dir)?;
    let level = cfg.level.or(nz.levels.first().copied()).unwrap_or(1.0);
    let lad = ladder(&nz, &[level], cfg.force)?;
    let mut rows = Vec::new();
    let mut code = exit::PASS;
    let mut energies: Vec<Vec<f64>> = vec![Vec::new(); cfg.dts.len()];
    for &n in &cfg.ns {
        let triple = SpectralGelfandTriple::dirichlet_laplacian(n)?;
        let coeffs = cfg.preset.build(&triple)?;
        let x0 = initial_state(cfg.x0.as_ref(), n);
        let mut prev_err: Option<f64> = None;
        for (di, &dt) in cfg.dts.iter().enumerate() {
            let steps = step_count(dt, cfg.horizon)?;
            let sampler = PathSampler::new(&lad, n, uniform_grid(cfg.horizon, steps)?, cfg.sampler.unwrap_or_default())?;
            let runs: Vec<PathRun> = run_ensemble(cfg.n_paths, ctx.workers, |i| {
                let path = sampler.sample(ctx.seed, i)?;
                solve_projected(&triple, &coeffs, &path, 0, &x0)
            });
            code = code.max(failure_exit(&runs)?);
            let sols: Vec<&GalerkinSolution> = runs.iter().filter_map(|r| r.as_ref().ok()).collect();
            let err = sols.first().and_then(|s| deterministic_error(&cfg.preset, &triple, s, dt));
            let v: Vec<f64> = sols.iter().map(|s| *s.ledger.v_energy.last().unwrap()).collect();
            let h: Vec<f64> = sols.iter().map(|s| *s.ledger.h_sup.last().unwrap()).collect();
            let (vm, vse) = mean_and_se(&v);
            let (hm, _) = mean_and_se(&h);
            energies[di].push(vm);
            let e = err.map(|e| e.max_error);
            let ratio = prev_err.zip(e).map(|(a, b)| a / b);
            prev_err = e;
            rows.push(vec![
                n.to_string(),
                num(dt),
                sols.len().to_string(),
                opt(e),
                opt(ratio),
                opt(err.map(|e| e.euler_bound)),
                num(vm),
                num(vse),
                num(hm),
            ]);
        }
        timer.stage(&format!("n = {n}"));
    }
    out.csv(
        "convergence.csv",
        &["n", "dt", "n_paths", "max_error", "error_ratio", "euler_bound", "v_energy", "v_energy_se", "h_sup"],
        &rows,
    )?;
    let trends: Vec<_> = cfg.dts.iter().zip(&energies).map(|(dt, e)| json!({"dt": dt, "trend": v_energy_trend(e)})).collect();
    Ok(Outcome {
        exit_code: code,
        results: json!({"level": level, "v_energy_trend": trends}),
    })
}
