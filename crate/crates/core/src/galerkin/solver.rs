//! Explicit Euler scheme for the projected equation, at a fixed truncation
//! level or patched across a ladder of levels.

use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

use super::triple::{CoefficientPair, SpectralGelfandTriple};
use crate::error::{Error, Result};
use crate::rng::Provenance;
use crate::stochint::SamplePath;

/// `||X||_H` above this aborts the run.
pub const BLOWUP_GUARD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchEvent {
    pub time: f64,
    /// 1-based coordinate of the jump.
    pub coord: usize,
    pub size: f64,
    pub from_level: f64,
    pub to_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyLedger {
    /// `int_0^{t_m} ||X(s-)||_V^2 ds` with the left-point value on each cell.
    pub v_energy: Vec<f64>,
    /// `sup_{s <= t_m} ||X(s)||_H^2`.
    pub h_sup: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GalerkinSolution {
    pub times: Vec<f64>,
    /// `X(t_m)`, one row per grid point.
    pub states: Vec<Vec<f64>>,
    pub ledger: EnergyLedger,
    /// Level in force at the end of the run.
    pub level_k: f64,
    pub patch_log: Vec<PatchEvent>,
    pub provenance: Provenance,
}

impl GalerkinSolution {
    pub fn terminal(&self) -> &[f64] {
        self.states.last().unwrap()
    }

    /// Columns `t, X_1..X_n`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let n = self.states.first().map_or(0, |s| s.len());
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::Domain(format!("csv: {e}"));
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|j| format!("X_{j}")));
        out.write_record(&header).map_err(err)?;
        for (t, x) in self.times.iter().zip(&self.states) {
            let mut row = vec![t.to_string()];
            row.extend(x.iter().map(|v| v.to_string()));
            out.write_record(&row).map_err(err)?;
        }
        out.flush().map_err(|e| Error::Domain(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveFailure {
    /// `||X||_H` exceeded [`BLOWUP_GUARD`] or became NaN.
    BlowUp { time: f64, norm: f64 },
    /// A jump exceeded the largest level of the ladder.
    LadderExhausted { time: f64, coord: usize, size: f64 },
    Invalid(Error),
}

/// A failed run with the trajectory up to the failure.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveError {
    pub failure: SolveFailure,
    pub partial: Option<GalerkinSolution>,
}

impl std::fmt::Display for SolveError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.failure {
            SolveFailure::BlowUp { time, norm } => write!(f, "blow-up at t = {time}: ||X||_H = {norm}"),
            SolveFailure::LadderExhausted { time, coord, size } => {
                write!(f, "ladder exhausted at t = {time}: jump {size} in coordinate {coord}")
            }
            SolveFailure::Invalid(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SolveError {}

impl From<Error> for SolveError {
    fn from(e: Error) -> Self {
        SolveError {
            failure: SolveFailure::Invalid(e),
            partial: None,
        }
    }
}

fn add_scaled_column(x: &mut [f64], g: &DMatrix<f64>, j: usize, size: f64) {
    for (r, xr) in x.iter_mut().enumerate() {
        *xr += g[(r, j)] * size;
    }
}

struct Run<'a> {
    triple: &'a SpectralGelfandTriple,
    coeffs: &'a CoefficientPair,
    path: &'a SamplePath,
}

impl Run<'_> {
    fn validate(&self, x0: &[f64]) -> Result<()> {
        let n = self.triple.dim();
        if x0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x0.len(),
            });
        }
        let g = (self.coeffs.g)(x0);
        if g.shape() != (n, self.path.dim()) {
            return Err(Error::DimensionMismatch {
                expected: n * self.path.dim(),
                got: g.len(),
            });
        }
        if (self.coeffs.f)(x0).len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: (self.coeffs.f)(x0).len(),
            });
        }
        Ok(())
    }

    /// `patched = false` keeps the level fixed at `level` and drops the residual.
    fn solve(&self, level: usize, x0: &[f64], patched: bool) -> std::result::Result<GalerkinSolution, SolveError> {
        self.validate(x0)?;
        let p = self.path;
        if level >= p.levels().len() {
            return Err(Error::Domain(format!("level index {level} outside the ladder")).into());
        }
        let grid = p.grid();
        let mut lvl = level;
        let mut x = x0.to_vec();
        let mut sol = GalerkinSolution {
            times: vec![0.0],
            states: vec![x.clone()],
            ledger: EnergyLedger {
                v_energy: vec![0.0],
                h_sup: vec![self.triple.h_norm_sq(&x)],
            },
            level_k: p.levels()[lvl],
            patch_log: Vec::new(),
            provenance: p.provenance(),
        };
        let nodes = p.node_jumps();
        let mut next_node = 0;
        for i in 0..p.cells() {
            let h = grid[i + 1] - grid[i];
            let f = (self.coeffs.f)(&x);
            let g = (self.coeffs.g)(&x);
            let dl = p.interior(i);
            let vx = self.triple.v_norm_sq(&x);
            for (r, xr) in x.iter_mut().enumerate() {
                let mut s = 0.0;
                for (j, d) in dl.iter().enumerate() {
                    s += g[(r, j)] * d;
                }
                *xr += h * f[r] + s;
            }
            // jumps at t_{i+1}, applied with G at the pre-jump state
            while next_node < nodes.len() && nodes[next_node].cell == i {
                let nj = nodes[next_node];
                next_node += 1;
                let small = !p.is_residual(lvl, &nj);
                if !small && !patched {
                    continue;
                }
                let gm = (self.coeffs.g)(&x);
                add_scaled_column(&mut x, &gm, nj.coord, nj.size);
                if !small {
                    let to = (lvl + 1..p.levels().len()).find(|&l| !p.is_residual(l, &nj));
                    let Some(to) = to else {
                        sol.times.push(grid[i + 1]);
                        sol.states.push(x.clone());
                        let e = sol.ledger.v_energy.last().unwrap() + h * vx;
                        sol.ledger.v_energy.push(e);
                        let s = sol.ledger.h_sup.last().unwrap().max(self.triple.h_norm_sq(&x));
                        sol.ledger.h_sup.push(s);
                        return Err(SolveError {
                            failure: SolveFailure::LadderExhausted {
                                time: nj.time,
                                coord: nj.coord + 1,
                                size: nj.size,
                            },
                            partial: Some(sol),
                        });
                    };
                    sol.patch_log.push(PatchEvent {
                        time: nj.time,
                        coord: nj.coord + 1,
                        size: nj.size,
                        from_level: p.levels()[lvl],
                        to_level: p.levels()[to],
                    });
                    lvl = to;
                    sol.level_k = p.levels()[lvl];
                }
            }
            let hn = self.triple.h_norm_sq(&x);
            sol.times.push(grid[i + 1]);
            sol.states.push(x.clone());
            sol.ledger.v_energy.push(sol.ledger.v_energy.last().unwrap() + h * vx);
            sol.ledger.h_sup.push(sol.ledger.h_sup.last().unwrap().max(hn));
            if !(hn.sqrt() <= BLOWUP_GUARD) {
                return Err(SolveError {
                    failure: SolveFailure::BlowUp {
                        time: grid[i + 1],
                        norm: hn.sqrt(),
                    },
                    partial: Some(sol),
                });
            }
        }
        Ok(sol)
    }
}

/// Euler scheme driven by `L^c_k` at ladder position `level`:
/// `X_{i+1} = X_i + h F(X_i) + G(X_i) dL_i`, where jumps above the smallest
/// residual threshold are applied at their exact times with `G` at the
/// pre-jump state. Residual jumps of the level are dropped.
pub fn solve_projected(
    triple: &SpectralGelfandTriple,
    coeffs: &CoefficientPair,
    path: &SamplePath,
    level: usize,
    x0: &[f64],
) -> std::result::Result<GalerkinSolution, SolveError> {
    Run { triple, coeffs, path }.solve(level, x0, false)
}

/// As [`solve_projected`], starting at the first level. A jump above the
/// current threshold is applied through `G` and moves the run to the smallest
/// level that contains it. Jumps beyond the last level abort the run.
pub fn solve_patched(
    triple: &SpectralGelfandTriple,
    coeffs: &CoefficientPair,
    path: &SamplePath,
    x0: &[f64],
) -> std::result::Result<GalerkinSolution, SolveError> {
    Run { triple, coeffs, path }.solve(0, x0, true)
}

/// `sup_t ||X(t) - Y(t)||_H` over a common grid.
pub fn sup_distance(a: &GalerkinSolution, b: &GalerkinSolution) -> Result<f64> {
    if a.times != b.times {
        return Err(Error::Domain("solutions live on different grids".into()));
    }
    Ok(a.states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt())
        .fold(0.0, f64::max))
}
