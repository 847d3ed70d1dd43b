//! Sample paths of `L_n = (l_1, ..., l_n)` with a shared jump record across a
//! ladder of truncation levels.
//!
//! Each coordinate is simulated by the Asmussen–Rosiński scheme: all jumps
//! above an inner cutoff `eps_j` are drawn exactly (compound Poisson), the
//! compensated jumps below `eps_j` are replaced by a Gaussian of the same
//! variance. Jumps above the smallest residual threshold `k_1 / c_j` are the
//! only ones that can be "large" at some level; their times are inserted into
//! the grid, so each of them sits exactly at the right end of a cell.
//!
//! Everything else (drift, Gaussian part, jumps in `(eps_j, k_1/c_j]`) forms
//! the interior increment of a cell. That increment does not depend on the level,
//! so `L^c_k` increments at two levels agree bitwise on every cell without a
//! jump between the two thresholds.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cylnoise::{DiagonalCylindricalLevy, TruncationDecomposition, WeightSequence};
use crate::error::{Error, Result};
use crate::levy1d::{sample_jumps_with_rate, Jump, LevyMeasureModel};
use crate::rng::{Provenance, Purpose, RandomStream};

/// Separates the streams of path variants (continuations).
const VARIANT_STRIDE: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    /// Largest admissible share of the truncated variance carried by the
    /// Gaussian substitute.
    pub variance_fraction: f64,
    /// Cap on the rate of exactly simulated jumps, per coordinate and unit time.
    /// Takes precedence over `variance_fraction`.
    pub max_rate: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            variance_fraction: 1e-4,
            max_rate: 1e4,
        }
    }
}

/// Ascending grid `0 = t_0 < ... < t_M = T`.
pub fn uniform_grid(horizon: f64, cells: usize) -> Result<Vec<f64>> {
    if !(horizon > 0.0 && horizon.is_finite()) || cells == 0 {
        return Err(Error::Domain("grid needs T > 0 and at least one cell".into()));
    }
    let mut g: Vec<f64> = (0..=cells).map(|i| horizon * i as f64 / cells as f64).collect();
    g[cells] = horizon;
    Ok(g)
}

/// Union of a grid and extra nodes in `(0, T)`.
pub fn refine_grid(grid: &[f64], extra: &[f64]) -> Result<Vec<f64>> {
    check_grid(grid)?;
    let t = *grid.last().unwrap();
    let mut g: Vec<f64> = grid.to_vec();
    for &x in extra {
        if !(x >= 0.0 && x <= t) {
            return Err(Error::BreakpointNotOnGrid(x));
        }
        g.push(x);
    }
    g.sort_by(f64::total_cmp);
    g.dedup();
    Ok(g)
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid[0] != 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) || !grid.iter().all(|x| x.is_finite())
    {
        return Err(Error::Domain("grid must start at 0 and be strictly increasing".into()));
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct CoordPlan {
    measure: LevyMeasureModel,
    eps: f64,
    rate: f64,
    kappa_min: f64,
    base_drift: f64,
    base_var: f64,
    kappa: Vec<f64>,
    drift_p: Vec<f64>,
    q: Vec<f64>,
}

fn choose_cutoff(m: &LevyMeasureModel, kappa_min: f64, cfg: &SamplerConfig) -> Result<(f64, f64)> {
    if m.is_zero() {
        return Ok((kappa_min, 0.0));
    }
    let total = m.annulus(0.0, f64::INFINITY).mass;
    if total.is_finite() && total <= cfg.max_rate {
        return Ok((0.0, total));
    }
    let var_k = m.truncated_second_moment(kappa_min)?;
    let target = cfg.variance_fraction * var_k;
    // largest eps with int_{|x|<=eps} x^2 <= target, by bisection in log scale
    let (mut lo, mut hi) = (kappa_min * 1e-200, kappa_min);
    if m.truncated_second_moment(hi)? <= target {
        lo = hi;
    }
    for _ in 0..200 {
        if hi / lo < 1.0 + 1e-12 {
            break;
        }
        let mid = (lo * hi).sqrt();
        if m.truncated_second_moment(mid)? <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut eps = lo;
    if m.tail_mass(eps)? > cfg.max_rate {
        // smallest eps whose jump rate respects the cap
        let (mut lo, mut hi) = (eps, kappa_min);
        if m.tail_mass(hi)? > cfg.max_rate {
            lo = hi;
        }
        for _ in 0..200 {
            if hi / lo < 1.0 + 1e-12 {
                break;
            }
            let mid = (lo * hi).sqrt();
            if m.tail_mass(mid)? > cfg.max_rate {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        eps = hi;
    }
    Ok((eps, m.tail_mass(eps)?))
}

/// Draws coupled sample paths for a ladder of truncation levels.
#[derive(Debug, Clone)]
pub struct PathSampler {
    plans: Vec<CoordPlan>,
    levels: Vec<f64>,
    base_grid: Vec<f64>,
    config: SamplerConfig,
}

impl PathSampler {
    /// `ladder` must share process and weights and be strictly ascending in `k`.
    pub fn new(ladder: &[TruncationDecomposition], n: usize, grid: Vec<f64>, config: SamplerConfig) -> Result<Self> {
        let first = ladder.first().ok_or_else(|| Error::Domain("empty truncation ladder".into()))?;
        if ladder.windows(2).any(|w| !(w[1].level_k() > w[0].level_k())) {
            return Err(Error::Domain("truncation levels must be strictly ascending".into()));
        }
        if n == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        if !(config.variance_fraction > 0.0 && config.variance_fraction < 1.0 && config.max_rate > 0.0) {
            return Err(Error::Domain("sampler config out of range".into()));
        }
        check_grid(&grid)?;
        let l: &DiagonalCylindricalLevy = first.process();
        let c: &WeightSequence = first.weights();
        let mut plans = Vec::with_capacity(n);
        for j in 1..=n {
            let t = l.component(j)?;
            let kappa_min = first.residual_threshold(j);
            let (eps, rate) = choose_cutoff(&t.measure, kappa_min, &config)?;
            let small = if eps > 0.0 { t.measure.truncated_second_moment(eps)? } else { 0.0 };
            plans.push(CoordPlan {
                base_drift: t.drift_b + t.measure.signed_annulus_first_moment(1.0, eps),
                base_var: t.gaussian_s + small,
                measure: t.measure,
                eps,
                rate,
                kappa_min,
                kappa: ladder.iter().map(|d| d.level_k() / c.value(j)).collect(),
                drift_p: ladder.iter().map(|d| d.drift_p(j)).collect::<Result<_>>()?,
                q: ladder.iter().map(|d| d.martingale_var(j)).collect::<Result<_>>()?,
            });
        }
        Ok(Self {
            plans,
            levels: ladder.iter().map(|d| d.level_k()).collect(),
            base_grid: grid,
            config,
        })
    }

    pub fn dim(&self) -> usize {
        self.plans.len()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn horizon(&self) -> f64 {
        *self.base_grid.last().unwrap()
    }

    pub fn base_grid(&self) -> &[f64] {
        &self.base_grid
    }

    pub fn config(&self) -> SamplerConfig {
        self.config
    }

    /// Inner cutoffs `eps_j`.
    pub fn cutoffs(&self) -> Vec<f64> {
        self.plans.iter().map(|p| p.eps).collect()
    }

    /// Nominal rates of exactly simulated jumps per coordinate.
    pub fn jump_rates(&self) -> Vec<f64> {
        self.plans.iter().map(|p| p.rate).collect()
    }

    /// Diagonal of `Q_k` at ladder position `level`.
    pub fn q_diag(&self, level: usize) -> Vec<f64> {
        self.plans.iter().map(|p| p.q[level]).collect()
    }

    pub fn drift_p(&self, level: usize) -> Vec<f64> {
        self.plans.iter().map(|p| p.drift_p[level]).collect()
    }

    pub fn sample(&self, master_seed: u64, path_index: u64) -> Result<SamplePath> {
        self.sample_variant(master_seed, path_index, 0)
    }

    /// Path drawn from the variant-`v` streams of `(master_seed, path_index)`.
    /// Variant 0 is the primary path.
    pub fn sample_variant(&self, master_seed: u64, path_index: u64, variant: u64) -> Result<SamplePath> {
        let root = RandomStream::new(master_seed, path_index);
        let n = self.plans.len();
        let horizon = self.horizon();
        let stream = |j: usize, purpose: Purpose| root.substream(j + variant as usize * VARIANT_STRIDE, purpose);

        let mut interior_jumps: Vec<Vec<Jump>> = Vec::with_capacity(n);
        let mut nodes: Vec<NodeJump> = Vec::new();
        for (j, plan) in self.plans.iter().enumerate() {
            let jumps = if plan.rate > 0.0 {
                sample_jumps_with_rate(&plan.measure, plan.eps, plan.rate, horizon, &mut stream(j, Purpose::Jumps))?
            } else {
                Vec::new()
            };
            let (big, small): (Vec<Jump>, Vec<Jump>) = jumps.into_iter().partition(|x| x.size.abs() > plan.kappa_min);
            nodes.extend(big.into_iter().map(|x| NodeJump {
                time: x.time,
                coord: j,
                size: x.size,
                cell: 0,
            }));
            interior_jumps.push(small);
        }
        nodes.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.coord.cmp(&b.coord)));
        let node_times: Vec<f64> = nodes.iter().map(|x| x.time).collect();
        let grid = refine_grid(&self.base_grid, &node_times)?;
        let cells = grid.len() - 1;
        let cell_of = |t: f64| grid.partition_point(|&g| g < t).saturating_sub(1).min(cells - 1);
        for x in &mut nodes {
            x.cell = cell_of(x.time);
            debug_assert_eq!(grid[x.cell + 1], x.time);
        }

        let mut interior = vec![0.0; cells * n];
        for (j, plan) in self.plans.iter().enumerate() {
            let mut gauss = stream(j, Purpose::Gaussian);
            let mut bridge = stream(j, Purpose::Bridge);
            let mut fine = 0usize;
            for b in 0..self.base_grid.len() - 1 {
                let (t0, t1) = (self.base_grid[b], self.base_grid[b + 1]);
                let h = t1 - t0;
                let z: f64 = gauss.sample(StandardNormal);
                let mut rest = (plan.base_var * h).sqrt() * z;
                let mut rest_len = h;
                while grid[fine + 1] < t1 {
                    let hs = grid[fine + 1] - grid[fine];
                    let mean = rest * hs / rest_len;
                    let var = plan.base_var * hs * (rest_len - hs) / rest_len;
                    let zb: f64 = bridge.sample(StandardNormal);
                    let x = mean + var.max(0.0).sqrt() * zb;
                    interior[fine * n + j] = plan.base_drift * hs + x;
                    rest -= x;
                    rest_len -= hs;
                    fine += 1;
                }
                let hs = grid[fine + 1] - grid[fine];
                interior[fine * n + j] = plan.base_drift * hs + rest;
                fine += 1;
            }
            for x in &interior_jumps[j] {
                interior[cell_of(x.time) * n + j] += x.size;
            }
        }

        Ok(SamplePath {
            grid,
            n,
            interior,
            nodes,
            levels: self.levels.clone(),
            kappa: (0..self.levels.len()).map(|l| self.plans.iter().map(|p| p.kappa[l]).collect()).collect(),
            drift_p: (0..self.levels.len()).map(|l| self.drift_p(l)).collect(),
            q: (0..self.levels.len()).map(|l| self.q_diag(l)).collect(),
            provenance: root.provenance(),
            variant,
        })
    }
}

/// A jump above the smallest residual threshold, placed at grid node
/// `grid[cell + 1] == time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeJump {
    pub time: f64,
    /// 0-based coordinate.
    pub coord: usize,
    pub size: f64,
    pub cell: usize,
}

/// Which part of `L = P + M + R` (or `L^c_k = P + M`) to extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Total,
    Truncated,
    Drift,
    Martingale,
    Residual,
}

/// Cell increments of one part of the noise, `cells x n`, row per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Increments {
    pub grid: Vec<f64>,
    pub n: usize,
    pub data: Vec<f64>,
    /// Diagonal of `Q_k` of the level the increments belong to.
    pub q_diag: Vec<f64>,
}

impl Increments {
    pub fn cells(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn cell(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// `L(t_m) e_j` for all grid points, summed in cell order.
    pub fn cumulative(&self, j: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grid.len());
        let mut s = 0.0;
        out.push(s);
        for i in 0..self.cells() {
            s += self.cell(i)[j];
            out.push(s);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    grid: Vec<f64>,
    n: usize,
    interior: Vec<f64>,
    nodes: Vec<NodeJump>,
    levels: Vec<f64>,
    kappa: Vec<Vec<f64>>,
    drift_p: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    provenance: Provenance,
    variant: u64,
}

impl SamplePath {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn cells(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn variant(&self) -> u64 {
        self.variant
    }

    /// Level-independent part of the increment on cell `i`.
    pub fn interior(&self, i: usize) -> &[f64] {
        &self.interior[i * self.n..(i + 1) * self.n]
    }

    /// Jumps above the smallest residual threshold, ordered by `(time, coord)`.
    pub fn node_jumps(&self) -> &[NodeJump] {
        &self.nodes
    }

    /// Residual thresholds `k / c_j` at ladder position `level`.
    pub fn thresholds(&self, level: usize) -> &[f64] {
        &self.kappa[level]
    }

    pub fn q_diag(&self, level: usize) -> &[f64] {
        &self.q[level]
    }

    pub fn drift_p(&self, level: usize) -> &[f64] {
        &self.drift_p[level]
    }

    /// Per-coordinate jump records above the residual threshold of `level`.
    pub fn jump_records(&self, level: usize) -> Vec<Vec<Jump>> {
        let mut out = vec![Vec::new(); self.n];
        for x in self.nodes.iter().filter(|x| self.is_residual(level, x)) {
            out[x.coord].push(Jump {
                time: x.time,
                size: x.size,
            });
        }
        out
    }

    /// Whether a node jump belongs to `R^c_k` at `level` (`|x| > k / c_j`).
    pub fn is_residual(&self, level: usize, x: &NodeJump) -> bool {
        x.size.abs() > self.kappa[level][x.coord]
    }

    /// First jump of `c_j l_j` larger than `k`: a sample of `tau_n^c(k)`.
    pub fn first_exceedance(&self, level: usize) -> Option<NodeJump> {
        self.nodes.iter().copied().find(|x| self.is_residual(level, x))
    }

    pub fn increments(&self, part: Part, level: usize) -> Increments {
        let (n, cells) = (self.n, self.cells());
        let mut data = vec![0.0; cells * n];
        let h = |i: usize| self.grid[i + 1] - self.grid[i];
        match part {
            Part::Drift => {
                for i in 0..cells {
                    for j in 0..n {
                        data[i * n + j] = self.drift_p[level][j] * h(i);
                    }
                }
            }
            Part::Residual => {
                for x in self.nodes.iter().filter(|x| self.is_residual(level, x)) {
                    data[x.cell * n + x.coord] += x.size;
                }
            }
            Part::Total | Part::Truncated | Part::Martingale => {
                data.copy_from_slice(&self.interior);
                for x in &self.nodes {
                    if part == Part::Total || !self.is_residual(level, x) {
                        data[x.cell * n + x.coord] += x.size;
                    }
                }
                if part == Part::Martingale {
                    for i in 0..cells {
                        for j in 0..n {
                            data[i * n + j] -= self.drift_p[level][j] * h(i);
                        }
                    }
                }
            }
        }
        Increments {
            grid: self.grid.clone(),
            n,
            data,
            q_diag: self.q[level].clone(),
        }
    }

    /// Prefix of `self` up to grid time `t`, followed by `other` after `t`.
    ///
    /// Both paths must share dimension and ladder and have `t` on their grids.
    pub fn splice(&self, other: &SamplePath, t: f64) -> Result<SamplePath> {
        if self.n != other.n || self.levels != other.levels {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let i = self.grid.iter().position(|&g| g == t).ok_or(Error::BreakpointNotOnGrid(t))?;
        let m = other.grid.iter().position(|&g| g == t).ok_or(Error::BreakpointNotOnGrid(t))?;
        let mut grid = self.grid[..=i].to_vec();
        grid.extend_from_slice(&other.grid[m + 1..]);
        let mut interior = self.interior[..i * self.n].to_vec();
        interior.extend_from_slice(&other.interior[m * other.n..]);
        let mut nodes: Vec<NodeJump> = self.nodes.iter().copied().filter(|x| x.time <= t).collect();
        nodes.extend(other.nodes.iter().filter(|x| x.time > t).map(|x| NodeJump {
            cell: x.cell - m + i,
            ..*x
        }));
        Ok(SamplePath {
            grid,
            interior,
            nodes,
            variant: other.variant,
            ..self.clone()
        })
    }

    /// A path assembled from explicit parts. `interior` is `cells x n`, row per cell;
    /// node jump times must be grid points.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        grid: Vec<f64>,
        n: usize,
        interior: Vec<f64>,
        node_jumps: Vec<(f64, usize, f64)>,
        levels: Vec<f64>,
        thresholds: Vec<Vec<f64>>,
        drift_p: Vec<Vec<f64>>,
        q_diag: Vec<Vec<f64>>,
    ) -> Result<SamplePath> {
        check_grid(&grid)?;
        let cells = grid.len() - 1;
        if interior.len() != cells * n {
            return Err(Error::DimensionMismatch {
                expected: cells * n,
                got: interior.len(),
            });
        }
        for v in [&thresholds, &drift_p, &q_diag] {
            if v.len() != levels.len() || v.iter().any(|r| r.len() != n) {
                return Err(Error::DimensionMismatch {
                    expected: levels.len() * n,
                    got: v.iter().map(|r| r.len()).sum(),
                });
            }
        }
        let mut nodes = Vec::with_capacity(node_jumps.len());
        for (time, coord, size) in node_jumps {
            let k = grid.iter().position(|&g| g == time).filter(|&k| k > 0).ok_or(Error::BreakpointNotOnGrid(time))?;
            if coord >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: coord + 1,
                });
            }
            nodes.push(NodeJump {
                time,
                coord,
                size,
                cell: k - 1,
            });
        }
        nodes.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.coord.cmp(&b.coord)));
        Ok(SamplePath {
            grid,
            n,
            interior,
            nodes,
            levels,
            kappa: thresholds,
            drift_p,
            q: q_diag,
            provenance: Provenance {
                master_seed: 0,
                path_index: 0,
            },
            variant: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylnoise::{decompose, ClosedFormFamily, DecayRule, FamilyKind};

    fn ladder(levels: &[f64]) -> Vec<TruncationDecomposition> {
        let sigma = DecayRule::power(1.0, 1.0).unwrap();
        let l = DiagonalCylindricalLevy::from_family(
            ClosedFormFamily {
                kind: FamilyKind::SymmetricStable,
                alpha: 1.2,
                sigma: sigma.clone(),
            },
            DecayRule::constant(0.1).unwrap(),
        )
        .unwrap();
        let c = WeightSequence::stable_compensating(&sigma, 1.2).unwrap();
        levels.iter().map(|&k| decompose(&l, &c, k, false).unwrap()).collect()
    }

    #[test]
    fn grids() {
        assert_eq!(uniform_grid(1.0, 4).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(refine_grid(&[0.0, 1.0], &[0.5, 0.5, 1.0]).unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(refine_grid(&[0.0, 1.0], &[1.5]).is_err());
        assert!(uniform_grid(1.0, 0).is_err());
    }

    #[test]
    fn same_seed_same_path_and_nodes_on_grid() {
        let s = PathSampler::new(&ladder(&[0.5, 2.0]), 4, uniform_grid(1.0, 16).unwrap(), SamplerConfig::default()).unwrap();
        let a = s.sample(7, 3).unwrap();
        assert_eq!(a, s.sample(7, 3).unwrap());
        assert_ne!(a, s.sample(7, 4).unwrap());
        for x in a.node_jumps() {
            assert_eq!(a.grid()[x.cell + 1], x.time);
        }
        assert!(s.cutoffs().iter().all(|&e| e > 0.0));
    }

    #[test]
    fn parts_reconstruct_total() {
        let s = PathSampler::new(&ladder(&[0.3, 1.0]), 3, uniform_grid(2.0, 10).unwrap(), SamplerConfig::default()).unwrap();
        for i in 0..20 {
            let p = s.sample(1, i).unwrap();
            for level in 0..2 {
                let total = p.increments(Part::Total, level);
                let parts = [Part::Drift, Part::Martingale, Part::Residual].map(|q| p.increments(q, level));
                for (c, want) in total.data.iter().enumerate() {
                    let got = parts[0].data[c] + parts[1].data[c] + parts[2].data[c];
                    assert!((got - want).abs() <= 8.0 * f64::EPSILON * (1.0 + want.abs()));
                }
            }
        }
    }

    #[test]
    fn finite_measures_are_simulated_without_gaussian_substitute() {
        let law = crate::levy1d::TabulatedLaw::new(vec![0.0, 1.0], vec![-2.0, 2.0]).unwrap();
        let l = DiagonalCylindricalLevy::finite_activity(DecayRule::constant(3.0).unwrap(), law, DecayRule::zero());
        let c = WeightSequence::constant(1.0).unwrap();
        let d = decompose(&l, &c, 1.0, true).unwrap();
        let s = PathSampler::new(&[d], 2, uniform_grid(1.0, 4).unwrap(), SamplerConfig::default()).unwrap();
        assert_eq!(s.cutoffs(), vec![0.0, 0.0]);
        assert_eq!(s.jump_rates(), vec![3.0, 3.0]);
    }

    #[test]
    fn splice_keeps_prefix() {
        let s = PathSampler::new(&ladder(&[1.0]), 2, uniform_grid(1.0, 8).unwrap(), SamplerConfig::default()).unwrap();
        let a = s.sample(2, 0).unwrap();
        let b = s.sample_variant(2, 0, 1).unwrap();
        let c = a.splice(&b, 0.5).unwrap();
        let (ia, ic) = (a.increments(Part::Total, 0), c.increments(Part::Total, 0));
        let cut = a.grid().iter().position(|&g| g == 0.5).unwrap();
        assert_eq!(ia.data[..cut * 2], ic.data[..cut * 2]);
        assert_eq!(*c.grid().last().unwrap(), 1.0);
        assert!(c.node_jumps().iter().all(|x| c.grid()[x.cell + 1] == x.time));
    }
}
