use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::path::{check_grid, Increments, Part, SamplePath};
use crate::error::{Error, Result};

/// The noise seen by an adapted integrand on `(s_i, s_{i+1}]`: all cells of the
/// integrator that end at or before `s_i`.
#[derive(Debug, Clone, Copy)]
pub struct PathPrefix<'a> {
    /// Grid points `t_0, ..., t_m` with `t_m = s_i`.
    pub grid: &'a [f64],
    /// `m x n` increments, row per cell.
    pub increments: &'a [f64],
    pub n: usize,
}

impl PathPrefix<'_> {
    pub fn time(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// `L(t_m) e_j`, cells summed in order.
    pub fn value(&self, j: usize) -> f64 {
        let mut s = 0.0;
        for row in self.increments.chunks(self.n) {
            s += row[j];
        }
        s
    }
}

pub type AdaptedValue = Arc<dyn Fn(usize, &PathPrefix<'_>) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
enum Values {
    Fixed(Vec<DMatrix<f64>>),
    Adapted(AdaptedValue),
}

/// `Psi = sum_i Phi_i 1_{(s_i, s_{i+1}]}` with `d x n` matrices `Phi_i`.
///
/// Adapted values are produced by a callback on interval index and
/// [`PathPrefix`]; it never sees the noise after `s_i`, so predictability holds
/// by construction.
#[derive(Clone)]
pub struct SimpleProcess {
    breakpoints: Vec<f64>,
    d: usize,
    n: usize,
    values: Values,
}

impl std::fmt::Debug for SimpleProcess {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimpleProcess")
            .field("breakpoints", &self.breakpoints)
            .field("d", &self.d)
            .field("n", &self.n)
            .field("adapted", &matches!(self.values, Values::Adapted(_)))
            .finish()
    }
}

impl SimpleProcess {
    pub fn new(breakpoints: Vec<f64>, values: Vec<DMatrix<f64>>) -> Result<Self> {
        check_grid(&breakpoints)?;
        if values.len() != breakpoints.len() - 1 {
            return Err(Error::DimensionMismatch {
                expected: breakpoints.len() - 1,
                got: values.len(),
            });
        }
        let (d, n) = values[0].shape();
        if let Some(bad) = values.iter().find(|m| m.shape() != (d, n)) {
            return Err(Error::DimensionMismatch {
                expected: d * n,
                got: bad.len(),
            });
        }
        if values.iter().any(|m| m.iter().any(|x| !x.is_finite())) {
            return Err(Error::Domain("integrand values must be finite".into()));
        }
        Ok(Self {
            breakpoints,
            d,
            n,
            values: Values::Fixed(values),
        })
    }

    /// One matrix on `(0, T]`.
    pub fn constant(horizon: f64, value: DMatrix<f64>) -> Result<Self> {
        Self::new(vec![0.0, horizon], vec![value])
    }

    pub fn zero(horizon: f64, d: usize, n: usize) -> Result<Self> {
        Self::constant(horizon, DMatrix::zeros(d, n))
    }

    pub fn adapted(breakpoints: Vec<f64>, d: usize, n: usize, value: AdaptedValue) -> Result<Self> {
        check_grid(&breakpoints)?;
        Ok(Self {
            breakpoints,
            d,
            n,
            values: Values::Adapted(value),
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn horizon(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// `(d, n)`: `Phi_i` maps `R^n -> R^d`.
    pub fn shape(&self) -> (usize, usize) {
        (self.d, self.n)
    }

    pub fn is_adapted(&self) -> bool {
        matches!(self.values, Values::Adapted(_))
    }

    /// Fixed values, if not adapted.
    pub fn values(&self) -> Option<&[DMatrix<f64>]> {
        match &self.values {
            Values::Fixed(v) => Some(v),
            Values::Adapted(_) => None,
        }
    }

    /// The same integrand with `s` added to the breakpoints.
    pub fn split_at(&self, s: f64) -> Result<Self> {
        let v = self.values().ok_or_else(|| Error::Domain("realize the integrand first".into()))?;
        if !(s > 0.0 && s < self.horizon()) || self.breakpoints.contains(&s) {
            return Ok(self.clone());
        }
        let i = self.breakpoints.partition_point(|&b| b < s);
        let mut bp = self.breakpoints.clone();
        bp.insert(i, s);
        let mut values = v.to_vec();
        values.insert(i, v[i - 1].clone());
        Self::new(bp, values)
    }

    /// `X Psi` on `(s, T]` and zero before.
    pub fn scaled_after(&self, s: f64, x: f64) -> Result<Self> {
        let psi = self.split_at(s)?;
        let i0 = psi.breakpoints.partition_point(|&b| b < s);
        let values = psi
            .values()
            .unwrap()
            .iter()
            .enumerate()
            .map(|(i, m)| if i < i0 { DMatrix::zeros(self.d, self.n) } else { m * x })
            .collect();
        Self::new(psi.breakpoints, values)
    }

    /// Evaluate adapted values along one integrator path.
    pub fn realize(&self, inc: &Increments) -> Result<SimpleProcess> {
        let f = match &self.values {
            Values::Fixed(_) => return Ok(self.clone()),
            Values::Adapted(f) => f,
        };
        if inc.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: inc.n,
            });
        }
        let mut values = Vec::with_capacity(self.breakpoints.len() - 1);
        for (i, &s) in self.breakpoints[..self.breakpoints.len() - 1].iter().enumerate() {
            let m = grid_index(&inc.grid, s)?;
            let prefix = PathPrefix {
                grid: &inc.grid[..=m],
                increments: &inc.data[..m * inc.n],
                n: inc.n,
            };
            let v = f(i, &prefix);
            if v.shape() != (self.d, self.n) {
                return Err(Error::DimensionMismatch {
                    expected: self.d * self.n,
                    got: v.len(),
                });
            }
            values.push(v);
        }
        SimpleProcess::new(self.breakpoints.clone(), values)
    }
}

fn grid_index(grid: &[f64], s: f64) -> Result<usize> {
    grid.iter().position(|&g| g == s).ok_or(Error::BreakpointNotOnGrid(s))
}

/// `sum_j Phi[r, j] dL_j` for each row `r`, summed in ascending `j`.
pub fn radonified_increment(phi: &DMatrix<f64>, dl: &[f64]) -> Result<DVector<f64>> {
    if phi.ncols() != dl.len() {
        return Err(Error::DimensionMismatch {
            expected: phi.ncols(),
            got: dl.len(),
        });
    }
    let mut out = DVector::zeros(phi.nrows());
    for r in 0..phi.nrows() {
        let mut s = 0.0;
        for (j, x) in dl.iter().enumerate() {
            s += phi[(r, j)] * x;
        }
        out[r] = s;
    }
    Ok(out)
}

/// `I(Psi)` on the integrator grid with the running angle bracket.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralPath {
    pub times: Vec<f64>,
    /// `I(Psi)(t_m)`, one vector per grid point.
    pub values: Vec<DVector<f64>>,
    pub bracket: Vec<f64>,
}

impl IntegralPath {
    pub fn terminal(&self) -> &DVector<f64> {
        self.values.last().unwrap()
    }

    /// Columns `t, value_1..value_d, bracket`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let d = self.values.first().map_or(0, |v| v.len());
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|i| format!("value_{i}")));
        header.push("bracket".into());
        out.write_record(&header).map_err(csv_error)?;
        for ((t, v), b) in self.times.iter().zip(&self.values).zip(&self.bracket) {
            let mut row = vec![t.to_string()];
            row.extend(v.iter().map(|x| x.to_string()));
            row.push(b.to_string());
            out.write_record(&row).map_err(csv_error)?;
        }
        out.flush().map_err(|e| Error::Domain(e.to_string()))
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    Error::Domain(format!("csv: {e}"))
}

/// Index of the interval `(s_i, s_{i+1}]` holding the cell `(a, b]`, if any.
fn interval_of(bp: &[f64], a: f64, b: f64) -> Option<usize> {
    let i = bp.partition_point(|&s| s <= a);
    (i >= 1 && i < bp.len() && b <= bp[i]).then(|| i - 1)
}

/// `int_0^t Psi dL` at every grid point of `inc`, against the given increments.
///
/// The integrand is zero after its last breakpoint. Breakpoints must be grid
/// points.
pub fn integrate_increments(psi: &SimpleProcess, inc: &Increments) -> Result<IntegralPath> {
    if inc.n != psi.n {
        return Err(Error::DimensionMismatch {
            expected: psi.n,
            got: inc.n,
        });
    }
    for &s in psi.breakpoints() {
        if s <= *inc.grid.last().unwrap() {
            grid_index(&inc.grid, s)?;
        } else {
            return Err(Error::BreakpointNotOnGrid(s));
        }
    }
    let psi = psi.realize(inc)?;
    let values = psi.values().unwrap();
    let q = &inc.q_diag;
    let mut acc = DVector::zeros(psi.d);
    let mut out = IntegralPath {
        times: inc.grid.clone(),
        values: vec![acc.clone()],
        bracket: vec![0.0],
    };
    for c in 0..inc.cells() {
        let (a, b) = (inc.grid[c], inc.grid[c + 1]);
        if let Some(i) = interval_of(psi.breakpoints(), a, b) {
            acc += radonified_increment(&values[i], inc.cell(c))?;
        }
        out.values.push(acc.clone());
        out.bracket.push(angle_bracket(&psi, q, b.min(psi.horizon()))?);
    }
    Ok(out)
}

/// `I(Psi)` against `L^c_k = P^c_k + M^c_k` at ladder position `level`.
///
/// The residual large jumps never enter the integral.
pub fn integrate_simple(psi: &SimpleProcess, path: &SamplePath, level: usize) -> Result<IntegralPath> {
    integrate_increments(psi, &path.increments(Part::Truncated, level))
}

fn bracket_args<'a>(psi: &'a SimpleProcess, q: &[f64], t: f64) -> Result<&'a [DMatrix<f64>]> {
    let values = psi
        .values()
        .ok_or_else(|| Error::Domain("angle bracket of an adapted integrand needs a realized path".into()))?;
    if q.len() != psi.n {
        return Err(Error::DimensionMismatch {
            expected: psi.n,
            got: q.len(),
        });
    }
    if !(0.0..=psi.horizon()).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0, {}]", psi.horizon())));
    }
    Ok(values)
}

fn overlap(bp: &[f64], i: usize, t: f64) -> f64 {
    (t.min(bp[i + 1]) - bp[i]).max(0.0)
}

/// `int_0^t ||Psi Q^{1/2}||_HS^2 ds` for diagonal `Q`.
pub fn angle_bracket(psi: &SimpleProcess, q_diag: &[f64], t: f64) -> Result<f64> {
    let values = bracket_args(psi, q_diag, t)?;
    let bp = psi.breakpoints();
    let mut total = 0.0;
    // same summation order as the diagonal of operator_bracket
    for r in 0..psi.d {
        let mut s = 0.0;
        for (i, phi) in values.iter().enumerate() {
            let mut h = 0.0;
            for (j, q) in q_diag.iter().enumerate() {
                h += (phi[(r, j)] * q) * phi[(r, j)];
            }
            s += overlap(bp, i, t) * h;
        }
        total += s;
    }
    Ok(total)
}

/// `int_0^t Psi Q Psi^* ds`, a `d x d` matrix; its trace is [`angle_bracket`].
pub fn operator_bracket(psi: &SimpleProcess, q_diag: &[f64], t: f64) -> Result<DMatrix<f64>> {
    let values = bracket_args(psi, q_diag, t)?;
    let bp = psi.breakpoints();
    let mut out = DMatrix::zeros(psi.d, psi.d);
    // upper triangle, mirrored so the result is exactly symmetric
    for r in 0..psi.d {
        for u in r..psi.d {
            let mut s = 0.0;
            for (i, phi) in values.iter().enumerate() {
                let mut h = 0.0;
                for (j, q) in q_diag.iter().enumerate() {
                    h += (phi[(r, j)] * q) * phi[(u, j)];
                }
                s += overlap(bp, i, t) * h;
            }
            out[(r, u)] = s;
            out[(u, r)] = s;
        }
    }
    Ok(out)
}

/// Plain ascending sum of the diagonal.
pub fn trace(m: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for r in 0..m.nrows().min(m.ncols()) {
        s += m[(r, r)];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inc(grid: Vec<f64>, n: usize, data: Vec<f64>) -> Increments {
        Increments {
            grid,
            n,
            data,
            q_diag: vec![1.0; n],
        }
    }

    #[test]
    fn radonification_examples() {
        let v = [0.3, -2.0, 5.0];
        assert_eq!(radonified_increment(&DMatrix::identity(3, 3), &v).unwrap().as_slice(), &v);
        assert_eq!(radonified_increment(&DMatrix::zeros(2, 3), &v).unwrap().as_slice(), &[0.0, 0.0]);
        let phi = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        assert_eq!(radonified_increment(&phi, &[3.0, -1.0]).unwrap()[0], 1.0);
        assert!(radonified_increment(&phi, &[1.0]).is_err());
    }

    #[test]
    fn two_interval_integral_by_hand() {
        let i = inc(vec![0.0, 0.5, 1.0], 2, vec![1.0, 2.0, -3.0, 4.0]);
        let phi0 = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let phi1 = DMatrix::from_row_slice(1, 2, &[2.0, -1.0]);
        let psi = SimpleProcess::new(vec![0.0, 0.5, 1.0], vec![phi0, phi1]).unwrap();
        let p = integrate_increments(&psi, &i).unwrap();
        assert_eq!(p.values[1][0], 3.0);
        assert_eq!(p.values[2][0], 3.0 + (-6.0 - 4.0));
        assert_eq!(p.bracket, vec![0.0, 1.0, 3.5]);
    }

    #[test]
    fn identity_integrand_reproduces_the_path() {
        let data = vec![0.1, 0.2, -0.4, 1.5, 2.5, -0.5];
        let i = inc(vec![0.0, 1.0, 2.0, 3.0], 2, data);
        let psi = SimpleProcess::constant(3.0, DMatrix::identity(2, 2)).unwrap();
        let p = integrate_increments(&psi, &i).unwrap();
        for j in 0..2 {
            let cum = i.cumulative(j);
            for m in 0..4 {
                assert_eq!(p.values[m][j], cum[m]);
            }
        }
    }

    #[test]
    fn breakpoints_off_grid_are_rejected() {
        let i = inc(vec![0.0, 1.0], 1, vec![1.0]);
        let psi = SimpleProcess::new(vec![0.0, 0.3, 1.0], vec![DMatrix::zeros(1, 1); 2]).unwrap();
        assert!(matches!(integrate_increments(&psi, &i), Err(Error::BreakpointNotOnGrid(_))));
    }

    #[test]
    fn brackets_for_identity() {
        let psi = SimpleProcess::constant(2.0, DMatrix::identity(2, 2)).unwrap();
        let q = [0.5, 3.0];
        assert_eq!(angle_bracket(&psi, &q, 1.5).unwrap(), 1.5 * 3.5);
        let m = operator_bracket(&psi, &q, 1.5).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[0.75, 0.0, 0.0, 4.5]));
        assert!(angle_bracket(&psi, &q, 2.5).is_err());
        assert_eq!(angle_bracket(&SimpleProcess::zero(1.0, 2, 2).unwrap(), &q, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn adapted_values_see_only_the_prefix() {
        let i = inc(vec![0.0, 1.0, 2.0], 1, vec![5.0, 7.0]);
        let f: AdaptedValue = Arc::new(|i, p: &PathPrefix<'_>| {
            assert_eq!(p.increments.len(), i);
            DMatrix::from_element(1, 1, p.value(0))
        });
        let psi = SimpleProcess::adapted(vec![0.0, 1.0, 2.0], 1, 1, f).unwrap();
        let p = integrate_increments(&psi, &i).unwrap();
        assert_eq!(p.terminal()[0], 5.0 * 7.0);
    }

    #[test]
    fn csv_layout() {
        let i = inc(vec![0.0, 1.0], 1, vec![2.0]);
        let p = integrate_increments(&SimpleProcess::constant(1.0, DMatrix::identity(1, 1)).unwrap(), &i).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,value_1,bracket\n0,0,0\n1,2,1\n");
    }
}
