//! Series checks with a ternary verdict.
//!
//! Partial sums are always computed from the component measures. When the
//! model has a closed-form family, the terms are (bounded by) a monomial
//! rule, which certifies convergence with an explicit tail bound or
//! divergence analytically. Otherwise only the numerical ceiling rule can
//! decide, and only towards divergence.

use serde::Serialize;

use super::process::{DiagonalCylindricalLevy, TermRule};
use super::rules::{SquareSummable, WeightSequence};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictStatus {
    Converges,
    Diverges,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceVerdict {
    pub status: VerdictStatus,
    pub partial_sum: f64,
    pub terms_used: usize,
    pub tail_bound: Option<f64>,
    pub reason: String,
}

/// Numerical divergence rule for sums of nonnegative terms.
///
/// Diverges when `S_N >= growth_factor * S_{N/10}` or `S_N > ceiling`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct DivergenceRule {
    pub growth_factor: f64,
    pub ceiling: f64,
}

impl Default for DivergenceRule {
    fn default() -> Self {
        Self {
            growth_factor: 1e6,
            ceiling: 1e12,
        }
    }
}

fn neumaier(terms: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut comp) = (0.0f64, 0.0f64);
    for t in terms {
        let u = s + t;
        comp += if s.abs() >= t.abs() { (s - u) + t } else { (t - u) + s };
        s = u;
    }
    s + comp
}

fn eval_terms(n: usize, term: &dyn Fn(usize) -> Result<f64>) -> Result<Vec<f64>> {
    (1..=n).map(term).collect()
}

/// Verdict on `sum_{j>=1} t_j` from the first `n` terms, `t_j >= 0`.
pub fn series_verdict(
    n: usize,
    term: &dyn Fn(usize) -> Result<f64>,
    rule: Option<&TermRule>,
    div: DivergenceRule,
) -> Result<ConvergenceVerdict> {
    if n == 0 {
        return Err(Error::Domain("need at least one term".into()));
    }
    let terms = eval_terms(n, term)?;
    let partial = neumaier(terms.iter().copied());
    let mut v = ConvergenceVerdict {
        status: VerdictStatus::Inconclusive,
        partial_sum: partial,
        terms_used: n,
        tail_bound: None,
        reason: String::new(),
    };
    if !partial.is_finite() {
        v.status = VerdictStatus::Diverges;
        v.reason = "non-finite partial sum".into();
        return Ok(v);
    }
    if let Some(tr) = rule {
        match tr.rule.summable() {
            Some(true) => {
                v.status = VerdictStatus::Converges;
                v.tail_bound = tr.rule.tail_sum_bound(n);
                v.reason = format!("terms bounded by summable {:?}", tr.rule);
                return Ok(v);
            }
            Some(false) if tr.exact => {
                v.status = VerdictStatus::Diverges;
                v.reason = format!("terms equal non-summable {:?}", tr.rule);
                return Ok(v);
            }
            _ => {}
        }
    }
    let head = neumaier(terms[..n / 10].iter().copied());
    if partial > div.ceiling {
        v.status = VerdictStatus::Diverges;
        v.reason = format!("partial sum {partial} exceeds ceiling {}", div.ceiling);
    } else if head > 0.0 && partial >= div.growth_factor * head {
        v.status = VerdictStatus::Diverges;
        v.reason = format!("partial sum grew by {} over the last decade", partial / head);
    } else {
        v.reason = "no certified tail bound".into();
    }
    Ok(v)
}

/// Verdict on `sup_j t_j < inf`; `partial_sum` holds `max_{j<=n} t_j`.
pub fn sup_verdict(
    n: usize,
    term: &dyn Fn(usize) -> Result<f64>,
    rule: Option<&TermRule>,
) -> Result<ConvergenceVerdict> {
    let terms = eval_terms(n, term)?;
    let max = terms.iter().copied().fold(0.0, f64::max);
    let mut v = ConvergenceVerdict {
        status: VerdictStatus::Inconclusive,
        partial_sum: max,
        terms_used: n,
        tail_bound: None,
        reason: "no certified bound beyond the evaluated terms".into(),
    };
    if !max.is_finite() {
        v.status = VerdictStatus::Diverges;
        v.reason = "non-finite term".into();
        return Ok(v);
    }
    if let Some(tr) = rule {
        match tr.rule.bounded() {
            Some(true) => {
                v.status = VerdictStatus::Converges;
                v.tail_bound = tr.rule.sup_tail_bound(n);
                v.reason = format!("terms bounded by bounded {:?}", tr.rule);
            }
            Some(false) if tr.exact => {
                v.status = VerdictStatus::Diverges;
                v.reason = format!("terms equal unbounded {:?}", tr.rule);
            }
            _ => {}
        }
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesReport {
    pub cond1: ConvergenceVerdict,
    pub cond2: ConvergenceVerdict,
    pub cond3: ConvergenceVerdict,
}

impl SeriesReport {
    pub fn overall(&self) -> VerdictStatus {
        combine([self.cond1.status, self.cond2.status, self.cond3.status])
    }
}

pub(crate) fn combine(s: impl IntoIterator<Item = VerdictStatus>) -> VerdictStatus {
    let mut out = VerdictStatus::Converges;
    for st in s {
        match st {
            VerdictStatus::Diverges => return VerdictStatus::Diverges,
            VerdictStatus::Inconclusive => out = VerdictStatus::Inconclusive,
            VerdictStatus::Converges => {}
        }
    }
    out
}

/// The three conditions under which the series defines a cylindrical Levy
/// process, tested against one square-summable sequence `(alpha_j)`:
/// `sum 1_{|a_j|<=1} |a_j| |b_j + int_{1<|x|<=1/|a_j|} x rho_j| < inf`,
/// `(s_j)` bounded, and `sum int (|a_j x|^2 ∧ 1) rho_j(dx) < inf`.
pub fn check_series_conditions(
    l: &DiagonalCylindricalLevy,
    alpha_seq: &SquareSummable,
    n: usize,
    div: DivergenceRule,
) -> Result<SeriesReport> {
    if n == 0 {
        return Err(Error::Domain("N must be positive".into()));
    }
    let a = alpha_seq.rule();
    let first = |j: usize| -> Result<f64> {
        let aj = a.value(j).abs();
        if aj == 0.0 || aj > 1.0 {
            return Ok(0.0);
        }
        let t = l.component(j)?;
        Ok(aj * (t.drift_b + t.measure.truncated_first_moment(1.0 / aj)?).abs())
    };
    let third = |j: usize| -> Result<f64> {
        let aj = a.value(j).abs();
        if aj == 0.0 {
            return Ok(0.0);
        }
        let t = l.component(j)?;
        let y = 1.0 / aj;
        Ok(aj * aj * t.measure.truncated_second_moment(y)? + t.measure.tail_mass(y)?)
    };
    let gauss = |j: usize| -> Result<f64> { Ok(l.component(j)?.gaussian_s) };
    let (r1, r3) = match l.closed_form() {
        Some(f) => {
            let (r1, r3) = f.series_rules(a);
            (Some(r1), Some(r3))
        }
        None => (None, None),
    };
    let r2 = l.gaussian_rule().map(|g| TermRule {
        rule: g.clone(),
        exact: true,
    });
    Ok(SeriesReport {
        cond1: series_verdict(n, &first, r1.as_ref(), div)?,
        cond2: sup_verdict(n, &gauss, r2.as_ref())?,
        cond3: series_verdict(n, &third, r3.as_ref(), div)?,
    })
}

/// `m^c(k) = sum_j rho_j(|x| > k / c_j)`, from the first `n` terms.
pub fn m_c(
    l: &DiagonalCylindricalLevy,
    c: &WeightSequence,
    k: f64,
    n: usize,
    div: DivergenceRule,
) -> Result<(f64, ConvergenceVerdict)> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("k must be positive, got {k}")));
    }
    let term = |j: usize| -> Result<f64> { l.component(j)?.measure.tail_mass(k / c.value(j)) };
    let rule = l.closed_form().map(|f| f.tail_mass_rule(c.rule(), k));
    let v = series_verdict(representable_terms(c, k, n), &term, rule.as_ref(), div)?;
    Ok((v.partial_sum, v))
}

/// Terms `j <= n` before `k / c_j` overflows. Past that point the terms are
/// not representable; the closed-form rules carry the verdict for the rest.
pub(crate) fn representable_terms(c: &WeightSequence, k: f64, n: usize) -> usize {
    (1..=n).find(|&j| !(k / c.value(j)).is_finite()).map_or(n, |j| (j - 1).max(1))
}

/// `lambda_n^k = sum_{j<=n} rho_j(|x| > k / c_j)`, summed in index order.
pub fn lambda_n(l: &DiagonalCylindricalLevy, c: &WeightSequence, k: f64, n: usize) -> Result<f64> {
    let mut s = 0.0;
    for j in 1..=n {
        s += l.component(j)?.measure.tail_mass(k / c.value(j))?;
    }
    Ok(s)
}

/// `p_j^{c,k}(1) = b_j + int x (1_{|x|<=k/c_j} - 1_{|x|<=1}) rho_j(dx)`.
pub(crate) fn drift_coordinate(l: &DiagonalCylindricalLevy, c: &WeightSequence, k: f64, j: usize) -> Result<f64> {
    let t = l.component(j)?;
    Ok(t.drift_b + t.measure.signed_annulus_first_moment(1.0, k / c.value(j)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct A6Report {
    pub k_list: Vec<f64>,
    /// `(p_j^{c,k}(1))_j` in `l^2`, per level.
    pub a: Vec<ConvergenceVerdict>,
    /// `sup_j int_{|x|<=k/c_j} x^2 rho_j(dx) < inf`, per level.
    pub b: Vec<ConvergenceVerdict>,
    /// `m^c(k)` per level.
    pub c: Vec<ConvergenceVerdict>,
    /// Whether `m^c(k) -> 0` as `k -> inf`.
    pub c_limit: VerdictStatus,
    pub c_limit_reason: String,
}

impl A6Report {
    pub fn part_a(&self) -> VerdictStatus {
        combine(self.a.iter().map(|v| v.status))
    }

    pub fn part_b(&self) -> VerdictStatus {
        combine(self.b.iter().map(|v| v.status))
    }

    pub fn part_c(&self) -> VerdictStatus {
        combine(self.c.iter().map(|v| v.status).chain([self.c_limit]))
    }

    pub fn overall(&self) -> VerdictStatus {
        combine([self.part_a(), self.part_b(), self.part_c()])
    }

    /// One line per failing or undecided part.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        let parts = [("A6(a)", &self.a), ("A6(b)", &self.b), ("A6(c)", &self.c)];
        for (name, vs) in parts {
            for (k, v) in self.k_list.iter().zip(vs.iter()) {
                if v.status != VerdictStatus::Converges {
                    out.push(format!("{name} k={k}: {:?} ({})", v.status, v.reason));
                }
            }
        }
        if self.c_limit != VerdictStatus::Converges {
            out.push(format!("A6(c) limit: {:?} ({})", self.c_limit, self.c_limit_reason));
        }
        out
    }
}

pub const DEFAULT_K_LIST: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];

pub fn check_assumption_a6(
    l: &DiagonalCylindricalLevy,
    c: &WeightSequence,
    k_list: &[f64],
    n: usize,
    div: DivergenceRule,
) -> Result<A6Report> {
    if k_list.is_empty() {
        return Err(Error::Domain("k_list must be nonempty".into()));
    }
    if k_list.iter().any(|&k| !(k > 0.0 && k.is_finite())) || k_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("k_list must be positive and strictly ascending".into()));
    }
    let fam = l.closed_form();
    let n = representable_terms(c, *k_list.last().unwrap(), n);
    let mut report = A6Report {
        k_list: k_list.to_vec(),
        a: Vec::new(),
        b: Vec::new(),
        c: Vec::new(),
        c_limit: VerdictStatus::Inconclusive,
        c_limit_reason: String::new(),
    };
    for &k in k_list {
        let drift_sq = |j: usize| -> Result<f64> { Ok(drift_coordinate(l, c, k, j)?.powi(2)) };
        let rule_a = fam.map(|f| {
            let d = f.drift_rule(c.rule(), k);
            TermRule {
                rule: d.rule.abs_pow(2.0),
                exact: d.exact,
            }
        });
        report.a.push(series_verdict(n, &drift_sq, rule_a.as_ref(), div)?);

        let second =
            |j: usize| -> Result<f64> { l.component(j)?.measure.truncated_second_moment(k / c.value(j)) };
        let rule_b = fam.map(|f| f.second_moment_rule(c.rule(), k));
        report.b.push(sup_verdict(n, &second, rule_b.as_ref())?);

        let (_, v) = m_c(l, c, k, n, div)?;
        report.c.push(v);
    }
    let all_converge = report.c.iter().all(|v| v.status == VerdictStatus::Converges);
    let values: Vec<f64> = report.c.iter().map(|v| v.partial_sum).collect();
    if report.c.iter().any(|v| v.status == VerdictStatus::Diverges) {
        report.c_limit = VerdictStatus::Diverges;
        report.c_limit_reason = "m^c(k) is infinite".into();
    } else if values.iter().all(|&v| v == 0.0) && fam.is_some_and(|f| f.sigma.is_zero()) {
        report.c_limit = VerdictStatus::Converges;
        report.c_limit_reason = "m^c vanishes identically".into();
    } else if all_converge && fam.is_some() {
        // the closed-form tail terms are homogeneous: m^c(k) <= k^{-alpha} m^c(1)
        report.c_limit = VerdictStatus::Converges;
        report.c_limit_reason = "m^c(k) bounded by C k^-alpha".into();
    } else if values.windows(2).all(|w| w[1] <= w[0]) {
        report.c_limit_reason = "m^c nonincreasing on k_list, limit not certified".into();
    } else {
        report.c_limit_reason = "m^c not monotone on k_list".into();
    }
    Ok(report)
}
