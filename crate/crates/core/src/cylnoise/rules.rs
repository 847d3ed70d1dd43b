//! Deterministic sequences `j -> x_j` (`j >= 1`) with analytic summability.
//!
//! A monomial rule `a j^{-p} r^j` covers p-series (`r = 1`), geometric
//! sequences (`p = 0`) and constants. Monomials are closed under products
//! and absolute powers, which is what the closed-form series terms of the
//! stable families need, and they carry certified tail bounds. Custom rules
//! are evaluated pointwise only.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone)]
pub enum DecayRule {
    Monomial { a: f64, p: f64, r: f64 },
    Custom {
        name: String,
        f: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for DecayRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Monomial { a, p, r } => write!(f, "{a} j^-{p} {r}^j"),
            Self::Custom { name, .. } => write!(f, "custom({name})"),
        }
    }
}

impl PartialEq for DecayRule {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Monomial { a, p, r }, Self::Monomial { a: b, p: q, r: s }) => {
                a == b && p == q && r == s
            }
            (Self::Custom { f, .. }, Self::Custom { f: g, .. }) => Arc::ptr_eq(f, g),
            _ => false,
        }
    }
}

impl DecayRule {
    fn monomial(a: f64, p: f64, r: f64) -> Result<Self> {
        if !(a.is_finite() && p.is_finite() && r.is_finite()) {
            return Err(Error::InvalidModel("decay rule parameters must be finite".into()));
        }
        if !(r > 0.0) && a != 0.0 {
            return Err(Error::InvalidModel(format!("geometric ratio must be positive, got {r}")));
        }
        if a == 0.0 {
            return Ok(Self::zero());
        }
        Ok(Self::Monomial { a, p, r })
    }

    /// `a j^{-p}`
    pub fn power(a: f64, p: f64) -> Result<Self> {
        Self::monomial(a, p, 1.0)
    }

    /// `a r^j`
    pub fn geometric(a: f64, r: f64) -> Result<Self> {
        Self::monomial(a, 0.0, r)
    }

    pub fn constant(a: f64) -> Result<Self> {
        Self::monomial(a, 0.0, 1.0)
    }

    pub fn zero() -> Self {
        Self::Monomial {
            a: 0.0,
            p: 0.0,
            r: 1.0,
        }
    }

    pub fn custom(name: impl Into<String>, f: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn value(&self, j: usize) -> f64 {
        match self {
            Self::Monomial { a, p, r } => {
                if *a == 0.0 {
                    return 0.0;
                }
                let jf = j as f64;
                let pw = if *p == 0.0 { 1.0 } else { jf.powf(-p) };
                let geo = if *r == 1.0 {
                    1.0
                } else if j <= i32::MAX as usize {
                    r.powi(j as i32)
                } else {
                    r.powf(jf)
                };
                a * pw * geo
            }
            Self::Custom { f, .. } => f(j),
        }
    }

    pub fn as_monomial(&self) -> Option<(f64, f64, f64)> {
        match *self {
            Self::Monomial { a, p, r } => Some((a, p, r)),
            Self::Custom { .. } => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Monomial { a, .. } if *a == 0.0)
    }

    /// `j -> |x_j|^e`.
    pub fn abs_pow(&self, e: f64) -> Self {
        match self {
            Self::Monomial { a, p, r } => {
                if *a == 0.0 {
                    return if e == 0.0 {
                        Self::Monomial {
                            a: 1.0,
                            p: 0.0,
                            r: 1.0,
                        }
                    } else {
                        Self::zero()
                    };
                }
                Self::Monomial {
                    a: a.abs().powf(e),
                    p: p * e,
                    r: r.powf(e),
                }
            }
            Self::Custom { name, f } => {
                let f = f.clone();
                Self::custom(format!("|{name}|^{e}"), move |j| f(j).abs().powf(e))
            }
        }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        match (self, other) {
            (Self::Monomial { a, p, r }, Self::Monomial { a: b, p: q, r: s }) => {
                if *a == 0.0 || *b == 0.0 {
                    return Self::zero();
                }
                Self::Monomial {
                    a: a * b,
                    p: p + q,
                    r: r * s,
                }
            }
            _ => {
                let (x, y) = (self.clone(), other.clone());
                Self::custom(format!("{self:?} * {other:?}"), move |j| x.value(j) * y.value(j))
            }
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        match self {
            Self::Monomial { .. } if k == 0.0 => Self::zero(),
            Self::Monomial { a, p, r } => Self::Monomial { a: a * k, p: *p, r: *r },
            Self::Custom { .. } => {
                let x = self.clone();
                Self::custom(format!("{k} * {self:?}"), move |j| k * x.value(j))
            }
        }
    }

    /// Whether `sum_j |x_j|` converges; `None` for custom rules.
    pub fn summable(&self) -> Option<bool> {
        let (a, p, r) = self.as_monomial()?;
        Some(a == 0.0 || r < 1.0 || (r == 1.0 && p > 1.0))
    }

    /// Whether `sup_j |x_j|` is finite; `None` for custom rules.
    pub fn bounded(&self) -> Option<bool> {
        let (a, p, r) = self.as_monomial()?;
        Some(a == 0.0 || r < 1.0 || (r == 1.0 && p >= 0.0))
    }

    /// Upper bound for `sup_{j > n} |t_{j+1} / t_j|` when it is below 1 or the
    /// terms are nonincreasing beyond `n`.
    fn ratio_bound(p: f64, r: f64, n: usize) -> f64 {
        if p >= 0.0 {
            r
        } else {
            let j = (n + 1) as f64;
            r * ((j + 1.0) / j).powf(-p)
        }
    }

    /// Certified bound on `sum_{j > n} |x_j|`.
    pub fn tail_sum_bound(&self, n: usize) -> Option<f64> {
        let (a, p, r) = self.as_monomial()?;
        let a = a.abs();
        if a == 0.0 {
            return Some(0.0);
        }
        if r == 1.0 {
            if p > 1.0 {
                // integral test: sum_{j>n} j^-p <= int_n^inf x^-p dx
                let nf = (n.max(1)) as f64;
                let bound = a * nf.powf(1.0 - p) / (p - 1.0);
                // n = 0: sum_{j>=1} j^-p <= 1 + 1/(p-1)
                return Some(if n == 0 { a + bound } else { bound });
            }
            return None;
        }
        if r > 1.0 {
            return None;
        }
        // sum explicitly until the ratio bound is safely below 1
        let mut head = 0.0;
        let mut m = n;
        while Self::ratio_bound(p, r, m) > 0.5 * (1.0 + r) {
            if m > n + 1_000_000 {
                return None;
            }
            m += 1;
            head += self.value(m).abs();
        }
        let q = Self::ratio_bound(p, r, m);
        Some(head + self.value(m + 1).abs() / (1.0 - q))
    }

    /// Certified bound on `sup_{j > n} |x_j|`.
    pub fn sup_tail_bound(&self, n: usize) -> Option<f64> {
        let (a, p, r) = self.as_monomial()?;
        if a == 0.0 {
            return Some(0.0);
        }
        let nonincreasing = (p >= 0.0 && r <= 1.0) || (r < 1.0 && Self::ratio_bound(p, r, n) <= 1.0);
        nonincreasing.then(|| self.value(n + 1).abs())
    }

    /// Certified `sup_j |x_j|` for bounded monomials.
    pub fn sup(&self) -> Option<f64> {
        let (_, p, r) = self.as_monomial()?;
        if !self.bounded()? {
            return None;
        }
        // x^{-p} r^x peaks at |p| / ln(1/r) when p < 0 and r < 1
        let peak = if p < 0.0 && r < 1.0 {
            (-p / (1.0 / r).ln()).ceil() as usize
        } else {
            1
        };
        let head = (1..=peak + 1).map(|j| self.value(j).abs()).fold(0.0, f64::max);
        Some(head.max(self.sup_tail_bound(peak + 1)?))
    }
}

/// Serialized form of a monomial rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSpec {
    #[serde(rename = "type")]
    pub kind: RuleKind,
    pub a: f64,
    #[serde(default)]
    pub p_or_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    Power,
    Geometric,
    Constant,
}

impl RuleSpec {
    pub fn build(&self) -> Result<DecayRule> {
        match self.kind {
            RuleKind::Power => DecayRule::power(self.a, self.p_or_r),
            RuleKind::Geometric => DecayRule::geometric(self.a, self.p_or_r),
            RuleKind::Constant => DecayRule::constant(self.a),
        }
    }
}

/// A sequence `(x_j)` certified (or at least not refuted) to lie in `l^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareSummable(DecayRule);

impl SquareSummable {
    /// Monomials must be analytically square summable; custom rules are
    /// accepted unchecked.
    pub fn new(rule: DecayRule) -> Result<Self> {
        if rule.abs_pow(2.0).summable() == Some(false) {
            return Err(Error::InvalidModel(format!("{rule:?} is not square summable")));
        }
        Ok(Self(rule))
    }

    pub fn rule(&self) -> &DecayRule {
        &self.0
    }
}

/// The truncation weights `c = (c_j)`, positive and bounded.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    rule: DecayRule,
    sup_bound: f64,
}

impl WeightSequence {
    /// Monomial weights get their supremum certified analytically.
    pub fn new(rule: DecayRule) -> Result<Self> {
        let bad = |m: String| Error::InvalidModel(format!("weights: {m}"));
        let (a, ..) = rule
            .as_monomial()
            .ok_or_else(|| bad("custom rules need an explicit sup bound".into()))?;
        if !(a > 0.0) {
            return Err(bad(format!("c_j must be positive, got scale {a}")));
        }
        let sup_bound = rule.sup().ok_or_else(|| bad(format!("{rule:?} is unbounded")))?;
        Ok(Self { rule, sup_bound })
    }

    /// Custom weights with a caller-supplied bound, spot-checked on `j <= 10^4`.
    pub fn with_bound(rule: DecayRule, sup_bound: f64) -> Result<Self> {
        for j in 1..=10_000 {
            let c = rule.value(j);
            if !(c > 0.0 && c <= sup_bound) {
                return Err(Error::InvalidModel(format!(
                    "weights: c_{j} = {c} violates 0 < c_j <= {sup_bound}"
                )));
            }
        }
        Ok(Self { rule, sup_bound })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(DecayRule::constant(c)?)
    }

    /// `c_j = |sigma_j|^{alpha / (2 - alpha)}`, the weights that balance the
    /// stable tail decay against the truncation level.
    pub fn stable_compensating(sigma: &DecayRule, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::InvalidModel(format!("alpha = {alpha} outside (0, 2)")));
        }
        let rule = sigma.abs_pow(alpha / (2.0 - alpha));
        match rule.as_monomial() {
            Some(_) => Self::new(rule),
            None => {
                let bound = (1..=10_000).map(|j| rule.value(j)).fold(0.0, f64::max);
                Self::with_bound(rule, bound)
            }
        }
    }

    pub fn rule(&self) -> &DecayRule {
        &self.rule
    }

    pub fn value(&self, j: usize) -> f64 {
        self.rule.value(j)
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }
}
