use std::fmt;
use std::sync::{Arc, RwLock};

use super::rules::DecayRule;
use crate::error::{Error, Result};
use crate::levy1d::{one_sided_normalizer, LevyMeasureModel, LevyTriplet, TabulatedLaw};

/// Parametric family shared by all components `l_j = sigma_j h_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyKind {
    SymmetricStable,
    OneSidedStable { intensity: f64 },
    RegularlyVarying { cutoff: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormFamily {
    pub kind: FamilyKind,
    pub alpha: f64,
    pub sigma: DecayRule,
}

/// A term rule `t_j` for a series, either exact or an upper bound `|term_j| <= t_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TermRule {
    pub rule: DecayRule,
    pub exact: bool,
}

impl ClosedFormFamily {
    /// Density constant `D` with `rho_j = D |sigma_j|^alpha |x|^{-1-alpha}` on
    /// the support (total over both sides for the symmetric family), and
    /// whether the stable formulas are exact (they only dominate for
    /// regularly varying tails).
    fn density(&self) -> (f64, bool) {
        match self.kind {
            FamilyKind::SymmetricStable => (1.0, true),
            FamilyKind::OneSidedStable { intensity } => (intensity / one_sided_normalizer(self.alpha), true),
            FamilyKind::RegularlyVarying { .. } => (1.0, false),
        }
    }

    fn term(&self, factor: f64, weight_power: Option<(&DecayRule, f64)>) -> TermRule {
        let (d, exact) = self.density();
        let mut rule = self.sigma.abs_pow(self.alpha).scale(d * factor);
        if let Some((w, e)) = weight_power {
            rule = rule.mul(&w.abs_pow(e));
        }
        TermRule { rule, exact }
    }

    /// `rho_j(|x| > k / c_j)`.
    pub fn tail_mass_rule(&self, c: &DecayRule, k: f64) -> TermRule {
        let a = self.alpha;
        self.term(k.powf(-a) / a, Some((c, a)))
    }

    /// `int_{|x| <= k / c_j} x^2 rho_j(dx)`.
    pub fn second_moment_rule(&self, c: &DecayRule, k: f64) -> TermRule {
        let a = self.alpha;
        self.term(k.powf(2.0 - a) / (2.0 - a), Some((c, a - 2.0)))
    }

    /// `|p_j^{c,k}(1)|`.
    pub fn drift_rule(&self, c: &DecayRule, k: f64) -> TermRule {
        let a = self.alpha;
        if self.kind == FamilyKind::SymmetricStable {
            return TermRule {
                rule: DecayRule::zero(),
                exact: true,
            };
        }
        self.term(k.powf(1.0 - a) / (1.0 - a).abs(), Some((c, a - 1.0)))
    }

    /// Terms of the first and third series conditions for a test sequence.
    pub fn series_rules(&self, alpha_seq: &DecayRule) -> (TermRule, TermRule) {
        let a = self.alpha;
        let first = if self.kind == FamilyKind::SymmetricStable {
            TermRule {
                rule: DecayRule::zero(),
                exact: true,
            }
        } else {
            self.term(1.0 / (1.0 - a).abs(), Some((alpha_seq, a)))
        };
        let third = self.term(2.0 / ((2.0 - a) * a), Some((alpha_seq, a)));
        (first, third)
    }

    fn measure(&self, sigma: f64) -> Result<LevyMeasureModel> {
        match self.kind {
            FamilyKind::SymmetricStable => LevyMeasureModel::symmetric_stable(self.alpha, sigma),
            FamilyKind::OneSidedStable { intensity } => {
                LevyMeasureModel::one_sided_stable(self.alpha, sigma, intensity)
            }
            FamilyKind::RegularlyVarying { cutoff } => {
                LevyMeasureModel::regularly_varying(self.alpha, sigma, cutoff)
            }
        }
    }
}

type Generator = Arc<dyn Fn(usize) -> Result<LevyTriplet> + Send + Sync>;

/// `L(t) u = sum_j l_j(t) <u, e_j>` with independent one-dimensional components.
///
/// Components are generated on demand and memoized; clones share the cache.
#[derive(Clone)]
pub struct DiagonalCylindricalLevy {
    generator: Generator,
    cache: Arc<RwLock<Vec<LevyTriplet>>>,
    closed_form: Option<ClosedFormFamily>,
    gaussian: Option<DecayRule>,
}

impl fmt::Debug for DiagonalCylindricalLevy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiagonalCylindricalLevy")
            .field("closed_form", &self.closed_form)
            .field("gaussian", &self.gaussian)
            .field("basis_dim_hint", &self.basis_dim_hint())
            .finish()
    }
}

impl DiagonalCylindricalLevy {
    /// Components given by an arbitrary pure generator `j -> (b_j, s_j, rho_j)`.
    pub fn from_generator(f: impl Fn(usize) -> Result<LevyTriplet> + Send + Sync + 'static) -> Self {
        Self {
            generator: Arc::new(f),
            cache: Arc::default(),
            closed_form: None,
            gaussian: None,
        }
    }

    /// `l_j = sigma_j h_j` with `h_j` the family's canonical process, plus an
    /// independent Gaussian part of variance `s_j`.
    pub fn from_family(family: ClosedFormFamily, gaussian: DecayRule) -> Result<Self> {
        // validates alpha and the family parameters once
        family.measure(1.0)?;
        let fam = family.clone();
        let gauss = gaussian.clone();
        let generator = move |j: usize| -> Result<LevyTriplet> {
            let measure = fam.measure(fam.sigma.value(j))?;
            let b = measure.canonical_drift();
            LevyTriplet::new(b, gauss.value(j), measure)
        };
        Ok(Self {
            generator: Arc::new(generator),
            cache: Arc::default(),
            closed_form: Some(family),
            gaussian: Some(gaussian),
        })
    }

    /// Finite-activity components with rates `rate_j` and a common jump law.
    pub fn finite_activity(rate: DecayRule, law: TabulatedLaw, gaussian: DecayRule) -> Self {
        let law = Arc::new(law);
        let gauss = gaussian.clone();
        let mut out = Self::from_generator(move |j| {
            let r = rate.value(j);
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::InvalidModel(format!("rate_{j} = {r} is not a valid rate")));
            }
            let measure = if r == 0.0 {
                LevyMeasureModel::zero()
            } else {
                LevyMeasureModel::FiniteActivity { rate: r, law: law.clone() }
            };
            LevyTriplet::new(0.0, gauss.value(j), measure)
        });
        out.gaussian = Some(gaussian);
        out
    }

    /// The zero process, as the symmetric family with `sigma = 0`.
    pub fn zero() -> Self {
        Self::from_family(
            ClosedFormFamily {
                kind: FamilyKind::SymmetricStable,
                alpha: 1.0,
                sigma: DecayRule::zero(),
            },
            DecayRule::zero(),
        )
        .expect("zero family is valid")
    }

    pub fn closed_form(&self) -> Option<&ClosedFormFamily> {
        self.closed_form.as_ref()
    }

    pub fn gaussian_rule(&self) -> Option<&DecayRule> {
        self.gaussian.as_ref()
    }

    /// Largest `j` materialized so far.
    pub fn basis_dim_hint(&self) -> usize {
        self.cache.read().map(|c| c.len()).unwrap_or(0)
    }

    /// The triplet of `l_j`, `j >= 1`.
    pub fn component(&self, j: usize) -> Result<LevyTriplet> {
        if j == 0 {
            return Err(Error::Domain("components are indexed from 1".into()));
        }
        if let Ok(cache) = self.cache.read() {
            if let Some(t) = cache.get(j - 1) {
                return Ok(t.clone());
            }
        }
        let mut cache = self.cache.write().map_err(|_| Error::Domain("component cache poisoned".into()))?;
        while cache.len() < j {
            let next = (self.generator)(cache.len() + 1)?;
            cache.push(next);
        }
        Ok(cache[j - 1].clone())
    }

    pub fn components(&self, n: usize) -> Result<Vec<LevyTriplet>> {
        self.component(n.max(1))?;
        let cache = self.cache.read().map_err(|_| Error::Domain("component cache poisoned".into()))?;
        Ok(cache[..n].to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

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
    fn components_are_pure_and_memoized() {
        let l = sym(1.5, DecayRule::power(1.0, 0.5).unwrap());
        assert_eq!(l.basis_dim_hint(), 0);
        let c7 = l.component(7).unwrap();
        assert_eq!(l.basis_dim_hint(), 7);
        assert_eq!(l.component(7).unwrap(), c7);
        let fresh = sym(1.5, DecayRule::power(1.0, 0.5).unwrap());
        assert_eq!(fresh.component(7).unwrap(), c7);
        assert_eq!(
            c7.measure,
            LevyMeasureModel::symmetric_stable(1.5, 7f64.powf(-0.5)).unwrap()
        );
        assert!(l.component(0).is_err());
    }

    #[test]
    fn concurrent_materialization_agrees() {
        let l = sym(1.2, DecayRule::geometric(1.0, 0.9).unwrap());
        let got: Vec<_> = std::thread::scope(|s| {
            let hs: Vec<_> = (0..4)
                .map(|t| {
                    let l = l.clone();
                    s.spawn(move || l.component(50 + t).unwrap())
                })
                .collect();
            hs.into_iter().map(|h| h.join().unwrap()).collect()
        });
        for (t, c) in got.iter().enumerate() {
            assert_eq!(*c, l.component(50 + t).unwrap());
        }
    }

    #[test]
    fn term_rules_match_componentwise_closed_forms() {
        let fam = ClosedFormFamily {
            kind: FamilyKind::OneSidedStable { intensity: 0.7 },
            alpha: 0.6,
            sigma: DecayRule::power(2.0, 0.8).unwrap(),
        };
        let l = DiagonalCylindricalLevy::from_family(fam.clone(), DecayRule::zero()).unwrap();
        let c = DecayRule::power(1.0, 0.3).unwrap();
        let k = 2.0;
        let tail = fam.tail_mass_rule(&c, k);
        let second = fam.second_moment_rule(&c, k);
        let drift = fam.drift_rule(&c, k);
        for j in [1usize, 3, 40] {
            let t = l.component(j).unwrap();
            let kappa = k / c.value(j);
            let rel = |a: f64, b: f64| ((a - b) / b).abs();
            assert!(rel(tail.rule.value(j), t.measure.tail_mass(kappa).unwrap()) < 1e-12);
            assert!(rel(second.rule.value(j), t.measure.truncated_second_moment(kappa).unwrap()) < 1e-12);
            let p = t.drift_b + t.measure.signed_annulus_first_moment(1.0, kappa);
            assert!(rel(drift.rule.value(j), p.abs()) < 1e-12, "j={j}");
        }
    }
}
