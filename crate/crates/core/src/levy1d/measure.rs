use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use statrs::function::gamma::gamma;

use super::tabulated::{Moments, TabulatedLaw};
use crate::error::{domain, Error, Result};

/// Constant `C_alpha` in `int_0^inf (1 - cos(ux)) x^{-1-alpha} dx = C_alpha |u|^alpha`.
///
/// Equals `Gamma(1 - alpha) cos(pi alpha / 2) / alpha`, with limit `pi / 2`
/// at `alpha = 1`. It is also the normalizer `-cos(pi alpha / 2) Gamma(-alpha)`
/// of one-sided stable measures.
pub fn stable_exponent_constant(alpha: f64) -> f64 {
    if (alpha - 1.0).abs() < 1e-9 {
        return PI / 2.0;
    }
    gamma(1.0 - alpha) * (PI * alpha / 2.0).cos() / alpha
}

/// Normalizer `c_alpha` of the one-sided stable Levy density `(c / c_alpha) x^{-1-alpha}`.
///
/// Positive on `(0,1) ∪ (1,2)`; see [`stable_exponent_constant`].
pub fn one_sided_normalizer(alpha: f64) -> f64 {
    -(alpha * PI / 2.0).cos() * gamma(-alpha)
}

/// A one-dimensional Levy measure with analytic truncated moments.
#[derive(Debug, Clone, PartialEq)]
pub enum LevyMeasureModel {
    /// `1/2 |x|^{-1-alpha} dx` pushed forward by `x -> sigma x`.
    SymmetricStable { alpha: f64, sigma: f64 },
    /// `(c / c_alpha) x^{-1-alpha} dx` on `(0, inf)` pushed forward by `x -> sigma x`.
    OneSidedStable {
        alpha: f64,
        sigma: f64,
        intensity: f64,
    },
    /// `y^{-1-alpha} dy` on `(cutoff, inf)` pushed forward by `y -> sigma y`.
    /// Finite, with Pareto tails of index `alpha`.
    RegularlyVarying { alpha: f64, sigma: f64, cutoff: f64 },
    /// `rate` times a tabulated jump law.
    FiniteActivity { rate: f64, law: Arc<TabulatedLaw> },
}

/// A radial power density `density |x|^{-1-alpha}` on one or both half-lines,
/// restricted to `|x| > lower`.
#[derive(Debug, Clone, Copy)]
struct PowerDensity {
    alpha: f64,
    density: f64,
    /// +1 / -1 for one-sided, 0 for symmetric (density on both sides).
    side: f64,
    lower: f64,
}

impl PowerDensity {
    fn annulus(&self, a: f64, b: f64) -> Moments {
        let a = a.max(self.lower);
        if b <= a || self.density == 0.0 {
            return Moments::default();
        }
        let sides = if self.side == 0.0 { 2.0 } else { 1.0 };
        let al = self.alpha;
        let pw = |x: f64, e: f64| -> f64 {
            if x == 0.0 {
                if e > 0.0 {
                    0.0
                } else if e == 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            } else {
                x.powf(e)
            }
        };
        // int_a^b x^{p - 1 - alpha} dx for p = 0, 1, 2
        let integral = |p: f64| -> f64 {
            let e = p - al;
            if e.abs() < 1e-14 {
                (b / a).ln()
            } else {
                (pw(b, e) - pw(a, e)) / e
            }
        };
        let mass = sides * self.density * integral(0.0);
        let first = if self.side == 0.0 {
            0.0
        } else {
            self.side * self.density * integral(1.0)
        };
        let second = sides * self.density * integral(2.0);
        Moments {
            mass,
            first,
            second,
        }
    }
}

fn check_alpha(alpha: f64, allow_one: bool) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidModel(format!("alpha = {alpha} outside (0, 2)")));
    }
    if !allow_one && (alpha - 1.0).abs() < 1e-12 {
        return Err(Error::InvalidModel("alpha = 1 not allowed for this family".into()));
    }
    Ok(())
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("{name} must be finite")))
    }
}

impl LevyMeasureModel {
    pub fn symmetric_stable(alpha: f64, sigma: f64) -> Result<Self> {
        check_alpha(alpha, true)?;
        check_finite("sigma", sigma)?;
        Ok(Self::SymmetricStable { alpha, sigma })
    }

    pub fn one_sided_stable(alpha: f64, sigma: f64, intensity: f64) -> Result<Self> {
        check_alpha(alpha, false)?;
        check_finite("sigma", sigma)?;
        if !(intensity > 0.0 && intensity.is_finite()) {
            return Err(Error::InvalidModel("intensity must be positive".into()));
        }
        Ok(Self::OneSidedStable {
            alpha,
            sigma,
            intensity,
        })
    }

    /// One-sided stable measure with unit density coefficient (`c = c_alpha`).
    pub fn one_sided_stable_unit(alpha: f64, sigma: f64) -> Result<Self> {
        check_alpha(alpha, false)?;
        Self::one_sided_stable(alpha, sigma, one_sided_normalizer(alpha))
    }

    pub fn regularly_varying(alpha: f64, sigma: f64, cutoff: f64) -> Result<Self> {
        check_alpha(alpha, false)?;
        check_finite("sigma", sigma)?;
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::InvalidModel("Pareto cutoff must be positive".into()));
        }
        Ok(Self::RegularlyVarying {
            alpha,
            sigma,
            cutoff,
        })
    }

    pub fn finite_activity(rate: f64, law: TabulatedLaw) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::InvalidModel("rate must be nonnegative".into()));
        }
        Ok(Self::FiniteActivity {
            rate,
            law: Arc::new(law),
        })
    }

    /// The zero measure.
    pub fn zero() -> Self {
        Self::SymmetricStable {
            alpha: 1.0,
            sigma: 0.0,
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            Self::SymmetricStable { alpha, .. }
            | Self::OneSidedStable { alpha, .. }
            | Self::RegularlyVarying { alpha, .. } => Some(alpha),
            Self::FiniteActivity { .. } => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::SymmetricStable { sigma, .. }
            | Self::OneSidedStable { sigma, .. }
            | Self::RegularlyVarying { sigma, .. } => *sigma == 0.0,
            Self::FiniteActivity { rate, law } => *rate == 0.0 || law.annulus(0.0, f64::INFINITY).mass == 0.0,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            Self::SymmetricStable { .. } => true,
            _ => self.is_zero(),
        }
    }

    pub fn is_finite_activity(&self) -> bool {
        matches!(self, Self::RegularlyVarying { .. } | Self::FiniteActivity { .. }) || self.is_zero()
    }

    fn power_density(&self) -> Option<PowerDensity> {
        match *self {
            Self::SymmetricStable { alpha, sigma } => Some(PowerDensity {
                alpha,
                density: 0.5 * sigma.abs().powf(alpha),
                side: 0.0,
                lower: 0.0,
            }),
            Self::OneSidedStable {
                alpha,
                sigma,
                intensity,
            } => Some(PowerDensity {
                alpha,
                density: intensity / one_sided_normalizer(alpha) * sigma.abs().powf(alpha),
                side: sigma.signum(),
                lower: 0.0,
            }),
            Self::RegularlyVarying {
                alpha,
                sigma,
                cutoff,
            } => Some(PowerDensity {
                alpha,
                density: sigma.abs().powf(alpha),
                side: sigma.signum(),
                lower: sigma.abs() * cutoff,
            }),
            Self::FiniteActivity { .. } => None,
        }
    }

    /// Mass, first and second moment over `{a < |x| <= b}`.
    pub(crate) fn annulus(&self, a: f64, b: f64) -> Moments {
        if self.is_zero() || b <= a {
            return Moments::default();
        }
        match self {
            Self::FiniteActivity { rate, law } => {
                let m = law.annulus(a, b);
                Moments {
                    mass: rate * m.mass,
                    first: rate * m.first,
                    second: rate * m.second,
                }
            }
            _ => self.power_density().unwrap().annulus(a, b),
        }
    }

    /// `rho({|x| > y})`.
    pub fn tail_mass(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(domain(format!("tail mass needs y > 0, got {y}")));
        }
        Ok(self.annulus(y, f64::INFINITY).mass)
    }

    /// `int_{|x| <= kappa} x^2 rho(dx)`.
    pub fn truncated_second_moment(&self, kappa: f64) -> Result<f64> {
        if !(kappa > 0.0) {
            return Err(domain(format!("truncation level must be positive, got {kappa}")));
        }
        Ok(self.annulus(0.0, kappa).second)
    }

    /// `int_{1 < |x| <= kappa} x rho(dx)`; zero for `kappa <= 1`.
    pub fn truncated_first_moment(&self, kappa: f64) -> Result<f64> {
        if kappa.is_nan() {
            return Err(domain("truncation level is NaN"));
        }
        if kappa <= 1.0 {
            return Ok(0.0);
        }
        Ok(self.annulus(1.0, kappa).first)
    }

    /// Signed first moment `int_{a < |x| <= b} x rho(dx)`, any order of `a`, `b`:
    /// for `a > b` this is `-int_{b < |x| <= a}`.
    pub fn signed_annulus_first_moment(&self, a: f64, b: f64) -> f64 {
        if a <= b {
            self.annulus(a, b).first
        } else {
            -self.annulus(b, a).first
        }
    }

    /// Drift `b` (w.r.t. the truncation `1_{|x| <= 1}`) of the family's canonical
    /// process: strictly stable for the stable families, the centered process for
    /// regularly varying tails with `alpha > 1`, and the uncompensated jump sum
    /// otherwise.
    pub fn canonical_drift(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        match *self {
            Self::SymmetricStable { .. } => 0.0,
            Self::OneSidedStable {
                alpha,
                sigma,
                intensity,
            } => {
                intensity / (one_sided_normalizer(alpha) * (1.0 - alpha))
                    * sigma
                    * sigma.abs().powf(alpha - 1.0)
            }
            Self::RegularlyVarying { alpha, .. } if alpha > 1.0 => {
                -self.annulus(1.0, f64::INFINITY).first
            }
            _ => self.annulus(0.0, 1.0).first,
        }
    }

    /// Draw a jump size conditioned on `|x| > threshold`.
    pub fn sample_size_above<R: Rng + ?Sized>(&self, threshold: f64, rng: &mut R) -> Option<f64> {
        if self.is_zero() {
            return None;
        }
        let u = 1.0 - rng.random::<f64>(); // (0, 1]
        match self {
            Self::FiniteActivity { law, .. } => law.sample_above(threshold, rng),
            _ => {
                let pd = self.power_density().unwrap();
                let lo = threshold.max(pd.lower);
                let r = lo * u.powf(-1.0 / pd.alpha);
                let r = if r > threshold { r } else { next_up(threshold) };
                let sign = if pd.side == 0.0 {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                } else {
                    pd.side
                };
                Some(sign * r)
            }
        }
    }
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

/// A single jump `(time, size)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Jump {
    pub time: f64,
    pub size: f64,
}

/// Jumps of size `|x| > threshold` on `(0, horizon]`, by exponential
/// interarrivals (times strictly increasing) and inverse-transform sizes.
pub fn sample_jumps_above<R: Rng + ?Sized>(
    m: &LevyMeasureModel,
    threshold: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<Vec<Jump>> {
    let rate = m.tail_mass(threshold)?;
    sample_jumps_with_rate(m, threshold, rate, horizon, rng)
}

/// As [`sample_jumps_above`] with a precomputed `rate = rho(|x| > threshold)`.
/// `threshold = 0` is allowed for finite measures.
pub(crate) fn sample_jumps_with_rate<R: Rng + ?Sized>(
    m: &LevyMeasureModel,
    threshold: f64,
    rate: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<Vec<Jump>> {
    if !(horizon > 0.0) {
        return Err(domain("horizon must be positive"));
    }
    if !rate.is_finite() {
        return Err(Error::InfiniteTailMass(threshold));
    }
    let mut out = Vec::new();
    if rate == 0.0 {
        return Ok(out);
    }
    let mut t = 0.0;
    loop {
        let e: f64 = rng.sample(rand_distr::Exp1);
        let next = t + e / rate;
        if next > horizon {
            break;
        }
        if next > t {
            if let Some(size) = m.sample_size_above(threshold, rng) {
                out.push(Jump { time: next, size });
            }
        }
        t = next;
    }
    Ok(out)
}

/// The first jump of [`sample_jumps_above`] with the same stream, without
/// drawing the rest of the record.
pub fn first_jump_above<R: Rng + ?Sized>(
    m: &LevyMeasureModel,
    threshold: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<Option<Jump>> {
    if !(horizon > 0.0) {
        return Err(domain("horizon must be positive"));
    }
    let rate = m.tail_mass(threshold)?;
    if !rate.is_finite() {
        return Err(Error::InfiniteTailMass(threshold));
    }
    if rate == 0.0 {
        return Ok(None);
    }
    let e: f64 = rng.sample(rand_distr::Exp1);
    let time = e / rate;
    if time > horizon || time <= 0.0 {
        return Ok(None);
    }
    Ok(m.sample_size_above(threshold, rng).map(|size| Jump { time, size }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_constant_limits() {
        assert!((stable_exponent_constant(1.0) - PI / 2.0).abs() < 1e-15);
        let left = stable_exponent_constant(1.0 - 1e-6);
        let right = stable_exponent_constant(1.0 + 1e-6);
        assert!((left - PI / 2.0).abs() < 1e-5 && (right - PI / 2.0).abs() < 1e-5);
        // C_alpha equals the one-sided normalizer away from alpha = 1
        for &a in &[0.3, 0.5, 1.2, 1.5, 1.9] {
            assert!((stable_exponent_constant(a) - one_sided_normalizer(a)).abs() < 1e-12);
            assert!(one_sided_normalizer(a) > 0.0);
        }
        // C_{1/2} = Gamma(1/2) cos(pi/4) / (1/2) = sqrt(2 pi)
        assert!((stable_exponent_constant(0.5) - (2.0 * PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        let m = LevyMeasureModel::symmetric_stable(1.0, 1.0).unwrap();
        assert!(m.tail_mass(0.0).is_err());
        assert!(m.tail_mass(-1.0).is_err());
        assert!(m.truncated_second_moment(0.0).is_err());
        assert_eq!(m.truncated_first_moment(0.5).unwrap(), 0.0);
        assert!(LevyMeasureModel::symmetric_stable(2.0, 1.0).is_err());
        assert!(LevyMeasureModel::one_sided_stable(1.0, 1.0, 1.0).is_err());
        assert!(LevyMeasureModel::one_sided_stable(0.5, 1.0, 0.0).is_err());
        assert!(LevyMeasureModel::regularly_varying(0.5, 1.0, 0.0).is_err());
    }

    #[test]
    fn closed_forms_match_documented_values() {
        let m = LevyMeasureModel::symmetric_stable(1.0, 1.0).unwrap();
        assert!((m.tail_mass(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((m.truncated_second_moment(1.0).unwrap() - 1.0).abs() < 1e-15);
        let m = LevyMeasureModel::symmetric_stable(1.5, 2.0).unwrap();
        let expect = 2f64.powf(1.5) * 4f64.powf(-1.5) / 1.5;
        assert!((m.tail_mass(4.0).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 0.2357).abs() < 1e-4);
        let m = LevyMeasureModel::one_sided_stable_unit(0.5, 1.0).unwrap();
        assert!((m.truncated_first_moment(4.0).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(
            LevyMeasureModel::symmetric_stable(1.3, 0.7).unwrap().truncated_first_moment(9.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn negative_sigma_flips_one_sided_jumps() {
        let m = LevyMeasureModel::one_sided_stable_unit(1.5, -2.0).unwrap();
        assert!(m.truncated_first_moment(5.0).unwrap() < 0.0);
        let mut rng = crate::rng::RandomStream::new(1, 0);
        for _ in 0..100 {
            assert!(m.sample_size_above(1.0, &mut rng).unwrap() < -1.0);
        }
    }

    #[test]
    fn canonical_drift_of_one_sided_stable() {
        // pure-jump (alpha < 1) and centered (alpha > 1) conventions agree with
        // b = (c/(c_alpha (1-alpha))) sigma |sigma|^{alpha-1}
        for &(alpha, sigma) in &[(0.5, 1.3), (1.5, 0.7), (1.5, -0.7)] {
            let m = LevyMeasureModel::one_sided_stable(alpha, sigma, 0.8).unwrap();
            let via_measure = if alpha < 1.0 {
                m.annulus(0.0, 1.0).first
            } else {
                -m.annulus(1.0, f64::INFINITY).first
            };
            assert!((m.canonical_drift() - via_measure).abs() < 1e-12, "{alpha} {sigma}");
        }
    }

    #[test]
    fn zero_measures_have_no_jumps() {
        let mut rng = crate::rng::RandomStream::new(3, 0);
        let z = LevyMeasureModel::zero();
        assert!(sample_jumps_above(&z, 1.0, 10.0, &mut rng).unwrap().is_empty());
        let law = TabulatedLaw::new(vec![0.0, 1.0], vec![0.1, 0.5]).unwrap();
        let fa = LevyMeasureModel::finite_activity(3.0, law).unwrap();
        assert_eq!(fa.tail_mass(1.0).unwrap(), 0.0);
        assert!(sample_jumps_above(&fa, 1.0, 10.0, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn regularly_varying_support_starts_at_cutoff() {
        let m = LevyMeasureModel::regularly_varying(1.5, 2.0, 0.5).unwrap();
        // support |x| > 1: tail below is the total mass 1^{-1.5}/1.5 * 2^{1.5}... in x-space
        let total = m.tail_mass(1e-9).unwrap();
        assert!((total - m.tail_mass(1.0).unwrap()).abs() < 1e-15);
        assert!((total - 2f64.powf(1.5) / 1.5).abs() < 1e-12);
        assert!(m.tail_mass(4.0).unwrap() < total);
    }
}
