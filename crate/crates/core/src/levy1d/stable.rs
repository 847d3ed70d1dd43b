//! Chambers–Mallows–Stuck sampling of stable laws.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;

/// Standard stable variate with characteristic function
/// `exp(-|u|^alpha (1 - i beta sgn(u) tan(pi alpha / 2)))`.
///
/// For `alpha = 1` only the symmetric case (`beta = 0`, Cauchy) is supported;
/// `beta` is ignored there.
pub fn sample_standard_stable<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    // V uniform on (-pi/2, pi/2), W standard exponential
    let v = loop {
        let v = (rng.random::<f64>() - 0.5) * std::f64::consts::PI;
        if v.abs() < FRAC_PI_2 {
            break v;
        }
    };
    let w: f64 = loop {
        let w: f64 = rng.sample(rand_distr::Exp1);
        if w > 0.0 {
            break w;
        }
    };
    if (alpha - 1.0).abs() < 1e-12 {
        return v.tan();
    }
    let t = beta * (FRAC_PI_2 * alpha).tan();
    let b = t.atan() / alpha;
    let s = (1.0 + t * t).powf(1.0 / (2.0 * alpha));
    let av = alpha * (v + b);
    s * av.sin() / v.cos().powf(1.0 / alpha) * ((v - av).cos() / w).powf((1.0 - alpha) / alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn empirical_cf(xs: &[f64], u: f64) -> (f64, f64) {
        let n = xs.len() as f64;
        let re = xs.iter().map(|x| (u * x).cos()).sum::<f64>() / n;
        let im = xs.iter().map(|x| (u * x).sin()).sum::<f64>() / n;
        (re, im)
    }

    #[test]
    fn skewed_stable_matches_characteristic_function() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for &(alpha, beta) in &[(0.6, 1.0), (1.5, 1.0), (1.5, -1.0), (1.2, 0.0)] {
            let xs: Vec<f64> = (0..40_000).map(|_| sample_standard_stable(alpha, beta, &mut rng)).collect();
            for &u in &[0.5f64, 1.0, 2.0] {
                let mag = (-u.powf(alpha)).exp();
                let phase = beta * (FRAC_PI_2 * alpha).tan() * u.powf(alpha);
                let (re_t, im_t) = (mag * phase.cos(), mag * phase.sin());
                let (re, im) = empirical_cf(&xs, u);
                // each component has variance <= 1/n
                let tol = 4.0 / (xs.len() as f64).sqrt();
                assert!((re - re_t).abs() < tol, "alpha {alpha} beta {beta} u {u}: re {re} vs {re_t}");
                assert!((im - im_t).abs() < tol, "alpha {alpha} beta {beta} u {u}: im {im} vs {im_t}");
            }
        }
    }

    #[test]
    fn one_sided_small_alpha_is_positive() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            assert!(sample_standard_stable(0.7, 1.0, &mut rng) > 0.0);
        }
    }
}
