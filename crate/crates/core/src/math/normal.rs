use std::f64::consts::FRAC_1_SQRT_2;

/// `ln(sqrt(2π))`.
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn norm_pdf(t: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * t * t).exp()
}

/// Standard normal distribution function.
///
/// Evaluated through the complementary error function so that both tails keep
/// full relative precision.
pub fn norm_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t * FRAC_1_SQRT_2)
}

/// `ln Φ(t)`, accurate in the far lower tail where `Φ(t)` underflows.
pub fn log_norm_cdf(t: f64) -> f64 {
    if t > 5.0 {
        // Φ(t) = 1 - Φ(-t), and Φ(-t) is tiny here.
        (-0.5 * libm::erfc(t * FRAC_1_SQRT_2)).ln_1p()
    } else if t > -30.0 {
        norm_cdf(t).ln()
    } else {
        // Asymptotic expansion of the Mills ratio.
        let t2 = t * t;
        let series = 1.0 - 1.0 / t2 + 3.0 / (t2 * t2) - 15.0 / (t2 * t2 * t2);
        -0.5 * t2 - (-t).ln() - LN_SQRT_2PI + series.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Reference Φ built from the Maclaurin series of erf (small |t|) and the
    /// Lentz continued fraction of erfc (tails). Independent of libm.
    fn reference_cdf(t: f64) -> f64 {
        let x = t / std::f64::consts::SQRT_2;
        if x.abs() < 2.5 {
            let mut term = x;
            let mut sum = x;
            let mut k = 0.0;
            loop {
                k += 1.0;
                term *= -x * x / k;
                let add = term / (2.0 * k + 1.0);
                sum += add;
                if add.abs() < 1e-18 * sum.abs().max(1e-300) {
                    break;
                }
            }
            let erf = 2.0 / PI.sqrt() * sum;
            0.5 * (1.0 + erf)
        } else {
            let z = x.abs();
            // erfc(z) = exp(-z²)/√π · 1/(z + 1/2/(z + 1/(z + 3/2/(z + ...))))
            let mut f = 0.0;
            for k in (1..200).rev() {
                f = (k as f64 / 2.0) / (z + f);
            }
            let erfc = (-z * z).exp() / PI.sqrt() / (z + f);
            if x > 0.0 {
                1.0 - 0.5 * erfc
            } else {
                0.5 * erfc
            }
        }
    }

    #[test]
    fn pdf_values() {
        assert!((norm_pdf(0.0) - 0.398942).abs() < 1e-6);
        assert!((norm_pdf(1.0) - 0.241971).abs() < 1e-6);
        assert_eq!(norm_pdf(-1.0), norm_pdf(1.0));
    }

    #[test]
    fn cdf_values() {
        assert_eq!(norm_cdf(0.0), 0.5);
        assert!((norm_cdf(10.0) - 1.0).abs() < 1e-12);
        assert!((norm_cdf(1.0) - 0.841345).abs() < 1e-6);
        assert!((reference_cdf(1.0) - 0.841_344_746_068_543).abs() < 1e-13);
    }

    #[test]
    fn cdf_matches_reference_on_grid() {
        let mut worst: f64 = 0.0;
        for i in 0..=16000 {
            let t = -8.0 + i as f64 * 1e-3;
            worst = worst.max((norm_cdf(t) - reference_cdf(t)).abs());
        }
        assert!(worst <= 1e-7, "max abs error {worst}");
    }

    #[test]
    fn log_cdf_is_continuous_across_branches() {
        for &t in &[5.0, -30.0] {
            let lo = log_norm_cdf(t - 1e-9);
            let hi = log_norm_cdf(t + 1e-9);
            assert!(
                (lo - hi).abs() < 1e-6 * lo.abs().max(1e-12),
                "{t}: {lo} vs {hi}"
            );
        }
        assert!(log_norm_cdf(-40.0).is_finite());
        assert!(log_norm_cdf(40.0) <= 0.0);
    }

    proptest! {
        #[test]
        fn cdf_symmetry(t in -8.0f64..8.0) {
            prop_assert!((norm_cdf(t) + norm_cdf(-t) - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn cdf_derivative_is_pdf(t in -8.0f64..8.0) {
            let h = 1e-5;
            let fd = (norm_cdf(t + h) - norm_cdf(t - h)) / (2.0 * h);
            prop_assert!((fd - norm_pdf(t)).abs() <= 1e-6);
        }

        #[test]
        fn cdf_monotone(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(norm_cdf(lo) <= norm_cdf(hi));
            prop_assert!((0.0..=1.0).contains(&norm_cdf(lo)));
        }
    }
}
