//! Log-space helpers shared by the quadrature and the capacity formulas.

use statrs::function::erf::erfc;

/// `ln Σ exp(t)`; `-inf` for an empty or all-`-inf` input.
pub fn logsumexp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// `ln(e^a + e^b)`.
pub fn logaddexp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln(1 - e^{-a})` for `a > 0`.
pub fn log1mexp(a: f64) -> f64 {
    if a <= 0.0 {
        f64::NEG_INFINITY
    } else if a < std::f64::consts::LN_2 {
        (-(-a).exp_m1()).ln()
    } else {
        (-(-a).exp()).ln_1p()
    }
}

/// Logarithm of `∫_a^b e^{g(x)} dx` for `g` linear with endpoint values
/// `ga`, `gb` on an interval of the given width.
pub fn log_exp_linear(width: f64, ga: f64, gb: f64) -> f64 {
    let m = ga.max(gb);
    if m == f64::NEG_INFINITY || width <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let d = (ga - gb).abs();
    let shape = if d < 1e-300 {
        0.0
    } else if d == f64::INFINITY {
        // Mass concentrates at the finite end; the integral is width/d -> 0.
        return f64::NEG_INFINITY;
    } else {
        (-(-d).exp_m1() / d).ln()
    };
    width.ln() + m + shape
}

/// `ln erfc(x)`, accurate far into the upper tail.
pub fn ln_erfc(x: f64) -> f64 {
    if x < 26.0 {
        erfc(x).ln()
    } else {
        let x2 = x * x;
        let series = 1.0 - 1.0 / (2.0 * x2) + 3.0 / (4.0 * x2 * x2) - 15.0 / (8.0 * x2 * x2 * x2);
        -x2 - x.ln() - 0.5 * std::f64::consts::PI.ln() + series.ln()
    }
}

/// `ln P(Z > z)` for a standard normal `Z`.
pub fn ln_normal_sf(z: f64) -> f64 {
    if z == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if z == f64::NEG_INFINITY {
        return 0.0;
    }
    (0.5f64).ln() + ln_erfc(z / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn logsumexp_matches_direct_sum() {
        let t = [0.1, -2.0, 3.5];
        let direct: f64 = t.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert_relative_eq!(logsumexp(&t), direct, epsilon = 1e-14);
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
        assert_relative_eq!(logsumexp(&[-1e4, -1e4]), -1e4 + 2f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn exp_linear_integral_closed_form() {
        // ∫_0^2 e^{3x} dx = (e^6 - 1) / 3
        let exact = ((6f64).exp() - 1.0) / 3.0;
        assert_relative_eq!(log_exp_linear(2.0, 0.0, 6.0), exact.ln(), epsilon = 1e-13);
        assert_relative_eq!(log_exp_linear(2.0, 1.0, 1.0), 2f64.ln() + 1.0, epsilon = 1e-15);
    }

    #[test]
    fn ln_erfc_is_continuous_at_switch() {
        let below = ln_erfc(26.0 - 1e-9);
        let above = ln_erfc(26.0);
        assert!((below - above).abs() < 1e-6, "{below} vs {above}");
        assert_relative_eq!(ln_erfc(0.0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn log1mexp_branches() {
        for a in [1e-8, 0.3, 0.7, 5.0, 40.0] {
            assert_relative_eq!(log1mexp(a), (1.0 - (-a).exp()).ln(), max_relative = 1e-7);
        }
    }
}
