//! Standard normal tail probabilities and quantiles.

use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::SQRT_2;

/// Φ(x).
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// 1 − Φ(x), computed without cancellation for large x.
pub fn upper_tail(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Upper-α quantile z_α, i.e. the x with 1 − Φ(x) = α.
pub fn upper_quantile(alpha: f64) -> f64 {
    SQRT_2 * erfc_inv(2.0 * alpha)
}

/// One-sided p-value of the rule "reject for large statistic".
pub fn one_sided_p_value(stat: f64) -> f64 {
    upper_tail(stat).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // Reference values from high-precision tables; the erfc series is good to ~1e-11.
        assert!((cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((upper_tail(1.959963984540054) - 0.025).abs() < 1e-10);
        assert!((upper_tail(1.6448536269514722) - 0.05).abs() < 1e-10);
        assert!((upper_tail(8.0) / 6.220960574271784e-16 - 1.0).abs() < 1e-9);
        assert!((upper_quantile(0.05) - 1.6448536269514722).abs() < 1e-9);
    }

    #[test]
    fn boundary_rejection_at_z_alpha() {
        let p = one_sided_p_value(1.645);
        assert!((p - 0.05).abs() < 1e-3);
        assert!(p <= 0.05);
    }

    #[test]
    fn p_value_strictly_decreasing() {
        let mut prev = one_sided_p_value(-5.0);
        let mut x = -5.0;
        while x < 8.0 {
            x += 0.01;
            let p = one_sided_p_value(x);
            assert!(p < prev, "not decreasing at {x}");
            prev = p;
        }
    }
}
