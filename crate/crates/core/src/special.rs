//! Normal-distribution helpers that stay accurate deep in the lower tail.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument `ln Φ` switches to the asymptotic series.
const TAIL_SWITCH: f64 = -8.0;

pub fn ln_norm_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Sum of the asymptotic series `1 − 1/x² + 3/x⁴ − 15/x⁶ + …` for `Φ(x)·|x|/φ(x)`,
/// truncated once terms stop shrinking or fall below double precision.
fn mills_series(x: f64) -> f64 {
    let inv_x2 = 1.0 / (x * x);
    let mut term: f64 = 1.0;
    let mut sum: f64 = 1.0;
    for k in 1..200 {
        let next = -term * (2 * k - 1) as f64 * inv_x2;
        if next.abs() >= term.abs() || next.abs() < 1e-17 * sum.abs() {
            break;
        }
        term = next;
        sum += term;
    }
    sum
}

/// `ln Φ(x)`.
pub fn ln_norm_cdf(x: f64) -> f64 {
    if x < TAIL_SWITCH {
        ln_norm_pdf(x) - (-x).ln() + mills_series(x).ln()
    } else if x > 5.0 {
        (-0.5 * libm::erfc(x * FRAC_1_SQRT_2)).ln_1p()
    } else {
        norm_cdf(x).ln()
    }
}

/// Inverse Mills ratio `φ(x)/Φ(x)`.
pub fn inv_mills(x: f64) -> f64 {
    if x < TAIL_SWITCH {
        -x / mills_series(x)
    } else {
        (ln_norm_pdf(x) - ln_norm_cdf(x)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_values() {
        assert!((ln_norm_cdf(0.0) - 0.5f64.ln()).abs() < 1e-15);
        assert!((norm_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-12);
        assert!((norm_pdf(0.0) - (-LN_SQRT_2PI).exp()).abs() < 1e-16);
    }

    #[test]
    fn tail_branch_is_continuous() {
        let below = ln_norm_cdf(TAIL_SWITCH - 1e-12);
        let above = ln_norm_cdf(TAIL_SWITCH + 1e-12);
        assert!((below - above).abs() < 1e-9 * below.abs(), "{below} vs {above}");
        let below = inv_mills(TAIL_SWITCH - 1e-12);
        let above = inv_mills(TAIL_SWITCH + 1e-12);
        assert!((below - above).abs() < 1e-9 * below, "{below} vs {above}");
    }

    #[test]
    fn deep_tail_is_finite() {
        // ln Φ(-40) ≈ -804.608
        let v = ln_norm_cdf(-40.0);
        assert!((v + 804.608_442_013_753_8).abs() < 1e-9, "{v}");
        assert!((inv_mills(-40.0) - 40.024_968_847_207_26).abs() < 1e-9);
    }

    #[test]
    fn upper_tail() {
        assert!(ln_norm_cdf(10.0) < 0.0 && ln_norm_cdf(10.0) > -1e-22);
        assert!((inv_mills(10.0) - norm_pdf(10.0)).abs() < 1e-30);
    }
}
