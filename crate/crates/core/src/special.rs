//! Regularized incomplete beta function `I_x(a, b)`.
//!
//! Continued-fraction expansion evaluated with the modified Lentz method,
//! using the symmetry `I_x(a, b) = 1 − I_{1−x}(b, a)` on the side where the
//! fraction converges quickly.

use statrs::function::gamma::ln_gamma;
use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum BetaError {
    #[error("beta shape parameters must be positive (a = {a}, b = {b})")]
    NonPositiveShape { a: f64, b: f64 },
    #[error("x = {0} is outside [0, 1]")]
    OutOfDomain(f64),
}

const MAX_ITER: usize = 5000;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `I_x(a, b)`, the CDF of Beta(a, b) at `x`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64, BetaError> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(BetaError::NonPositiveShape { a, b });
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(BetaError::OutOfDomain(x));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let log_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    let value = if x < (a + 1.0) / (a + b + 2.0) {
        log_front.exp() * continued_fraction(a, b, x) / a
    } else {
        1.0 - log_front.exp() * continued_fraction(b, a, 1.0 - x) / b
    };
    Ok(value.clamp(0.0, 1.0))
}

fn continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_cdf() {
        for x in [0.0, 0.25, 1.0] {
            assert!((regularized_incomplete_beta(1.0, 1.0, x).unwrap() - x).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_midpoint() {
        for a in [1.0, 2.0, 7.5] {
            assert!((regularized_incomplete_beta(a, a, 0.5).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn binomial_sum_value() {
        // I_0.3(2, 5) = Σ_{j=2}^{6} C(6,j) 0.3^j 0.7^(6−j)
        let binom = [1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0];
        let oracle: f64 = (2..=6)
            .map(|j| binom[j] * 0.3f64.powi(j as i32) * 0.7f64.powi(6 - j as i32))
            .sum();
        let got = regularized_incomplete_beta(2.0, 5.0, 0.3).unwrap();
        assert!((got - oracle).abs() < 1e-14);
        assert_eq!(format!("{got:.6}"), "0.579825");
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            regularized_incomplete_beta(0.0, 1.0, 0.5),
            Err(BetaError::NonPositiveShape { .. })
        ));
        assert!(matches!(
            regularized_incomplete_beta(1.0, 1.0, 1.5),
            Err(BetaError::OutOfDomain(_))
        ));
    }
}
