//! Chi-squared distribution via the regularized incomplete gamma function.

use alloc::format;

use crate::{Error, Result};

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAX_TERMS: usize = 100_000;
const BISECTION_CAP: usize = 200;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `a > 0` (Lanczos, g = 7).
pub fn ln_gamma(a: f64) -> f64 {
    if a < 0.5 {
        // reflection
        let pi = core::f64::consts::PI;
        return libm::log(pi / libm::sin(pi * a)) - ln_gamma(1.0 - a);
    }
    let x = a - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * libm::log(2.0 * core::f64::consts::PI) + (x + 0.5) * libm::log(t) - t + libm::log(acc)
}

fn gamma_prefactor(a: f64, x: f64) -> f64 {
    libm::exp(-x + a * libm::log(x) - ln_gamma(a))
}

// P(a, x) by its power series; converges quickly for x < a + 1.
fn lower_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_TERMS {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * gamma_prefactor(a, x)
}

// Q(a, x) by modified Lentz continued fraction; used for x >= a + 1.
fn upper_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    gamma_prefactor(a, x) * h
}

fn check_gamma_args(a: f64, x: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::invalid(format!("shape must be positive, got {a}")));
    }
    if !(x >= 0.0) {
        return Err(Error::invalid(format!("argument must be non-negative, got {x}")));
    }
    Ok(())
}

/// Regularized lower incomplete gamma `P(a, x) = γ(a, x) / Γ(a)`.
pub fn regularized_gamma_p(a: f64, x: f64) -> Result<f64> {
    check_gamma_args(a, x)?;
    Ok(if x == 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else if x < a + 1.0 {
        lower_series(a, x)
    } else {
        1.0 - upper_fraction(a, x)
    })
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`, computed
/// directly in the tail so small probabilities keep full relative precision.
pub fn regularized_gamma_q(a: f64, x: f64) -> Result<f64> {
    check_gamma_args(a, x)?;
    Ok(if x == 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else if x < a + 1.0 {
        1.0 - lower_series(a, x)
    } else {
        upper_fraction(a, x)
    })
}

fn check_dof(dof: u32) -> Result<f64> {
    if dof == 0 {
        Err(Error::invalid("degrees of freedom must be positive"))
    } else {
        Ok(f64::from(dof))
    }
}

/// `P(X <= x)` for `X ~ χ²(dof)`.
pub fn chi2_cdf(x: f64, dof: u32) -> Result<f64> {
    let k = check_dof(dof)?;
    if !(x >= 0.0) {
        return Err(Error::invalid(format!("chi-squared argument must be >= 0, got {x}")));
    }
    regularized_gamma_p(0.5 * k, 0.5 * x)
}

/// `P(X > x)` for `X ~ χ²(dof)`.
pub fn chi2_sf(x: f64, dof: u32) -> Result<f64> {
    let k = check_dof(dof)?;
    if !(x >= 0.0) {
        return Err(Error::invalid(format!("chi-squared argument must be >= 0, got {x}")));
    }
    regularized_gamma_q(0.5 * k, 0.5 * x)
}

/// Inverse of [`chi2_cdf`] by bisection.
///
/// The initial bracket is `[0, dof + 40·sqrt(2·dof)]`, widened if the target
/// lies beyond it. Upper quantiles (`p > 0.5`) are located on the survival
/// function so that `1 - p` is matched with full relative precision.
pub fn chi2_quantile(p: f64, dof: u32) -> Result<f64> {
    let k = check_dof(dof)?;
    if !(0.0..1.0).contains(&p) {
        return Err(Error::invalid(format!("quantile level must lie in [0, 1), got {p}")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let upper = p > 0.5;
    let tail = 1.0 - p;
    // true when the quantile lies above x
    let below = |x: f64| -> Result<bool> {
        if upper {
            Ok(chi2_sf(x, dof)? > tail)
        } else {
            Ok(chi2_cdf(x, dof)? < p)
        }
    };

    let mut lo = 0.0;
    let mut hi = k + 40.0 * libm::sqrt(2.0 * k);
    while below(hi)? {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..BISECTION_CAP {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!((ln_gamma(0.5) - 0.5 * libm::log(core::f64::consts::PI)).abs() < 1e-13);
        // ln(5!) = ln 120
        assert!((ln_gamma(6.0) - libm::log(120.0)).abs() < 1e-12);
        // Stirling check at a large half-integer: lnΓ(600)
        let stirling = |a: f64| {
            (a - 0.5) * libm::log(a) - a + 0.5 * libm::log(2.0 * core::f64::consts::PI) + 1.0 / (12.0 * a)
                - 1.0 / (360.0 * a * a * a)
        };
        assert!((ln_gamma(600.0) - stirling(600.0)).abs() < 1e-9);
    }

    #[test]
    fn cdf_at_zero_is_zero() {
        for k in [1, 2, 12, 120, 1200] {
            assert_eq!(chi2_cdf(0.0, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn two_dof_is_exponential() {
        let expected = 1.0 - libm::exp(-1.0);
        assert!((chi2_cdf(2.0, 2).unwrap() - expected).abs() < 1e-14);
        for x in [0.1, 1.0, 5.0, 30.0, 80.0] {
            let sf = chi2_sf(x, 2).unwrap();
            let exact = libm::exp(-0.5 * x);
            assert!(((sf - exact) / exact).abs() < 1e-12, "x={x}: {sf} vs {exact}");
        }
    }

    #[test]
    fn even_dof_matches_poisson_closed_form() {
        // For dof = 2m, Q = e^{-x/2} Σ_{j<m} (x/2)^j / j!
        for (x, m) in [(26.2, 6u32), (10.0, 6), (120.0, 60), (5.0, 1), (300.0, 100)] {
            let h = 0.5 * x;
            let mut term = 1.0;
            let mut sum = 1.0;
            for j in 1..m {
                term *= h / f64::from(j);
                sum += term;
            }
            let exact_sf = libm::exp(-h) * sum;
            let sf = chi2_sf(x, 2 * m).unwrap();
            assert!(
                (sf - exact_sf).abs() < 1e-12,
                "x={x} dof={} got {sf} want {exact_sf}",
                2 * m
            );
        }
    }

    #[test]
    fn threshold_table_values() {
        assert!((chi2_cdf(26.2, 12).unwrap() - 0.990).abs() < 5e-4);
        assert!((chi2_quantile(0.99, 12).unwrap() - 26.217).abs() < 0.01);
        assert!((chi2_quantile(0.999, 12).unwrap() - 32.909).abs() < 0.01);
        assert_eq!(chi2_quantile(0.0, 12).unwrap(), 0.0);
    }

    #[test]
    fn quantile_inverts_cdf_on_a_grid() {
        for &dof in &[1u32, 2, 5, 12, 60, 120, 1200] {
            for &x in &[0.3, 1.0, 4.0, 12.0, 26.2, 100.0, 1200.0, 1500.0] {
                let p = chi2_cdf(x, dof).unwrap();
                if p >= 1.0 - 1e-14 || p <= 1e-300 {
                    continue;
                }
                let back = chi2_quantile(p, dof).unwrap();
                let p_back = chi2_cdf(back, dof).unwrap();
                assert!((p_back - p).abs() < 1e-8, "dof={dof} x={x}");
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(chi2_cdf(-1.0, 4).is_err());
        assert!(chi2_cdf(1.0, 0).is_err());
        assert!(chi2_quantile(1.0, 12).is_err());
        assert!(chi2_quantile(-0.1, 12).is_err());
        assert!(chi2_quantile(f64::NAN, 12).is_err());
        assert!(regularized_gamma_p(0.0, 1.0).is_err());
    }

    #[test]
    fn cdf_and_sf_are_complementary() {
        for &dof in &[2u32, 12, 120, 1200] {
            for i in 0..50 {
                let x = f64::from(i) * f64::from(dof) / 20.0;
                let s = chi2_cdf(x, dof).unwrap() + chi2_sf(x, dof).unwrap();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }
}
