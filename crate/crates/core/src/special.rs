//! Special functions: error function, normal CDF, log-gamma, the regularized
//! incomplete beta function and binomial distribution helpers.

use crate::error::{Error, Result};

const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 100_000;

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    if z == f64::INFINITY {
        return 1.0;
    }
    if z == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta function `I_x(a, b)`.
///
/// Continued fraction evaluated with the modified Lentz method; for
/// `x > (a+1)/(a+b+2)` the reflection `1 - I_{1-x}(b, a)` is used instead.
pub fn incbeta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid(format!("incbeta needs a, b > 0 (got {a}, {b})")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid(format!("incbeta needs x in [0, 1] (got {x})")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        return Ok(1.0 - incbeta_cf(1.0 - x, b, a)?);
    }
    incbeta_cf(x, a, b)
}

fn incbeta_cf(x: f64, a: f64, b: f64) -> Result<f64> {
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    let front = ln_front.exp() / a;

    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + num * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + num / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + num * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + num / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < CF_EPS {
            return Ok((front * h).clamp(0.0, 1.0));
        }
    }
    Err(Error::Numerical(format!(
        "incbeta continued fraction did not converge (x={x}, a={a}, b={b})"
    )))
}

/// `ln C(n, k)`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

pub fn binomial_pmf(n: u64, p: f64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    (ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()).exp()
}

/// `P(X ≤ k)` for `X ~ Binom(n, p)`, via `I_{1-p}(n-k, k+1)`.
pub fn binomial_cdf(n: u64, p: f64, k: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
    }
    if k >= n {
        return Ok(1.0);
    }
    incbeta(1.0 - p, (n - k) as f64, k as f64 + 1.0)
}

/// Smallest `k` with `P(X ≤ k) ≥ level`.
pub fn binomial_quantile(n: u64, p: f64, level: f64) -> Result<u64> {
    if !(0.0..=1.0).contains(&level) {
        return Err(Error::invalid(format!("level {level} outside [0, 1]")));
    }
    let mut lo = 0u64;
    let mut hi = n;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if binomial_cdf(n, p, mid)? >= level {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}

/// Central `confidence` band `[lo, hi]` of `Binom(n, p)` counts.
pub fn binomial_central_band(n: u64, p: f64, confidence: f64) -> Result<(u64, u64)> {
    if !(0.0..1.0).contains(&confidence) {
        return Err(Error::invalid(format!("confidence {confidence} outside [0, 1)")));
    }
    let tail = 0.5 * (1.0 - confidence);
    Ok((
        binomial_quantile(n, p, tail)?,
        binomial_quantile(n, p, 1.0 - tail)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_and_normal_cdf_values() {
        assert!((erf(0.5) - 0.520_499_877_813_046_5).abs() < 1e-15);
        assert!((normal_cdf(1.96) - 0.975_002_104_851_780).abs() < 1e-12);
        assert_eq!(normal_cdf(f64::INFINITY), 1.0);
        assert_eq!(normal_cdf(f64::NEG_INFINITY), 0.0);
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn incbeta_edges_and_symmetry() {
        for a in [1.0, 2.0, 5.0] {
            assert!((incbeta(0.5, a, a).unwrap() - 0.5).abs() < 1e-14);
            assert_eq!(incbeta(1.0, a, 3.0).unwrap(), 1.0);
            assert_eq!(incbeta(0.0, a, 3.0).unwrap(), 0.0);
        }
        // I_x(1, b) = 1 - (1-x)^b and I_x(a, 1) = x^a
        for &x in &[0.1, 0.37, 0.8, 0.99] {
            assert!((incbeta(x, 1.0, 4.0).unwrap() - (1.0 - (1.0f64 - x).powi(4))).abs() < 1e-14);
            assert!((incbeta(x, 3.0, 1.0).unwrap() - x.powi(3)).abs() < 1e-14);
        }
        assert!(incbeta(0.5, 0.0, 1.0).is_err());
        assert!(incbeta(1.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn binomial_cdf_matches_pmf_sum() {
        for &(n, p) in &[(10u64, 0.3), (50, 0.9), (1000, 10.0 / 11.0)] {
            let mut acc = 0.0;
            for k in 0..=n {
                acc += binomial_pmf(n, p, k);
                let cdf = binomial_cdf(n, p, k).unwrap();
                assert!((cdf - acc.min(1.0)).abs() < 1e-10, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn central_band_bracket() {
        let (lo, hi) = binomial_central_band(1000, 10.0 / 11.0, 0.999).unwrap();
        assert!(lo < 909 && hi > 909);
        assert!(binomial_cdf(1000, 10.0 / 11.0, hi).unwrap() >= 0.9995);
        assert!(binomial_cdf(1000, 10.0 / 11.0, hi - 1).unwrap() < 0.9995);
        assert!(binomial_cdf(1000, 10.0 / 11.0, lo).unwrap() >= 0.0005);
        assert!(binomial_cdf(1000, 10.0 / 11.0, lo - 1).unwrap() < 0.0005);
    }
}
