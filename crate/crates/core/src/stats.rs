//! Sample statistics and the diagnostic tests used across the pipeline:
//! autocorrelations, Ljung-Box whiteness, Kolmogorov-Smirnov goodness of
//! fit, and the Mann-Kendall trend test.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Result, VvixError};

/// First four sample moments. `kurtosis` is the raw standardized fourth
/// moment (3 for a normal sample), not excess.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (n - 1 denominator).
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Mean, unbiased variance, and standardized third/fourth moments.
pub fn sample_moments(xs: &[f64]) -> Result<Moments> {
    if xs.len() < 2 {
        return Err(VvixError::InsufficientData(format!(
            "need at least 2 observations for moments, got {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let m = mean(xs);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    // Relative floor: a constant series accumulates rounding dust in m2 on
    // the order of (eps * mean)^2, which must still count as degenerate.
    if m2 <= (f64::EPSILON * (1.0 + m.abs())).powi(2) {
        return Err(VvixError::Domain(
            "constant series: variance is zero, skewness and kurtosis undefined".into(),
        ));
    }
    Ok(Moments {
        mean: m,
        variance: m2 * n / (n - 1.0),
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2),
    })
}

/// Sample autocorrelation function; `out[0]` is 1 by construction.
pub fn acf(xs: &[f64], max_lag: usize) -> Vec<f64> {
    let n = xs.len();
    let m = mean(xs);
    let denom: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    let mut out = Vec::with_capacity(max_lag + 1);
    for k in 0..=max_lag {
        if k >= n || denom <= 0.0 {
            out.push(if k == 0 { 1.0 } else { 0.0 });
            continue;
        }
        let num: f64 = (k..n).map(|t| (xs[t] - m) * (xs[t - k] - m)).sum();
        out.push(num / denom);
    }
    out
}

/// Ljung-Box portmanteau statistic at a single lag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LjungBox {
    pub lag: usize,
    pub statistic: f64,
    pub p_value: f64,
}

/// Ljung-Box test for serial correlation up to `lag`.
///
/// Degenerate inputs (constant series) are reported with a zero p-value so
/// callers can flag them rather than crash.
pub fn ljung_box(xs: &[f64], lag: usize) -> Result<LjungBox> {
    let n = xs.len();
    if n <= lag + 1 {
        return Err(VvixError::InsufficientData(format!(
            "Ljung-Box at lag {lag} needs more than {} observations, got {n}",
            lag + 1
        )));
    }
    if variance(xs) <= 0.0 {
        return Ok(LjungBox {
            lag,
            statistic: f64::INFINITY,
            p_value: 0.0,
        });
    }
    let rho = acf(xs, lag);
    let nf = n as f64;
    let q: f64 = (1..=lag)
        .map(|k| rho[k] * rho[k] / (nf - k as f64))
        .sum::<f64>()
        * nf
        * (nf + 2.0);
    let chi = ChiSquared::new(lag as f64)
        .map_err(|e| VvixError::Numerical(format!("chi-squared setup failed: {e}")))?;
    Ok(LjungBox {
        lag,
        statistic: q,
        p_value: 1.0 - chi.cdf(q),
    })
}

/// Kolmogorov-Smirnov test result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test against N(mu, sd^2) with fully specified parameters.
pub fn ks_test_normal(xs: &[f64], mu: f64, sd: f64) -> Result<KsTest> {
    if xs.is_empty() || sd <= 0.0 {
        return Err(VvixError::Domain(
            "KS test needs a non-empty sample and positive scale".into(),
        ));
    }
    let normal = Normal::new(mu, sd)
        .map_err(|e| VvixError::Numerical(format!("normal setup failed: {e}")))?;
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = normal.cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    Ok(KsTest {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
    })
}

/// Two-sample KS test (asymptotic p-value).
pub fn ks_test_two_sample(xs: &[f64], ys: &[f64]) -> Result<KsTest> {
    if xs.is_empty() || ys.is_empty() {
        return Err(VvixError::Domain("KS test needs non-empty samples".into()));
    }
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n as f64 * m as f64) / (n as f64 + m as f64);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(KsTest {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
    })
}

/// Mann-Kendall trend test result; p_value is two-sided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannKendall {
    pub s: i64,
    pub z: f64,
    pub p_value: f64,
}

/// Mann-Kendall test for a monotone trend (no tie correction; intended for
/// continuous-valued series).
pub fn mann_kendall(xs: &[f64]) -> Result<MannKendall> {
    let n = xs.len();
    if n < 8 {
        return Err(VvixError::InsufficientData(format!(
            "Mann-Kendall needs at least 8 observations, got {n}"
        )));
    }
    let mut s: i64 = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += match xs[j].partial_cmp(&xs[i]).unwrap() {
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Less => -1,
                std::cmp::Ordering::Equal => 0,
            };
        }
    }
    let nf = n as f64;
    let var_s = nf * (nf - 1.0) * (2.0 * nf + 5.0) / 18.0;
    let z = if s > 0 {
        (s as f64 - 1.0) / var_s.sqrt()
    } else if s < 0 {
        (s as f64 + 1.0) / var_s.sqrt()
    } else {
        0.0
    };
    let normal = Normal::new(0.0, 1.0).unwrap();
    Ok(MannKendall {
        s,
        z,
        p_value: 2.0 * (1.0 - normal.cdf(z.abs())),
    })
}

/// Z-scores a series, returning the transformed values with the affine map
/// (mean, standard deviation) that inverts the transform.
pub fn zscore(xs: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    if xs.len() < 2 {
        return Err(VvixError::InsufficientData(
            "z-scoring needs at least 2 observations".into(),
        ));
    }
    let m = mean(xs);
    let v = variance(xs);
    if v <= (f64::EPSILON * (1.0 + m.abs())).powi(2) {
        return Err(VvixError::Domain("z-scoring a constant series".into()));
    }
    let sd = v.sqrt();
    Ok((xs.iter().map(|x| (x - m) / sd).collect(), m, sd))
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}
