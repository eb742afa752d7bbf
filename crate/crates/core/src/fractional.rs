//! Long-memory time-series layer: ARFIMA(1,d,1) mean filtering and
//! FIGARCH(1,d,1) conditional variance, fitted by staged Gaussian QMLE.
//!
//! The mean equation phi(L)(1-L)^{d_m}(z_t - mu) = theta(L) eps_t is
//! inverted for the residual series eps_t; the variance equation maps
//! eps_t^2 to sigma_t^2 through a truncated ARCH(infinity) expansion.
//! Setting both fractional orders to zero collapses the pair to an
//! ARMA(1,1) mean with GARCH(1,1) errors.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VvixError};
use crate::optimize::{nelder_mead, Bounds, NmOptions};
use crate::stats;

/// Lag depth at which both fractional expansions are cut off by default.
pub const DEFAULT_TRUNCATION: usize = 1000;

/// Leading observations excluded from objectives and fitted outputs, where
/// the truncated filters still feel the unknown pre-sample history.
pub const DEFAULT_BURN_IN: usize = 50;

/// Shorter expansions leak too much hyperbolic tail mass to be usable.
const MIN_TRUNCATION: usize = 100;

/// Minimum series length accepted by the fitter.
const MIN_FIT_LEN: usize = 500;

/// Rounding slack when checking ARCH weight non-negativity. The weight
/// recursion accumulates at most ~1e-13 of error over 1000 lags, so
/// anything below this is a genuine sign violation rather than noise.
const WEIGHT_SLACK: f64 = 1e-12;

/// Mean-equation parameters: AR(1), MA(1), fractional order, and level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArfimaParams {
    pub phi: f64,
    pub theta: f64,
    pub d_m: f64,
    pub mu: f64,
}

impl ArfimaParams {
    pub fn new(phi: f64, theta: f64, d_m: f64, mu: f64) -> Result<Self> {
        let p = ArfimaParams { phi, theta, d_m, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.phi.is_finite() || self.phi.abs() >= 1.0 {
            return Err(VvixError::InvalidParameter(format!(
                "AR coefficient {} must lie strictly inside the unit circle",
                self.phi
            )));
        }
        if !self.theta.is_finite() || self.theta.abs() >= 1.0 {
            return Err(VvixError::InvalidParameter(format!(
                "MA coefficient {} must lie strictly inside the unit circle",
                self.theta
            )));
        }
        if !self.d_m.is_finite() || !(0.0..0.5).contains(&self.d_m) {
            return Err(VvixError::InvalidParameter(format!(
                "mean fractional order {} must lie in [0, 0.5)",
                self.d_m
            )));
        }
        if !self.mu.is_finite() {
            return Err(VvixError::InvalidParameter(format!(
                "level {} must be finite",
                self.mu
            )));
        }
        Ok(())
    }
}

/// Variance-equation parameters. `phi_v` is deliberately distinct from the
/// mean-equation AR coefficient; the two equations share nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FigarchParams {
    pub omega: f64,
    pub beta: f64,
    pub phi_v: f64,
    pub d_v: f64,
}

impl FigarchParams {
    pub fn new(omega: f64, beta: f64, phi_v: f64, d_v: f64) -> Result<Self> {
        let p = FigarchParams {
            omega,
            beta,
            phi_v,
            d_v,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.omega.is_finite() || self.omega <= 0.0 {
            return Err(VvixError::InvalidParameter(format!(
                "omega {} must be positive",
                self.omega
            )));
        }
        if !self.beta.is_finite() || !(0.0..1.0).contains(&self.beta) {
            return Err(VvixError::InvalidParameter(format!(
                "beta {} must lie in [0, 1)",
                self.beta
            )));
        }
        if !self.phi_v.is_finite() || self.phi_v.abs() >= 1.0 {
            return Err(VvixError::InvalidParameter(format!(
                "variance AR coefficient {} must lie strictly inside the unit circle",
                self.phi_v
            )));
        }
        if !self.d_v.is_finite() || !(0.0..1.0).contains(&self.d_v) {
            return Err(VvixError::InvalidParameter(format!(
                "variance fractional order {} must lie in [0, 1)",
                self.d_v
            )));
        }
        Ok(())
    }
}

/// Knobs for [`fit_arfima_figarch`]. `fix_d` pins (d_m, d_v), which turns
/// the fit into plain ARMA(1,1)-GARCH(1,1) estimation at (0, 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsFitConfig {
    pub trunc: usize,
    pub burn_in: usize,
    pub fix_d: Option<(f64, f64)>,
    /// Simplex evaluation budget per optimizer run.
    pub max_evals: usize,
}

impl Default for TsFitConfig {
    fn default() -> Self {
        TsFitConfig {
            trunc: DEFAULT_TRUNCATION,
            burn_in: DEFAULT_BURN_IN,
            fix_d: None,
            max_evals: 400,
        }
    }
}

/// Fitted model with its standardized innovations and variance path, both
/// starting after the burn-in. `converged = false` marks a fallback fit in
/// which the variance stage failed and a constant variance was substituted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsFit {
    pub arfima: ArfimaParams,
    pub figarch: FigarchParams,
    pub innovations: Vec<f64>,
    pub cond_var: Vec<f64>,
    pub loglik: f64,
    pub converged: bool,
}

/// Binomial expansion coefficients of (1 - L)^d: pi_0 = 1 and
/// pi_k = pi_{k-1} (k - 1 - d) / k, returned for k = 0..=n.
pub fn frac_diff_coeffs(d: f64, n: usize) -> Result<Vec<f64>> {
    if !d.is_finite() {
        return Err(VvixError::InvalidParameter(format!(
            "fractional order {d} must be finite"
        )));
    }
    if n == 0 {
        return Err(VvixError::InvalidParameter(
            "coefficient count must be at least 1".into(),
        ));
    }
    let mut pi = Vec::with_capacity(n + 1);
    pi.push(1.0);
    for k in 1..=n {
        let prev = pi[k - 1];
        pi.push(prev * ((k - 1) as f64 - d) / k as f64);
    }
    Ok(pi)
}

/// Inverts the mean equation for the residuals eps_t using expansions cut
/// at `trunc` lags. Pre-sample observations are stood in for by the sample
/// mean, so when `p.mu` equals the sample mean the unseen history
/// contributes exactly zero.
pub fn arfima_filter(series: &[f64], p: &ArfimaParams, trunc: usize) -> Result<Vec<f64>> {
    p.validate()?;
    check_trunc(trunc)?;
    if series.len() < 2 {
        return Err(VvixError::InsufficientData(format!(
            "mean filter needs at least 2 observations, got {}",
            series.len()
        )));
    }
    if series.iter().any(|z| !z.is_finite()) {
        return Err(VvixError::Domain("series contains non-finite values".into()));
    }

    let pi = frac_diff_coeffs(p.d_m, trunc)?;
    let suf = suffix_sums(&pi);
    let pre = stats::mean(series) - p.mu;
    // Reversed coefficients turn each lag sum into a forward contiguous
    // dot product.
    let pi_rev: Vec<f64> = pi.iter().rev().copied().collect();
    let x: Vec<f64> = series.iter().map(|z| z - p.mu).collect();

    let n = series.len();
    let mut eps = Vec::with_capacity(n);
    let mut y_prev = pre * suf[0];
    let mut e_prev = 0.0;
    for t in 0..n {
        let kmax = t.min(trunc);
        let y = dot(&pi_rev[trunc - kmax..], &x[t - kmax..=t]) + pre * suf[kmax + 1];
        let e = y - p.phi * y_prev - p.theta * e_prev;
        eps.push(e);
        y_prev = y;
        e_prev = e;
    }
    Ok(eps)
}

/// ARCH(infinity) weights lambda_1..lambda_trunc implied by
/// lambda(L) = 1 - (1 - beta L)^{-1} (1 - phi_v L)(1 - L)^{d_v}.
///
/// A weight below the rounding slack is a parameter rejection; negative
/// residues within the slack are clamped to zero.
pub fn arch_weights(p: &FigarchParams, trunc: usize) -> Result<Vec<f64>> {
    p.validate()?;
    check_trunc(trunc)?;
    let pi = frac_diff_coeffs(p.d_v, trunc)?;
    let mut lambda = Vec::with_capacity(trunc);
    let mut a_prev = 1.0;
    for k in 1..=trunc {
        let c_k = pi[k] - p.phi_v * pi[k - 1];
        let a_k = c_k + p.beta * a_prev;
        let l = -a_k;
        if l < -WEIGHT_SLACK {
            return Err(VvixError::ParameterRejected(format!(
                "ARCH weight lambda_{k} = {l:.6e} is negative"
            )));
        }
        lambda.push(l.max(0.0));
        a_prev = a_k;
    }
    Ok(lambda)
}

/// Conditional variance path sigma_t^2 = omega/(1-beta) + lambda(L) eps_t^2
/// with the expansion cut at `trunc` lags. Pre-sample squared residuals are
/// stood in for by their sample mean.
pub fn figarch_variance(eps2: &[f64], p: &FigarchParams, trunc: usize) -> Result<Vec<f64>> {
    if eps2.is_empty() {
        return Err(VvixError::InsufficientData(
            "variance filter needs at least one observation".into(),
        ));
    }
    if eps2.iter().any(|e| !e.is_finite() || *e < 0.0) {
        return Err(VvixError::Domain(
            "squared residuals must be finite and non-negative".into(),
        ));
    }
    let lambda = arch_weights(p, trunc)?;
    let suf = suffix_sums(&lambda);
    let lam_rev: Vec<f64> = lambda.iter().rev().copied().collect();
    let m = stats::mean(eps2);
    let base = p.omega / (1.0 - p.beta);

    let n = eps2.len();
    let mut sig2 = Vec::with_capacity(n);
    for t in 0..n {
        let kmax = t.min(trunc);
        let acc = base + dot(&lam_rev[trunc - kmax..], &eps2[t - kmax..t]) + m * suf[kmax];
        sig2.push(acc);
    }
    Ok(sig2)
}

/// Simulates the pair driven by the given standardized shocks, dropping the
/// first `burn_in` observations. The pre-sample squared residual is the
/// fixed point of the truncated variance filter, so paths start at a
/// self-consistent variance level instead of zero.
pub fn simulate_arfima_figarch(
    mean: &ArfimaParams,
    var: &FigarchParams,
    shocks: &[f64],
    burn_in: usize,
    trunc: usize,
) -> Result<Vec<f64>> {
    mean.validate()?;
    check_trunc(trunc)?;
    if shocks.len() <= burn_in {
        return Err(VvixError::InsufficientData(format!(
            "need more shocks than the burn-in, got {} for burn-in {burn_in}",
            shocks.len()
        )));
    }
    if shocks.iter().any(|v| !v.is_finite()) {
        return Err(VvixError::Domain("shocks contain non-finite values".into()));
    }
    let lambda = arch_weights(var, trunc)?;
    let suf = suffix_sums(&lambda);
    let sum_lambda = suf[0];
    if sum_lambda >= 1.0 - 1e-9 {
        return Err(VvixError::ParameterRejected(format!(
            "truncated ARCH weights sum to {sum_lambda:.9}; no finite pre-sample variance exists"
        )));
    }
    let base = var.omega / (1.0 - var.beta);
    let pre_var = base / (1.0 - sum_lambda);

    let pi = frac_diff_coeffs(mean.d_m, trunc)?;
    let lam_rev: Vec<f64> = lambda.iter().rev().copied().collect();
    let pi_rev: Vec<f64> = pi.iter().rev().copied().collect();
    let n = shocks.len();
    let mut eps2 = Vec::with_capacity(n);
    let mut eps = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut y_prev = 0.0;
    for t in 0..n {
        let kmax = t.min(trunc);
        let s2 = base + dot(&lam_rev[trunc - kmax..], &eps2[t - kmax..t]) + pre_var * suf[kmax];
        let e = s2.sqrt() * shocks[t];
        let e_prev = if t == 0 { 0.0 } else { eps[t - 1] };
        let y = mean.phi * y_prev + e + mean.theta * e_prev;
        // pi_rev keeps pi_0 as its last element; stopping one short leaves
        // the k = 1..=kmax history sum.
        let xt = y - dot(&pi_rev[trunc - kmax..trunc], &x[t - kmax..t]);
        eps2.push(e * e);
        eps.push(e);
        x.push(xt);
        z.push(mean.mu + xt);
        y_prev = y;
    }
    Ok(z[burn_in..].to_vec())
}

/// Sample autocorrelations for lags 0..=max_lag, with the lag budget held
/// below a quarter of the sample length.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if series.len() < 4 || max_lag >= series.len() / 4 {
        return Err(VvixError::Domain(format!(
            "lag budget {max_lag} must stay below a quarter of the sample length {}",
            series.len()
        )));
    }
    Ok(stats::acf(series, max_lag))
}

/// Fits the pair by Gaussian quasi-maximum likelihood: a conditional
/// sum-of-squares stage for the mean equation, a likelihood stage for the
/// variance equation, then one joint polish of all free coordinates. The
/// level is held at the sample mean throughout. The search is multistart
/// from a fixed list, so identical inputs give identical fits.
pub fn fit_arfima_figarch(series: &[f64], cfg: &TsFitConfig) -> Result<TsFit> {
    if series.len() < MIN_FIT_LEN {
        return Err(VvixError::InsufficientData(format!(
            "fit needs at least {MIN_FIT_LEN} observations, got {}",
            series.len()
        )));
    }
    if series.iter().any(|z| !z.is_finite()) {
        return Err(VvixError::Domain("series contains non-finite values".into()));
    }
    if stats::variance(series) <= 0.0 {
        return Err(VvixError::InvalidParameter(
            "series is constant; nothing to fit".into(),
        ));
    }
    check_trunc(cfg.trunc)?;
    if cfg.burn_in >= series.len() / 4 {
        return Err(VvixError::InvalidParameter(format!(
            "burn-in {} must stay below a quarter of the sample length {}",
            cfg.burn_in,
            series.len()
        )));
    }
    let (fix_dm, fix_dv) = match cfg.fix_d {
        Some((dm, dv)) => {
            if !dm.is_finite() || !(0.0..0.5).contains(&dm) {
                return Err(VvixError::InvalidParameter(format!(
                    "pinned d_m {dm} must lie in [0, 0.5)"
                )));
            }
            if !dv.is_finite() || !(0.0..1.0).contains(&dv) {
                return Err(VvixError::InvalidParameter(format!(
                    "pinned d_v {dv} must lie in [0, 1)"
                )));
            }
            (Some(dm), Some(dv))
        }
        None => (None, None),
    };

    let mu = stats::mean(series);
    let burn = cfg.burn_in;
    let trunc = cfg.trunc;
    let opts = NmOptions {
        max_evals: cfg.max_evals,
        x_tol: 1e-7,
        f_tol: 1e-9,
    };

    // Stage A: conditional sum of squares over the mean block.
    let css = |x: &[f64]| -> f64 {
        let p = mean_from(x, fix_dm, mu);
        match arfima_filter(series, &p, trunc) {
            Ok(eps) => eps[burn..].iter().map(|e| e * e).sum(),
            Err(_) => f64::INFINITY,
        }
    };
    let (mean_bounds, mean_scale, mean_starts) = mean_search_space(fix_dm);
    let mut best_a: Option<(f64, Vec<f64>)> = None;
    for start in &mean_starts {
        let res = nelder_mead(css, start, &mean_scale, &mean_bounds, &opts);
        if best_a.as_ref().is_none_or(|(f, _)| res.f < *f) {
            best_a = Some((res.f, res.x));
        }
    }
    let (f_a, x_a) = best_a.expect("mean stage has a fixed non-empty start list");
    if !f_a.is_finite() {
        return Err(VvixError::Numerical(
            "mean stage found no admissible parameters".into(),
        ));
    }
    let p_a = mean_from(&x_a, fix_dm, mu);

    let eps_a = arfima_filter(series, &p_a, trunc)?;
    let eps2_a: Vec<f64> = eps_a.iter().map(|e| e * e).collect();
    let var_e = stats::variance(&eps_a);
    if var_e <= 0.0 {
        return Err(VvixError::Numerical(
            "mean-stage residuals are degenerate".into(),
        ));
    }

    // Stage B: Gaussian likelihood over the variance block, residuals held
    // at the stage A values.
    let nll_b = |x: &[f64]| -> f64 {
        let q = var_from(x, fix_dv);
        match figarch_variance(&eps2_a, &q, trunc) {
            Ok(sig2) => gaussian_nll_core(&eps2_a, &sig2, burn),
            Err(_) => f64::INFINITY,
        }
    };
    let (var_bounds, var_scale, var_starts) = var_search_space(var_e, fix_dv);
    let mut best_b: Option<(f64, Vec<f64>)> = None;
    for start in &var_starts {
        let res = nelder_mead(nll_b, start, &var_scale, &var_bounds, &opts);
        if best_b.as_ref().is_none_or(|(f, _)| res.f < *f) {
            best_b = Some((res.f, res.x));
        }
    }
    let (f_b, x_b) = best_b.expect("variance stage has a fixed non-empty start list");
    if !f_b.is_finite() {
        // Variance stage failed outright: report the mean-stage fit with a
        // constant variance so callers still get residuals to inspect.
        let fallback = FigarchParams::new(var_e, 0.0, 0.0, 0.0)?;
        return assemble_fit(series, p_a, fallback, cfg, false);
    }

    // Stage C: joint polish of every free coordinate under the full
    // likelihood, started from the stage A and B solutions.
    let joint = |x: &[f64]| -> f64 {
        let split = x_a.len();
        let p = mean_from(&x[..split], fix_dm, mu);
        let q = var_from(&x[split..], fix_dv);
        let eps = match arfima_filter(series, &p, trunc) {
            Ok(e) => e,
            Err(_) => return f64::INFINITY,
        };
        let eps2: Vec<f64> = eps.iter().map(|e| e * e).collect();
        match figarch_variance(&eps2, &q, trunc) {
            Ok(sig2) => gaussian_nll_core(&eps2, &sig2, burn),
            Err(_) => f64::INFINITY,
        }
    };
    let x0: Vec<f64> = x_a.iter().chain(&x_b).copied().collect();
    let joint_bounds = Bounds::new(
        mean_bounds
            .lo
            .iter()
            .chain(&var_bounds.lo)
            .copied()
            .collect(),
        mean_bounds
            .hi
            .iter()
            .chain(&var_bounds.hi)
            .copied()
            .collect(),
    );
    let joint_scale: Vec<f64> = mean_scale
        .iter()
        .map(|s| 0.2 * s)
        .chain(var_scale.iter().map(|s| 0.2 * s))
        .collect();
    let res = nelder_mead(joint, &x0, &joint_scale, &joint_bounds, &opts);

    let (p_fin, q_fin) = if res.f.is_finite() {
        let split = x_a.len();
        (
            mean_from(&res.x[..split], fix_dm, mu),
            var_from(&res.x[split..], fix_dv),
        )
    } else {
        (p_a, var_from(&x_b, fix_dv))
    };
    assemble_fit(series, p_fin, q_fin, cfg, true)
}

fn check_trunc(trunc: usize) -> Result<()> {
    if trunc < MIN_TRUNCATION {
        return Err(VvixError::InvalidParameter(format!(
            "truncation {trunc} must be at least {MIN_TRUNCATION} lags"
        )));
    }
    Ok(())
}

/// suf[k] = sum of w[k..]; one extra trailing zero so callers can index
/// one past the end.
fn suffix_sums(w: &[f64]) -> Vec<f64> {
    let mut suf = vec![0.0; w.len() + 1];
    for k in (0..w.len()).rev() {
        suf[k] = suf[k + 1] + w[k];
    }
    suf
}

/// Dot product with four accumulator lanes. The filters spend nearly all
/// their time here, and a single serial accumulator would pin the loop to
/// the floating-point add latency.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        lanes[0] += a[j] * b[j];
        lanes[1] += a[j + 1] * b[j + 1];
        lanes[2] += a[j + 2] * b[j + 2];
        lanes[3] += a[j + 3] * b[j + 3];
    }
    let mut tail = 0.0;
    for j in 4 * chunks..a.len() {
        tail += a[j] * b[j];
    }
    (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + tail
}

fn mean_from(x: &[f64], fix_dm: Option<f64>, mu: f64) -> ArfimaParams {
    ArfimaParams {
        phi: x[0],
        theta: x[1],
        d_m: fix_dm.unwrap_or_else(|| x[2]),
        mu,
    }
}

fn var_from(x: &[f64], fix_dv: Option<f64>) -> FigarchParams {
    FigarchParams {
        omega: 10f64.powf(x[0]),
        beta: x[1],
        phi_v: x[2],
        d_v: fix_dv.unwrap_or_else(|| x[3]),
    }
}

fn mean_search_space(fix_dm: Option<f64>) -> (Bounds, Vec<f64>, Vec<Vec<f64>>) {
    let mut lo = vec![-0.95, -0.95];
    let mut hi = vec![0.95, 0.95];
    let mut scale = vec![0.2, 0.2];
    let mut starts = vec![
        vec![0.2, 0.0],
        vec![0.5, -0.3],
        vec![-0.2, 0.3],
    ];
    if fix_dm.is_none() {
        lo.push(0.0);
        hi.push(0.4999);
        scale.push(0.1);
        for (start, d0) in starts.iter_mut().zip([0.15, 0.05, 0.35]) {
            start.push(d0);
        }
    }
    (Bounds::new(lo, hi), scale, starts)
}

fn var_search_space(var_e: f64, fix_dv: Option<f64>) -> (Bounds, Vec<f64>, Vec<Vec<f64>>) {
    let lw = var_e.log10();
    let mut lo = vec![lw - 4.0, 0.0, 0.0];
    let mut hi = vec![lw + 2.0, 0.97, 0.98];
    let mut scale = vec![0.4, 0.15, 0.15];
    let mut starts = vec![
        vec![lw - 0.3, 0.3, 0.4],
        vec![lw - 1.0, 0.6, 0.7],
        vec![lw - 0.2, 0.05, 0.1],
    ];
    if fix_dv.is_none() {
        lo.push(0.0);
        hi.push(0.99);
        scale.push(0.08);
        for (start, d0) in starts.iter_mut().zip([0.05, 0.15, 0.35]) {
            start.push(d0);
        }
    }
    (Bounds::new(lo, hi), scale, starts)
}

/// Negative Gaussian log-likelihood without the 2-pi constant, summed past
/// the burn-in.
fn gaussian_nll_core(eps2: &[f64], sig2: &[f64], burn: usize) -> f64 {
    let mut acc = 0.0;
    for t in burn..eps2.len() {
        acc += sig2[t].ln() + eps2[t] / sig2[t];
    }
    0.5 * acc
}

fn assemble_fit(
    series: &[f64],
    p: ArfimaParams,
    q: FigarchParams,
    cfg: &TsFitConfig,
    converged: bool,
) -> Result<TsFit> {
    let eps = arfima_filter(series, &p, cfg.trunc)?;
    let eps2: Vec<f64> = eps.iter().map(|e| e * e).collect();
    let sig2 = figarch_variance(&eps2, &q, cfg.trunc)?;
    let burn = cfg.burn_in;
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    let mut loglik = 0.0;
    let mut innovations = Vec::with_capacity(eps.len() - burn);
    for t in burn..eps.len() {
        loglik -= 0.5 * (ln_2pi + sig2[t].ln() + eps2[t] / sig2[t]);
        innovations.push(eps[t] / sig2[t].sqrt());
    }
    Ok(TsFit {
        arfima: p,
        figarch: q,
        innovations,
        cond_var: sig2[burn..].to_vec(),
        loglik,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::stats::ljung_box;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian_shocks(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = stream_rng(seed, 77);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    fn oracle_mean() -> ArfimaParams {
        ArfimaParams::new(0.3, -0.2, 0.268, 3.0).unwrap()
    }

    fn oracle_var() -> FigarchParams {
        FigarchParams::new(0.05, 0.4, 0.45, 0.01).unwrap()
    }

    fn simulated_path(seed: u64, n: usize) -> Vec<f64> {
        let shocks = gaussian_shocks(seed, n + 1000);
        simulate_arfima_figarch(&oracle_mean(), &oracle_var(), &shocks, 1000, DEFAULT_TRUNCATION)
            .unwrap()
    }

    #[test]
    fn frac_diff_coeffs_match_the_reference_expansions() {
        let id = frac_diff_coeffs(0.0, 5).unwrap();
        assert_eq!(id, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0], "d = 0 is the identity");

        let diff = frac_diff_coeffs(1.0, 5).unwrap();
        assert_eq!(
            diff,
            vec![1.0, -1.0, 0.0, 0.0, 0.0, 0.0],
            "d = 1 is the first difference"
        );

        let pi = frac_diff_coeffs(0.268, 10).unwrap();
        assert_eq!(pi.len(), 11, "n + 1 coefficients come back");
        assert!(
            (pi[1] + 0.268).abs() < 1e-15,
            "pi_1 should be -d, got {}",
            pi[1]
        );
        assert!(
            (pi[2] + 0.098088).abs() < 1e-9,
            "pi_2 should be -0.098088, got {}",
            pi[2]
        );
        for (k, v) in pi.iter().enumerate().skip(1) {
            assert!(*v < 0.0, "pi_{k} = {v} should be negative for d in (0,1)");
        }
    }

    #[test]
    fn frac_diff_coeffs_reject_degenerate_requests() {
        assert!(frac_diff_coeffs(0.268, 0).is_err(), "zero-length expansion");
        assert!(frac_diff_coeffs(f64::NAN, 5).is_err(), "non-finite order");
    }

    #[test]
    fn arfima_filter_reduces_to_demeaning_for_white_parameters() {
        let mut rng = stream_rng(11, 0);
        let series: Vec<f64> = (0..300).map(|_| 0.7 + rng.sample::<f64, _>(StandardNormal)).collect();
        let p = ArfimaParams::new(0.0, 0.0, 0.0, 0.7).unwrap();
        let eps = arfima_filter(&series, &p, MIN_TRUNCATION).unwrap();
        for (t, (e, z)) in eps.iter().zip(&series).enumerate() {
            assert_eq!(*e, z - 0.7, "index {t}: white filter must demean exactly");
        }
    }

    #[test]
    fn arfima_filter_rejects_nonstationary_parameters() {
        let series = vec![1.0, 2.0, 3.0, 4.0];
        let unit_root = ArfimaParams {
            phi: 1.0,
            theta: 0.0,
            d_m: 0.0,
            mu: 0.0,
        };
        assert!(arfima_filter(&series, &unit_root, 100).is_err(), "unit AR root");

        let bad_d = ArfimaParams {
            phi: 0.0,
            theta: 0.0,
            d_m: 0.5,
            mu: 0.0,
        };
        assert!(arfima_filter(&series, &bad_d, 100).is_err(), "d at 0.5");

        let p = ArfimaParams::new(0.2, 0.1, 0.1, 0.0).unwrap();
        assert!(
            arfima_filter(&series, &p, 50).is_err(),
            "truncation below the minimum"
        );
    }

    #[test]
    fn arfima_residuals_are_white_on_simulated_paths() {
        let p = oracle_mean();
        let q = oracle_var();
        let mut passes = 0;
        for seed in 0..100u64 {
            let shocks = gaussian_shocks(1000 + seed, 2300);
            let z = simulate_arfima_figarch(&p, &q, &shocks, 800, DEFAULT_TRUNCATION).unwrap();
            let eps = arfima_filter(&z, &p, DEFAULT_TRUNCATION).unwrap();
            // The first residuals still carry pre-sample transient, so test
            // whiteness on the settled tail only.
            let lb = ljung_box(&eps[200..], 20).unwrap();
            if lb.p_value > 0.05 {
                passes += 1;
            }
        }
        assert!(
            passes >= 90,
            "Ljung-Box at 5% should pass in at least 90 of 100 seeds, got {passes}"
        );
    }

    #[test]
    fn doubling_the_truncation_leaves_short_series_residuals_unchanged() {
        // With fewer observations than the truncation, lags beyond the
        // sample only ever touch pre-sample values, and the sample-mean
        // convention makes those terms exactly zero when mu is the sample
        // mean. Doubling the cutoff therefore cannot move the residuals.
        let z = simulated_path(42, 480);
        let mu = stats::mean(&z);
        let p = ArfimaParams::new(0.3, -0.2, 0.268, mu).unwrap();
        let short = arfima_filter(&z, &p, 500).unwrap();
        let long = arfima_filter(&z, &p, 1000).unwrap();
        let rms = (short
            .iter()
            .zip(&long)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / short.len() as f64)
            .sqrt();
        assert!(rms < 1e-6, "truncation doubling moved residuals by RMS {rms:.3e}");
    }

    #[test]
    fn figarch_matches_a_direct_garch_recursion_at_zero_memory() {
        let mut rng = stream_rng(7, 1);
        let eps2: Vec<f64> = (0..600)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                0.1 + 0.05 * z * z
            })
            .collect();
        let (omega, beta, phi_v) = (0.05, 0.7, 0.75);
        let p = FigarchParams::new(omega, beta, phi_v, 0.0).unwrap();
        let fig = figarch_variance(&eps2, &p, DEFAULT_TRUNCATION).unwrap();

        // Reference GARCH(1,1) recursion with alpha = phi_v - beta and the
        // same pre-sample convention (all unseen eps^2 at the sample mean).
        let alpha = phi_v - beta;
        let m = stats::mean(&eps2);
        let mut garch = Vec::with_capacity(eps2.len());
        let mut prev = (omega + alpha * m) / (1.0 - beta);
        for t in 0..eps2.len() {
            let cur = if t == 0 {
                prev
            } else {
                omega + alpha * eps2[t - 1] + beta * prev
            };
            garch.push(cur);
            prev = cur;
        }

        let max_diff = fig
            .iter()
            .zip(&garch)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(
            max_diff < 1e-10,
            "d_v = 0 should reproduce GARCH(1,1) exactly, max diff {max_diff:.3e}"
        );
    }

    #[test]
    fn figarch_variance_converges_on_constant_input() {
        // GARCH case: constant eps^2 at the unconditional variance is a
        // fixed point of the recursion.
        let (omega, beta, phi_v) = (0.2, 0.5, 0.6);
        let alpha = phi_v - beta;
        let c = omega / (1.0 - alpha - beta);
        let eps2 = vec![c; 400];
        let p = FigarchParams::new(omega, beta, phi_v, 0.0).unwrap();
        let sig2 = figarch_variance(&eps2, &p, DEFAULT_TRUNCATION).unwrap();
        for (t, s) in sig2.iter().enumerate() {
            assert!(
                (s - c).abs() < 1e-12,
                "t = {t}: fixed point should hold exactly, got {s} vs {c}"
            );
        }

        // Fractional case: after a disturbed stretch the path settles back
        // to the level implied by the truncated weights.
        let q = FigarchParams::new(0.1, 0.3, 0.35, 0.3).unwrap();
        let lambda = arch_weights(&q, DEFAULT_TRUNCATION).unwrap();
        let sum_lambda: f64 = lambda.iter().sum();
        let base = q.omega / (1.0 - q.beta);
        let level = 0.7;
        let mut eps2 = vec![3.0; 10];
        eps2.extend(std::iter::repeat_n(level, 1200));
        let sig2 = figarch_variance(&eps2, &q, DEFAULT_TRUNCATION).unwrap();
        let limit = base + level * sum_lambda;
        let last = *sig2.last().unwrap();
        assert!(
            (last - limit).abs() < 1e-12,
            "settled variance {last} should equal the implied level {limit}"
        );
        assert!(
            (sig2[10] - limit).abs() > 1e-3,
            "the disturbed stretch should be visible early on"
        );
    }

    #[test]
    fn arch_weights_decay_hyperbolically_at_small_memory() {
        let p = FigarchParams::new(0.05, 0.3, 0.35, 0.01).unwrap();
        let lambda = arch_weights(&p, DEFAULT_TRUNCATION).unwrap();
        assert!(lambda.iter().all(|l| *l >= 0.0), "weights must be non-negative");
        let total: f64 = lambda.iter().sum();
        assert!(total < 1.0, "truncated weights must sum below 1, got {total}");

        let expected = 2f64.powf(1.0 + p.d_v);
        for k in [250usize, 350, 480] {
            let ratio = lambda[k - 1] / lambda[2 * k - 1];
            assert!(
                (ratio - expected).abs() < 0.02,
                "lambda_{k}/lambda_{} = {ratio:.5} should approach {expected:.5}",
                2 * k
            );
        }
    }

    #[test]
    fn arch_weight_negativity_is_rejected() {
        // beta far above phi_v makes lambda_1 = d_v + phi_v - beta negative.
        let p = FigarchParams::new(0.05, 0.8, 0.1, 0.0).unwrap();
        let err = arch_weights(&p, DEFAULT_TRUNCATION).unwrap_err();
        assert!(
            matches!(err, VvixError::ParameterRejected(_)),
            "expected a parameter rejection, got {err:?}"
        );
        let err = figarch_variance(&[0.1, 0.2, 0.3], &p, DEFAULT_TRUNCATION).unwrap_err();
        assert!(matches!(err, VvixError::ParameterRejected(_)));
    }

    #[test]
    fn parameter_constructors_validate_ranges() {
        assert!(ArfimaParams::new(1.0, 0.0, 0.1, 0.0).is_err(), "phi at 1");
        assert!(ArfimaParams::new(0.0, -1.0, 0.1, 0.0).is_err(), "theta at -1");
        assert!(ArfimaParams::new(0.0, 0.0, -0.01, 0.0).is_err(), "negative d_m");
        assert!(ArfimaParams::new(0.0, 0.0, 0.1, f64::NAN).is_err(), "NaN level");
        assert!(FigarchParams::new(0.0, 0.2, 0.3, 0.1).is_err(), "zero omega");
        assert!(FigarchParams::new(0.1, 1.0, 0.3, 0.1).is_err(), "beta at 1");
        assert!(FigarchParams::new(0.1, 0.2, 0.3, 1.0).is_err(), "d_v at 1");
        let err = FigarchParams::new(0.1, 0.2, 0.3, f64::INFINITY).unwrap_err();
        assert!(err.is_validation(), "range errors are validation errors");
    }

    #[test]
    fn simulate_rejects_unusable_inputs() {
        let p = oracle_mean();
        let q = oracle_var();
        assert!(
            simulate_arfima_figarch(&p, &q, &[0.1; 10], 10, DEFAULT_TRUNCATION).is_err(),
            "burn-in consumes every shock"
        );
        let mut shocks = vec![0.0; 50];
        shocks[30] = f64::NAN;
        assert!(
            simulate_arfima_figarch(&p, &q, &shocks, 10, DEFAULT_TRUNCATION).is_err(),
            "non-finite shock"
        );
    }

    #[test]
    fn simulated_series_keep_positive_long_memory_at_lag_22() {
        let mut positive = 0;
        for seed in 0..30u64 {
            let z = simulated_path(3000 + seed, 3000);
            let rho = acf(&z, 30).unwrap();
            if rho[22] > 0.0 {
                positive += 1;
            }
        }
        assert!(
            positive >= 24,
            "lag-22 autocorrelation should stay positive in at least 24 of 30 seeds, got {positive}"
        );
    }

    #[test]
    fn acf_follows_the_reference_shapes() {
        let noise = gaussian_shocks(5, 10_000);
        let rho = acf(&noise, 40).unwrap();
        assert_eq!(rho[0], 1.0, "lag zero is 1 by construction");
        let band = 2.0 / (noise.len() as f64).sqrt();
        let inside = rho[1..].iter().filter(|r| r.abs() < band).count();
        assert!(
            inside >= 38,
            "white noise should keep at least 38 of 40 lags inside the Bartlett band, got {inside}"
        );

        let mut ar = Vec::with_capacity(20_000);
        let mut prev = 0.0;
        let mut rng = stream_rng(6, 2);
        for _ in 0..20_000 {
            let e: f64 = rng.sample(StandardNormal);
            prev = 0.5 * prev + e;
            ar.push(prev);
        }
        let rho = acf(&ar, 8).unwrap();
        for (k, r) in rho.iter().enumerate().skip(1) {
            let want = 0.5f64.powi(k as i32);
            assert!(
                (r - want).abs() < 0.05,
                "AR(1) acf at lag {k} should be near {want:.4}, got {r:.4}"
            );
        }

        assert!(acf(&noise, 2500).is_err(), "lag budget above a quarter of n");
    }

    #[test]
    fn fit_recovers_the_fractional_orders() {
        let z = simulated_path(2024, 5000);
        let fit = fit_arfima_figarch(&z, &TsFitConfig::default()).unwrap();
        assert!(fit.converged, "fit should not fall back");
        assert!(
            (fit.arfima.d_m - 0.268).abs() <= 0.10,
            "d_m should land near 0.268, got {}",
            fit.arfima.d_m
        );
        assert!(
            (fit.figarch.d_v - 0.01).abs() <= 0.08,
            "d_v should land near 0.01, got {}",
            fit.figarch.d_v
        );
        assert_eq!(
            fit.innovations.len(),
            z.len() - DEFAULT_BURN_IN,
            "innovations drop exactly the burn-in"
        );
        assert_eq!(fit.innovations.len(), fit.cond_var.len());
        assert!(fit.cond_var.iter().all(|v| *v > 0.0), "variance path must stay positive");
        let lb = ljung_box(&fit.innovations, 20).unwrap();
        assert!(
            lb.p_value > 0.05,
            "fitted innovations should pass Ljung-Box(20), got p = {:.4}",
            lb.p_value
        );
    }

    #[test]
    fn iid_gaussian_input_fits_vanishing_memory() {
        let mut rng = stream_rng(9, 3);
        let z: Vec<f64> = (0..5000)
            .map(|_| 3.0 + 0.5 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let fit = fit_arfima_figarch(&z, &TsFitConfig::default()).unwrap();
        assert!(
            fit.arfima.d_m.abs() <= 0.05,
            "white input should fit d_m near 0, got {}",
            fit.arfima.d_m
        );
        assert!(
            fit.figarch.d_v.abs() <= 0.05,
            "white input should fit d_v near 0, got {}",
            fit.figarch.d_v
        );
    }

    #[test]
    fn fitting_is_deterministic() {
        let z = simulated_path(77, 600);
        let cfg = TsFitConfig {
            trunc: 150,
            burn_in: 30,
            fix_d: None,
            max_evals: 120,
        };
        let a = fit_arfima_figarch(&z, &cfg).unwrap();
        let b = fit_arfima_figarch(&z, &cfg).unwrap();
        assert_eq!(a, b, "identical inputs must give bitwise identical fits");
    }

    #[test]
    fn fit_validates_its_inputs() {
        let z = simulated_path(1, 499);
        assert!(
            fit_arfima_figarch(&z, &TsFitConfig::default()).is_err(),
            "below the minimum length"
        );
        let constant = vec![2.0; 600];
        assert!(
            fit_arfima_figarch(&constant, &TsFitConfig::default()).is_err(),
            "constant series"
        );
        let z = simulated_path(1, 600);
        let cfg = TsFitConfig {
            fix_d: Some((0.6, 0.0)),
            ..TsFitConfig::default()
        };
        assert!(fit_arfima_figarch(&z, &cfg).is_err(), "pinned d_m out of range");
    }
}
