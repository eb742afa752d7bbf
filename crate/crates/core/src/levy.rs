//! Inverse Gaussian subordinators and the double-subordinated NDIG
//! log-price process.
//!
//! The log price is X_t = X_0 + mu3*t + gamma*U_t + rho*T(U_t) + sigma3*B_{T(U_t)},
//! where U and T are independent IG Levy subordinators and B is Brownian
//! motion. The characteristic function follows by conditioning twice: with
//! phi(z) = (lambda/mu)*(1 - sqrt(1 - 2*mu^2*z/lambda)) the IG cumulant
//! exponent, the log-CF at w is
//!
//!   mu3*w + phi_U( gamma*w + phi_T( rho*w + sigma3^2*w^2/2 ) ).
//!
//! Simulation is exact: IG marginals at horizon t are IG with mean mu*t and
//! shape lambda*t^2, drawn by the Michael-Schucany-Haas transformation, so
//! Monte Carlo output is a trustworthy oracle for the analytic CF and
//! moments.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, InverseGaussian, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VvixError};
use crate::rng::stream_rng;
use crate::stats::Moments;

/// Mean/shape parameters of an IG(lambda, mu) subordinator at unit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IgParams {
    pub mu: f64,
    pub lambda: f64,
}

impl IgParams {
    pub fn new(mu: f64, lambda: f64) -> Result<Self> {
        let p = IgParams { mu, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(VvixError::InvalidParameter(format!(
                "IG mean must be positive and finite, got {}",
                self.mu
            )));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(VvixError::InvalidParameter(format!(
                "IG shape must be positive and finite, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    /// Cumulants of IG(lambda, mu) up to order four.
    fn cum_derivs(&self) -> [f64; 4] {
        let (m, l) = (self.mu, self.lambda);
        [
            m,
            m.powi(3) / l,
            3.0 * m.powi(5) / (l * l),
            15.0 * m.powi(7) / (l * l * l),
        ]
    }
}

/// Full NDIG parameter set. `ig_t` clocks the Brownian motion, `ig_u` clocks
/// `ig_t`; `gamma` and `rho` load linearly on each clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NdigParams {
    pub mu3: f64,
    pub sigma3: f64,
    pub gamma: f64,
    pub rho: f64,
    pub ig_t: IgParams,
    pub ig_u: IgParams,
}

impl NdigParams {
    /// Parameters with both subordinator means normalized to 1, so intrinsic
    /// time is unbiased and only the shapes (lambda_t, lambda_u) remain free.
    pub fn standard(
        mu3: f64,
        sigma3: f64,
        gamma: f64,
        rho: f64,
        lambda_t: f64,
        lambda_u: f64,
    ) -> Result<Self> {
        let p = NdigParams {
            mu3,
            sigma3,
            gamma,
            rho,
            ig_t: IgParams::new(1.0, lambda_t)?,
            ig_u: IgParams::new(1.0, lambda_u)?,
        };
        p.validate()?;
        Ok(p)
    }

    /// `sigma3 = 0` is accepted here so degenerate drift-only simulation
    /// works; operations that divide by sigma3 (damping bound, pricing)
    /// reject it themselves.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mu3", self.mu3),
            ("sigma3", self.sigma3),
            ("gamma", self.gamma),
            ("rho", self.rho),
        ] {
            if !v.is_finite() {
                return Err(VvixError::InvalidParameter(format!(
                    "{name} must be finite, got {v}"
                )));
            }
        }
        if self.sigma3 < 0.0 {
            return Err(VvixError::InvalidParameter(format!(
                "sigma3 must be non-negative, got {}",
                self.sigma3
            )));
        }
        self.ig_t.validate()?;
        self.ig_u.validate()?;
        Ok(())
    }
}

/// One simulated log-price trajectory. `times[0] == 0` and `values[0]` is
/// the starting log price (0 by convention).
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: u64,
}

/// Trajectories of the two random clocks driving a path; used to check that
/// subordination never runs backwards.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockPath {
    pub times: Vec<f64>,
    pub u: Vec<f64>,
    pub t_of_u: Vec<f64>,
}

/// Density of IG(lambda, mu) at x.
pub fn ig_pdf(x: f64, p: IgParams) -> Result<f64> {
    p.validate()?;
    if !(x.is_finite() && x > 0.0) {
        return Err(VvixError::Domain(format!(
            "IG density is supported on x > 0, got {x}"
        )));
    }
    let (m, l) = (p.mu, p.lambda);
    let coeff = (l / (2.0 * std::f64::consts::PI * x.powi(3))).sqrt();
    let exponent = -l * (x - m) * (x - m) / (2.0 * m * m * x);
    Ok(coeff * exponent.exp())
}

/// Draws `n` samples of the IG subordinator at horizon `t`, i.e. from the
/// IG law with mean mu*t and shape lambda*t^2 (mean mu*t, variance
/// mu^3*t/lambda, additive across horizons).
pub fn ig_sample(p: IgParams, t: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    p.validate()?;
    if !(t.is_finite() && t > 0.0) {
        return Err(VvixError::Domain(format!("horizon must be positive, got {t}")));
    }
    if n == 0 {
        return Err(VvixError::Domain("sample count must be at least 1".into()));
    }
    let dist = InverseGaussian::new(p.mu * t, p.lambda * t * t)
        .map_err(|e| VvixError::InvalidParameter(format!("IG sampler setup: {e}")))?;
    let mut rng = stream_rng(seed, 0);
    Ok((0..n).map(|_| dist.sample(&mut rng)).collect())
}

/// IG cumulant exponent phi(z) = (lambda/mu)*(1 - sqrt(1 - 2*mu^2*z/lambda))
/// for complex z, written as x/(1+sqrt(1-x)) to avoid cancellation when the
/// shape is large. Principal square-root branch.
fn ig_cum_exponent(z: Complex64, p: IgParams) -> Complex64 {
    let x = z * (2.0 * p.mu * p.mu / p.lambda);
    let root = (Complex64::new(1.0, 0.0) - x).sqrt();
    (p.lambda / p.mu) * x / (Complex64::new(1.0, 0.0) + root)
}

/// Log characteristic/moment generating exponent of X_1: the CF at real v is
/// exp(ndig_log_cf(i*v, p)), and real arguments give the log-MGF where it
/// exists.
pub fn ndig_log_cf(w: Complex64, p: &NdigParams) -> Complex64 {
    let inner = p.rho * w + 0.5 * p.sigma3 * p.sigma3 * w * w;
    let t_exp = ig_cum_exponent(inner, p.ig_t);
    let u_arg = p.gamma * w + t_exp;
    p.mu3 * w + ig_cum_exponent(u_arg, p.ig_u)
}

/// Characteristic function of the one-step log return X_1.
pub fn ndig_cf(v: f64, p: &NdigParams) -> Complex64 {
    ndig_log_cf(Complex64::new(0.0, v), p).exp()
}

fn compose4(outer: [f64; 4], inner: [f64; 4]) -> [f64; 4] {
    let [o1, o2, o3, o4] = outer;
    let [i1, i2, i3, i4] = inner;
    [
        o1 * i1,
        o2 * i1 * i1 + o1 * i2,
        o3 * i1.powi(3) + 3.0 * o2 * i1 * i2 + o1 * i3,
        o4 * i1.powi(4)
            + 6.0 * o3 * i1 * i1 * i2
            + o2 * (3.0 * i2 * i2 + 4.0 * i1 * i3)
            + o1 * i4,
    ]
}

/// True when the log-MGF is defined at the single real point `s` (both
/// square-root arguments stay positive).
pub fn mgf_defined_at(p: &NdigParams, s: f64) -> bool {
    let inner = p.rho * s + 0.5 * p.sigma3 * p.sigma3 * s * s;
    let rad_t = 1.0 - 2.0 * p.ig_t.mu * p.ig_t.mu * inner / p.ig_t.lambda;
    if rad_t <= 0.0 {
        return false;
    }
    let t_exp = p.ig_t.lambda / p.ig_t.mu * (1.0 - rad_t.sqrt());
    let u_arg = p.gamma * s + t_exp;
    let rad_u = 1.0 - 2.0 * p.ig_u.mu * p.ig_u.mu * u_arg / p.ig_u.lambda;
    rad_u > 0.0
}

/// True when the log-MGF is real-analytic on [-w, w], the
/// exponential-moment condition behind moment validity and damping bounds.
pub fn mgf_domain_contains(p: &NdigParams, w: f64) -> bool {
    mgf_defined_at(p, w) && mgf_defined_at(p, -w)
}

const FD_STEP: f64 = 1e-3;

/// First four cumulants of X_1 by composing the IG cumulant series through
/// both subordinations (exact in closed form).
pub fn ndig_cumulants(p: &NdigParams) -> Result<[f64; 4]> {
    p.validate()?;
    if !mgf_domain_contains(p, 2.0 * FD_STEP) {
        return Err(VvixError::MomentsUndefined(format!(
            "exponential moment fails inside |w| <= {}",
            2.0 * FD_STEP
        )));
    }
    let inner = [p.rho, p.sigma3 * p.sigma3, 0.0, 0.0];
    let a = compose4(p.ig_t.cum_derivs(), inner);
    let b = [p.gamma + a[0], a[1], a[2], a[3]];
    let c = compose4(p.ig_u.cum_derivs(), b);
    let out = [p.mu3 + c[0], c[1], c[2], c[3]];
    if out.iter().any(|v| !v.is_finite()) || out[1] <= 0.0 {
        return Err(VvixError::MomentsUndefined(
            "cumulant composition produced a non-finite or non-positive variance".into(),
        ));
    }
    Ok(out)
}

/// Cumulants by central finite differences of the log-MGF at step `h`; the
/// independent cross-check route for `ndig_cumulants`.
pub fn ndig_cumulants_fd(p: &NdigParams, h: f64) -> Result<[f64; 4]> {
    p.validate()?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(VvixError::Domain(format!("step must be positive, got {h}")));
    }
    if !mgf_domain_contains(p, 2.0 * h) {
        return Err(VvixError::MomentsUndefined(format!(
            "exponential moment fails inside |w| <= {}",
            2.0 * h
        )));
    }
    let g = |w: f64| ndig_log_cf(Complex64::new(w, 0.0), p).re;
    let (g1, g2, gm1, gm2) = (g(h), g(2.0 * h), g(-h), g(-2.0 * h));
    Ok([
        (-g2 + 8.0 * g1 - 8.0 * gm1 + gm2) / (12.0 * h),
        (-g2 + 16.0 * g1 + 16.0 * gm1 - gm2) / (12.0 * h * h),
        (g2 - 2.0 * g1 + 2.0 * gm1 - gm2) / (2.0 * h.powi(3)),
        (g2 - 4.0 * g1 - 4.0 * gm1 + gm2) / h.powi(4),
    ])
}

/// Mean, variance, skewness and kurtosis (not excess) of X_1.
pub fn ndig_moments(p: &NdigParams) -> Result<Moments> {
    let k = ndig_cumulants(p)?;
    Ok(Moments {
        mean: k[0],
        variance: k[1],
        skewness: k[2] / k[1].powf(1.5),
        kurtosis: 3.0 + k[3] / (k[1] * k[1]),
    })
}

fn ig_draw(rng: &mut ChaCha8Rng, mean: f64, shape: f64) -> f64 {
    let dist = InverseGaussian::new(mean, shape)
        .expect("positive IG mean/shape by construction");
    dist.sample(rng)
}

struct StepDraw {
    du: f64,
    dt_clock: f64,
    dx: f64,
}

fn step(p: &NdigParams, dt: f64, rng: &mut ChaCha8Rng) -> StepDraw {
    let du = ig_draw(rng, p.ig_u.mu * dt, p.ig_u.lambda * dt * dt);
    let dt_clock = ig_draw(rng, p.ig_t.mu * du, p.ig_t.lambda * du * du);
    let z: f64 = rng.sample(StandardNormal);
    let dx = p.mu3 * dt + p.gamma * du + p.rho * dt_clock + p.sigma3 * dt_clock.sqrt() * z;
    StepDraw { du, dt_clock, dx }
}

fn checked_grid(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(VvixError::Domain("time grid is empty".into()));
    }
    let mut times = Vec::with_capacity(grid.len() + 1);
    if grid[0] != 0.0 {
        times.push(0.0);
    }
    times.extend_from_slice(grid);
    for w in times.windows(2) {
        if !(w[1].is_finite() && w[1] > w[0]) {
            return Err(VvixError::Domain(format!(
                "time grid must be strictly increasing from 0, got step {} -> {}",
                w[0], w[1]
            )));
        }
    }
    Ok(times)
}

/// Simulates `n_paths` NDIG trajectories on `grid` (prepending t=0 when
/// absent). Path i uses stream i of `seed`, so the set is reproducible and
/// independent of thread scheduling.
pub fn ndig_simulate(
    p: &NdigParams,
    grid: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<SamplePath>> {
    p.validate()?;
    let times = checked_grid(grid)?;
    if n_paths == 0 {
        return Err(VvixError::Domain("path count must be at least 1".into()));
    }
    let paths: Vec<SamplePath> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut values = Vec::with_capacity(times.len());
            values.push(0.0);
            for w in times.windows(2) {
                let s = step(p, w[1] - w[0], &mut rng);
                values.push(values.last().unwrap() + s.dx);
            }
            SamplePath {
                times: times.clone(),
                values,
                seed,
            }
        })
        .collect();
    Ok(paths)
}

/// Like `ndig_simulate` but also records the two clock trajectories.
pub fn ndig_simulate_clocks(
    p: &NdigParams,
    grid: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<(SamplePath, ClockPath)>> {
    p.validate()?;
    let times = checked_grid(grid)?;
    if n_paths == 0 {
        return Err(VvixError::Domain("path count must be at least 1".into()));
    }
    Ok((0..n_paths)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut values = vec![0.0];
            let mut u = vec![0.0];
            let mut t_of_u = vec![0.0];
            for w in times.windows(2) {
                let s = step(p, w[1] - w[0], &mut rng);
                values.push(values.last().unwrap() + s.dx);
                u.push(u.last().unwrap() + s.du);
                t_of_u.push(t_of_u.last().unwrap() + s.dt_clock);
            }
            (
                SamplePath {
                    times: times.clone(),
                    values,
                    seed,
                },
                ClockPath {
                    times: times.clone(),
                    u,
                    t_of_u,
                },
            )
        })
        .collect())
}

/// `n` independent one-step increments of X over horizon `dt`, drawn from
/// the supplied generator.
pub fn ndig_increments(p: &NdigParams, dt: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| step(p, dt, rng).dx).collect()
}

/// One-step increments affinely standardized to mean 0 and variance 1 using
/// the analytic cumulants; skewness and kurtosis are preserved. These drive
/// the scenario recursions.
pub fn standardized_increments(
    p: &NdigParams,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let k = ndig_cumulants(p)?;
    let sd = k[1].sqrt();
    Ok(ndig_increments(p, 1.0, n, rng)
        .into_iter()
        .map(|x| (x - k[0]) / sd)
        .collect())
}
