//! Scenario engine: simulates fleets of ARFIMA-FIGARCH paths driven by
//! standardized NDIG innovations, summarizes per-scenario Rachev and STARR
//! panels, and runs the serial-correlation tests behind the no-signal
//! claim.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VvixError};
use crate::fractional::{arch_weights, simulate_arfima_figarch, TsFit, DEFAULT_TRUNCATION};
use crate::levy::{standardized_increments, NdigParams};
use crate::risk::{rachev_ratio, starr, RatioConfig, RatioFlag, RatioOutcome};
use crate::rng::stream_rng;
use crate::stats::{self, LjungBox};

/// Default fleet size.
pub const DEFAULT_N_SCENARIOS: usize = 10_000;

/// Steps discarded at the head of every scenario so the fractional
/// recursions forget their initialization.
pub const SCENARIO_BURN_IN: usize = 1000;

/// Ljung-Box lags reported by [`whiteness_tests`].
pub const WHITENESS_LAGS: [usize; 2] = [10, 20];

/// Everything a scenario run needs: the fitted dynamics, the innovation
/// shape, the fleet size, the per-path horizon, and the master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n_scenarios: usize,
    pub horizon: usize,
    pub ts_params: TsFit,
    pub innovation_model: NdigParams,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Default-sized config whose horizon matches the fitted sample length.
    pub fn from_fit(ts_params: TsFit, innovation_model: NdigParams, seed: u64) -> Self {
        let horizon = ts_params.innovations.len();
        ScenarioConfig {
            n_scenarios: DEFAULT_N_SCENARIOS,
            horizon,
            ts_params,
            innovation_model,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_scenarios == 0 {
            return Err(VvixError::InvalidParameter(
                "scenario count must be at least 1".into(),
            ));
        }
        if self.horizon == 0 {
            return Err(VvixError::InvalidParameter(
                "scenario horizon must be at least 1".into(),
            ));
        }
        self.ts_params.arfima.validate()?;
        self.ts_params.figarch.validate()?;
        self.innovation_model.validate()?;
        Ok(())
    }
}

/// Simulated fleet: one level path and the standardized shock series that
/// drove it, per scenario, burn-in already discarded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub paths: Vec<Vec<f64>>,
    pub shocks: Vec<Vec<f64>>,
    pub seed: u64,
}

impl ScenarioSet {
    pub fn n_scenarios(&self) -> usize {
        self.paths.len()
    }

    pub fn horizon(&self) -> usize {
        self.paths.first().map_or(0, Vec::len)
    }
}

/// Simulates the fleet. Each scenario draws its own random stream from the
/// master seed, so the result does not depend on evaluation order or fleet
/// size: scenario s of a 100-path run equals scenario s of a 10,000-path
/// run. A parallel map over scenarios would reproduce the identical set.
pub fn simulate_scenarios(cfg: &ScenarioConfig) -> Result<ScenarioSet> {
    cfg.validate()?;
    // Surface inadmissible variance parameters before the fleet loop.
    arch_weights(&cfg.ts_params.figarch, DEFAULT_TRUNCATION)?;

    let n_steps = cfg.horizon + SCENARIO_BURN_IN;
    let mut paths = Vec::with_capacity(cfg.n_scenarios);
    let mut shocks = Vec::with_capacity(cfg.n_scenarios);
    for s in 0..cfg.n_scenarios {
        let mut rng = stream_rng(cfg.seed, s as u64);
        let z = standardized_increments(&cfg.innovation_model, n_steps, &mut rng)?;
        let path = simulate_arfima_figarch(
            &cfg.ts_params.arfima,
            &cfg.ts_params.figarch,
            &z,
            SCENARIO_BURN_IN,
            DEFAULT_TRUNCATION,
        )?;
        paths.push(path);
        shocks.push(z[SCENARIO_BURN_IN..].to_vec());
    }
    Ok(ScenarioSet {
        paths,
        shocks,
        seed: cfg.seed,
    })
}

/// Per-scenario ratio panel: one Rachev and one STARR value per scenario,
/// computed over that scenario's whole shock series. Invalid scenarios
/// hold NaN and carry their reason in the flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalNoisePanel {
    pub rachev: Vec<f64>,
    pub starr: Vec<f64>,
    pub flags: Vec<RatioFlag>,
}

impl SignalNoisePanel {
    pub fn len(&self) -> usize {
        self.rachev.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rachev.is_empty()
    }

    pub fn valid_count(&self) -> usize {
        self.flags.iter().filter(|f| f.is_valid()).count()
    }

    /// Quantiles of the valid panel entries at the given probabilities.
    pub fn quantiles(&self, probs: &[f64]) -> Result<PanelQuantiles> {
        for &p in probs {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(VvixError::InvalidParameter(format!(
                    "quantile probability {p} must lie in [0, 1]"
                )));
            }
        }
        let keep = |col: &[f64]| -> Vec<f64> {
            let mut v: Vec<f64> = col
                .iter()
                .zip(&self.flags)
                .filter(|(_, f)| f.is_valid())
                .map(|(x, _)| *x)
                .collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let rachev = keep(&self.rachev);
        let starr_col = keep(&self.starr);
        if rachev.is_empty() {
            return Err(VvixError::InsufficientData(
                "no valid panel entries to summarize".into(),
            ));
        }
        Ok(PanelQuantiles {
            probs: probs.to_vec(),
            rachev: probs.iter().map(|&p| quantile_sorted(&rachev, p)).collect(),
            starr: probs
                .iter()
                .map(|&p| quantile_sorted(&starr_col, p))
                .collect(),
        })
    }
}

/// Panel summary rows aligned with `probs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelQuantiles {
    pub probs: Vec<f64>,
    pub rachev: Vec<f64>,
    pub starr: Vec<f64>,
}

/// Computes the ratio panel over a simulated fleet. The window field of
/// `ratio_cfg` gates the horizon (each scenario must hold at least one
/// window of data); the ratios themselves use the whole shock series.
pub fn signal_noise_panel(
    scenarios: &ScenarioSet,
    ratio_cfg: &RatioConfig,
) -> Result<SignalNoisePanel> {
    ratio_cfg.validate()?;
    if scenarios.n_scenarios() == 0 {
        return Err(VvixError::InsufficientData("empty scenario set".into()));
    }
    if scenarios.horizon() < ratio_cfg.window {
        return Err(VvixError::InsufficientData(format!(
            "scenario horizon {} is shorter than the ratio window {}",
            scenarios.horizon(),
            ratio_cfg.window
        )));
    }
    let n = scenarios.n_scenarios();
    let mut rachev = Vec::with_capacity(n);
    let mut starr_col = Vec::with_capacity(n);
    let mut flags = Vec::with_capacity(n);
    for z in &scenarios.shocks {
        let r = rachev_ratio(z, ratio_cfg)?;
        let s = starr(z, ratio_cfg.gamma)?;
        match (&r, &s) {
            (RatioOutcome::Valid { value: rv }, RatioOutcome::Valid { value: sv }) => {
                rachev.push(*rv);
                starr_col.push(*sv);
                flags.push(RatioFlag::Valid);
            }
            _ => {
                let reason = r
                    .reason()
                    .or_else(|| s.reason())
                    .unwrap_or("undefined ratio")
                    .to_string();
                rachev.push(f64::NAN);
                starr_col.push(f64::NAN);
                flags.push(RatioFlag::Invalid { reason });
            }
        }
    }
    Ok(SignalNoisePanel {
        rachev,
        starr: starr_col,
        flags,
    })
}

/// Serial-correlation report: Ljung-Box at the standard lags, plus a
/// degeneracy flag for constant input.
#[derive(Debug, Clone, PartialEq)]
pub struct WhitenessReport {
    pub tests: Vec<LjungBox>,
    pub degenerate: bool,
}

impl WhitenessReport {
    pub fn p_at_lag(&self, lag: usize) -> Option<f64> {
        self.tests.iter().find(|t| t.lag == lag).map(|t| t.p_value)
    }

    /// True when the series looks white: not degenerate and no lag rejects
    /// at `alpha`.
    pub fn passes_at(&self, alpha: f64) -> bool {
        !self.degenerate && self.tests.iter().all(|t| t.p_value > alpha)
    }
}

/// Ljung-Box tests at lags 10 and 20. Needs more than five observations
/// per maximum lag so the chi-squared approximation holds.
pub fn whiteness_tests(series: &[f64]) -> Result<WhitenessReport> {
    let max_lag = WHITENESS_LAGS[WHITENESS_LAGS.len() - 1];
    if series.len() <= 5 * max_lag {
        return Err(VvixError::InsufficientData(format!(
            "whiteness tests need more than {} observations, got {}",
            5 * max_lag,
            series.len()
        )));
    }
    if series.iter().any(|x| !x.is_finite()) {
        return Err(VvixError::Domain(
            "series contains non-finite values".into(),
        ));
    }
    let degenerate = stats::variance(series) <= 0.0;
    let tests = WHITENESS_LAGS
        .iter()
        .map(|&lag| stats::ljung_box(series, lag))
        .collect::<Result<Vec<_>>>()?;
    Ok(WhitenessReport { tests, degenerate })
}

/// Linear-interpolation quantile of an ascending sample.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
