//! CBOE-style 30-day volatility index and the model-implied volatility path.
//!
//! `term_variance` evaluates the model-free variance strip on a single
//! expiry: out-of-the-money quotes weighted by strike spacing, a forward
//! recovered from put-call parity at the minimum-gap strike, and the
//! (F/K0 - 1)^2 convexity correction. `vix_value` blends two term
//! variances with minute-accurate 30-day interpolation weights, and
//! `ndig_vvix_series` turns a rolling calibration into the annualized
//! model volatility path that `normalize` maps to zero mean and unit
//! variance for cross-series comparison.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::calibrate::WindowFit;
use crate::error::{Result, VvixError};
use crate::levy::ndig_moments;
use crate::pricer::{OptionKind, OptionQuote};
use crate::stats::{variance, zscore};

pub const MINUTES_PER_DAY: f64 = 1440.0;
/// Calendar-year minutes used by the 30-day interpolation (365 days).
pub const MINUTES_PER_YEAR: f64 = 525_600.0;
/// Minutes in the 30-day target tenor.
pub const TARGET_MINUTES: f64 = 43_200.0;
/// Trading-day annualization for realized and model volatilities.
pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

/// Expiry windows, in calendar days, that qualify a strip as near- or
/// next-term.
pub const NEAR_TERM_DAYS: std::ops::RangeInclusive<u32> = 23..=30;
pub const NEXT_TERM_DAYS: std::ops::RangeInclusive<u32> = 31..=37;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Term {
    Near,
    Next,
}

/// One expiry's option chain together with the rate used to discount it.
///
/// The quote list may interleave calls and puts, but within each side the
/// strikes must arrive strictly increasing; every quote must carry the
/// maturity implied by `expiry_days` to within one calendar day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermStrip {
    pub expiry_days: u32,
    pub quotes: Vec<OptionQuote>,
    pub r: f64,
}

impl TermStrip {
    pub fn new(expiry_days: u32, quotes: Vec<OptionQuote>, r: f64) -> Result<Self> {
        if !(*NEAR_TERM_DAYS.start()..=*NEXT_TERM_DAYS.end()).contains(&expiry_days) {
            return Err(VvixError::InvalidParameter(format!(
                "expiry of {expiry_days} days is outside the {}..={} day index window",
                NEAR_TERM_DAYS.start(),
                NEXT_TERM_DAYS.end()
            )));
        }
        if !r.is_finite() {
            return Err(VvixError::InvalidParameter(format!("rate must be finite, got {r}")));
        }
        let tau = expiry_days as f64 * MINUTES_PER_DAY / MINUTES_PER_YEAR;
        let one_day = MINUTES_PER_DAY / MINUTES_PER_YEAR;
        let mut last_strike = [f64::NEG_INFINITY; 2];
        let mut side_count = [0usize; 2];
        for q in &quotes {
            if !(q.strike.is_finite() && q.strike > 0.0) {
                return Err(VvixError::InvalidParameter(format!(
                    "strike must be positive, got {}",
                    q.strike
                )));
            }
            if !(q.price.is_finite() && q.price >= 0.0) {
                return Err(VvixError::InvalidParameter(format!(
                    "quote at strike {} has invalid price {}",
                    q.strike, q.price
                )));
            }
            if (q.maturity - tau).abs() > one_day {
                return Err(VvixError::InvalidParameter(format!(
                    "quote maturity {} disagrees with the strip expiry of {expiry_days} days",
                    q.maturity
                )));
            }
            let side = matches!(q.kind, OptionKind::Put) as usize;
            if q.strike <= last_strike[side] {
                return Err(VvixError::InvalidParameter(format!(
                    "{} strikes must be strictly increasing, got {} after {}",
                    q.kind, q.strike, last_strike[side]
                )));
            }
            last_strike[side] = q.strike;
            side_count[side] += 1;
        }
        if side_count[0] < 3 || side_count[1] < 3 {
            return Err(VvixError::InsufficientData(format!(
                "strip needs at least 3 quotes per side, got {} calls and {} puts",
                side_count[0], side_count[1]
            )));
        }
        Ok(Self { expiry_days, quotes, r })
    }

    pub fn term(&self) -> Term {
        if NEAR_TERM_DAYS.contains(&self.expiry_days) {
            Term::Near
        } else {
            Term::Next
        }
    }

    pub fn minutes(&self) -> f64 {
        self.expiry_days as f64 * MINUTES_PER_DAY
    }

    /// Year fraction to expiry on the calendar-minute convention.
    pub fn tau(&self) -> f64 {
        self.minutes() / MINUTES_PER_YEAR
    }
}

/// Blending weights and per-annum term volatilities for the index formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VixInputs {
    pub w1: f64,
    pub w2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

impl VixInputs {
    pub fn new(w1: f64, w2: f64, sigma1: f64, sigma2: f64) -> Result<Self> {
        let v = Self { w1, w2, sigma1, sigma2 };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("w1", self.w1), ("w2", self.w2)] {
            if !(w.is_finite() && (0.0..=1.0).contains(&w)) {
                return Err(VvixError::InvalidParameter(format!(
                    "{name} must lie in [0, 1], got {w}"
                )));
            }
        }
        if (self.w1 + self.w2 - 1.0).abs() > 1e-12 {
            return Err(VvixError::InvalidParameter(format!(
                "weights must sum to 1, got {} + {}",
                self.w1, self.w2
            )));
        }
        for (name, s) in [("sigma1", self.sigma1), ("sigma2", self.sigma2)] {
            if !(s.is_finite() && s >= 0.0) {
                return Err(VvixError::InvalidParameter(format!(
                    "{name} must be a nonnegative volatility, got {s}"
                )));
            }
        }
        Ok(())
    }
}

/// Minute-accurate 30-day interpolation weights for two expiries.
///
/// The returned pair already carries the year-fraction and 30-day
/// rescaling of the index formula, so it sums to one exactly and
/// `vix_value` needs no further time factors.
pub fn interp_weights(minutes_near: f64, minutes_next: f64) -> Result<(f64, f64)> {
    if !(minutes_near.is_finite() && minutes_next.is_finite()) {
        return Err(VvixError::InvalidParameter(
            "expiry minutes must be finite".into(),
        ));
    }
    if !(minutes_near > 0.0 && minutes_near < minutes_next) {
        return Err(VvixError::InvalidParameter(format!(
            "expiries must be ordered, got {minutes_near} and {minutes_next} minutes"
        )));
    }
    if !(minutes_near <= TARGET_MINUTES && TARGET_MINUTES <= minutes_next) {
        return Err(VvixError::InvalidParameter(format!(
            "the 30-day point must sit between the expiries, got {minutes_near} and {minutes_next}"
        )));
    }
    let t1 = minutes_near / MINUTES_PER_YEAR;
    let t2 = minutes_next / MINUTES_PER_YEAR;
    let span = minutes_next - minutes_near;
    let w1 = t1 * (minutes_next - TARGET_MINUTES) / span * (MINUTES_PER_YEAR / TARGET_MINUTES);
    let w2 = t2 * (TARGET_MINUTES - minutes_near) / span * (MINUTES_PER_YEAR / TARGET_MINUTES);
    // The pair sums to one analytically; normalizing the first weight and
    // deriving the second as its complement makes the sum exactly 1.0 in
    // floating point, which VixInputs' exact-sum invariant relies on.
    let w1n = w1 / (w1 + w2);
    Ok((w1n, 1.0 - w1n))
}

/// 30-day index level from blended term volatilities.
pub fn vix_value(inputs: &VixInputs) -> Result<f64> {
    inputs.validate()?;
    Ok(100.0
        * (inputs.w1 * inputs.sigma1 * inputs.sigma1
            + inputs.w2 * inputs.sigma2 * inputs.sigma2)
            .sqrt())
}

/// Forward level and variance-strip anchor strike for one expiry.
///
/// The forward comes from put-call parity at the strike with the smallest
/// call-put gap; the anchor K0 is the largest strike at or below it.
pub fn strip_forward(strip: &TermStrip) -> Result<(f64, f64)> {
    let by_strike = pair_by_strike(strip);
    let disc = (strip.r * strip.tau()).exp();
    let mut best: Option<(f64, f64)> = None;
    for (&bits, &(call, put)) in &by_strike {
        if let (Some(c), Some(p)) = (call, put) {
            let gap = (c - p).abs();
            if best.is_none_or(|(g, _)| gap < g) {
                best = Some((gap, f64::from_bits(bits) + disc * (c - p)));
            }
        }
    }
    let (_, forward) = best.ok_or_else(|| {
        VvixError::InsufficientData("no strike is quoted on both sides".into())
    })?;
    if !(forward.is_finite() && forward > 0.0) {
        return Err(VvixError::Domain(format!(
            "parity forward is not a positive level, got {forward}"
        )));
    }
    let k0 = by_strike
        .keys()
        .map(|&b| f64::from_bits(b)).rfind(|&k| k <= forward)
        .ok_or_else(|| {
            VvixError::Domain(format!(
                "forward {forward} lies below the lowest quoted strike"
            ))
        })?;
    Ok((forward, k0))
}

/// Model-free 30-day-style variance of a single term strip, per annum.
pub fn term_variance(strip: &TermStrip) -> Result<f64> {
    let tau = strip.tau();
    let disc = (strip.r * tau).exp();
    let (forward, k0) = strip_forward(strip)?;
    let by_strike = pair_by_strike(strip);

    // Out-of-the-money selection: puts below the anchor, calls above, and
    // the average of the pair at the anchor itself.
    let mut contributions: Vec<(f64, f64)> = Vec::new();
    for (&bits, &(call, put)) in &by_strike {
        let k = f64::from_bits(bits);
        let q = if k < k0 {
            put
        } else if k > k0 {
            call
        } else {
            match (call, put) {
                (Some(c), Some(p)) => Some(0.5 * (c + p)),
                (c, p) => c.or(p),
            }
        };
        if let Some(q) = q {
            contributions.push((k, q));
        }
    }
    if contributions.len() < 2 {
        return Err(VvixError::InsufficientData(format!(
            "only {} out-of-the-money quotes contribute to the strip",
            contributions.len()
        )));
    }
    let mut sum = 0.0;
    for i in 0..contributions.len() {
        let (k, q) = contributions[i];
        let below = if i == 0 { k } else { contributions[i - 1].0 };
        let above = if i + 1 == contributions.len() {
            k
        } else {
            contributions[i + 1].0
        };
        // Half-gap spacing in the interior, one-sided at the edges.
        let dk = if i == 0 {
            above - k
        } else if i + 1 == contributions.len() {
            k - below
        } else {
            0.5 * (above - below)
        };
        sum += dk / (k * k) * disc * q;
    }
    let basis = forward / k0 - 1.0;
    let var = (2.0 / tau) * sum - basis * basis / tau;
    if !(var.is_finite() && var > 0.0) {
        return Err(VvixError::Domain(format!(
            "strip variance is not positive, got {var}"
        )));
    }
    Ok(var)
}

/// Full index evaluation from a near- and a next-term strip.
pub fn vix_from_strips(near: &TermStrip, next: &TermStrip) -> Result<f64> {
    if near.term() != Term::Near {
        return Err(VvixError::InvalidParameter(format!(
            "near strip expires in {} days, outside the near-term window",
            near.expiry_days
        )));
    }
    if next.term() != Term::Next {
        return Err(VvixError::InvalidParameter(format!(
            "next strip expires in {} days, outside the next-term window",
            next.expiry_days
        )));
    }
    let (w1, w2) = interp_weights(near.minutes(), next.minutes())?;
    let sigma1 = term_variance(near)?.sqrt();
    let sigma2 = term_variance(next)?.sqrt();
    vix_value(&VixInputs::new(w1, w2, sigma1, sigma2)?)
}

fn pair_by_strike(strip: &TermStrip) -> BTreeMap<u64, (Option<f64>, Option<f64>)> {
    // Positive-strike bit patterns order the same way the numbers do, so
    // the raw bits serve as an exact map key.
    let mut by_strike: BTreeMap<u64, (Option<f64>, Option<f64>)> = BTreeMap::new();
    for q in &strip.quotes {
        let slot = by_strike.entry(q.strike.to_bits()).or_insert((None, None));
        match q.kind {
            OptionKind::Call => slot.0 = Some(q.price),
            OptionKind::Put => slot.1 = Some(q.price),
        }
    }
    by_strike
}

/// How a dated volatility series is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Normalization {
    Raw,
    Zscore { mean: f64, sd: f64 },
}

/// Dated volatility path, either in natural units or z-scored with the
/// affine map recorded for inversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
    pub normalization: Normalization,
}

impl VolSeries {
    pub fn new(
        dates: Vec<NaiveDate>,
        values: Vec<f64>,
        normalization: Normalization,
    ) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(VvixError::InvalidParameter(format!(
                "{} dates against {} values",
                dates.len(),
                values.len()
            )));
        }
        if dates.is_empty() {
            return Err(VvixError::InsufficientData("empty series".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(VvixError::InvalidParameter(format!(
                "series contains a non-finite value {v}"
            )));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(VvixError::InvalidParameter(
                "dates must be strictly increasing".into(),
            ));
        }
        Ok(Self { dates, values, normalization })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A rolling window left out of the volatility path, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedWindow {
    pub date: NaiveDate,
    pub reason: String,
}

/// Annualized model volatility per calibration window.
///
/// Windows whose fit failed, did not converge, or has undefined moments
/// are skipped and returned alongside the series rather than poisoning it.
pub fn ndig_vvix_series(
    windows: &[WindowFit],
    days_per_year: f64,
) -> Result<(VolSeries, Vec<SkippedWindow>)> {
    if !(days_per_year.is_finite() && days_per_year > 0.0) {
        return Err(VvixError::InvalidParameter(format!(
            "annualization must use a positive day count, got {days_per_year}"
        )));
    }
    let mut dates = Vec::new();
    let mut values = Vec::new();
    let mut skipped = Vec::new();
    for w in windows {
        match &w.fit {
            Err(reason) => skipped.push(SkippedWindow {
                date: w.date,
                reason: reason.clone(),
            }),
            Ok(fit) if !fit.converged => skipped.push(SkippedWindow {
                date: w.date,
                reason: "fit did not converge".into(),
            }),
            Ok(fit) => match ndig_moments(&fit.params) {
                Ok(m) => {
                    dates.push(w.date);
                    values.push(m.variance.sqrt() * days_per_year.sqrt());
                }
                Err(e) => skipped.push(SkippedWindow {
                    date: w.date,
                    reason: e.to_string(),
                }),
            },
        }
    }
    if values.is_empty() {
        return Err(VvixError::InsufficientData(
            "every calibration window was skipped".into(),
        ));
    }
    Ok((VolSeries::new(dates, values, Normalization::Raw)?, skipped))
}

/// Z-score a series and record the affine map.
pub fn normalize(series: &VolSeries) -> Result<VolSeries> {
    let (values, m, sd) = zscore(&series.values)?;
    VolSeries::new(
        series.dates.clone(),
        values,
        Normalization::Zscore { mean: m, sd },
    )
}

/// Invert a recorded z-score back to natural units.
pub fn denormalize(series: &VolSeries) -> Result<VolSeries> {
    match series.normalization {
        Normalization::Raw => Err(VvixError::InvalidParameter(
            "series carries no normalization to invert".into(),
        )),
        Normalization::Zscore { mean, sd } => VolSeries::new(
            series.dates.clone(),
            series.values.iter().map(|v| v * sd + mean).collect(),
            Normalization::Raw,
        ),
    }
}

/// Rolling close-to-close historical volatility of a positive level series.
///
/// `window` counts the log changes entering each estimate; the output is
/// stamped with the date of the window's last observation and annualized
/// by sqrt(days_per_year).
pub fn rolling_log_vol(
    series: &VolSeries,
    window: usize,
    days_per_year: f64,
) -> Result<VolSeries> {
    if window < 2 {
        return Err(VvixError::InvalidParameter(format!(
            "volatility needs at least 2 log changes per window, got {window}"
        )));
    }
    if !(days_per_year.is_finite() && days_per_year > 0.0) {
        return Err(VvixError::InvalidParameter(format!(
            "annualization must use a positive day count, got {days_per_year}"
        )));
    }
    if let Some(v) = series.values.iter().find(|v| **v <= 0.0) {
        return Err(VvixError::Domain(format!(
            "log volatility needs strictly positive levels, got {v}"
        )));
    }
    let changes: Vec<f64> = series
        .values
        .windows(2)
        .map(|w| (w[1] / w[0]).ln())
        .collect();
    if changes.len() < window {
        return Err(VvixError::InsufficientData(format!(
            "need at least {} observations for a {window}-change window, got {}",
            window + 1,
            series.len()
        )));
    }
    let ann = days_per_year.sqrt();
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for end in (window - 1)..changes.len() {
        let slice = &changes[end + 1 - window..=end];
        values.push(variance(slice).sqrt() * ann);
        dates.push(series.dates[end + 1]);
    }
    VolSeries::new(dates, values, Normalization::Raw)
}
