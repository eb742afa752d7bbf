//! Tail-risk measures over innovation series: average value-at-risk, the
//! Rachev and STARR ratios, rolling and block shock series, and a harness
//! that checks the monotonicity, quasiconcavity, scale, and distribution
//! axioms on a sample panel.
//!
//! Loss convention: `avar` returns a positive number when the tail loses
//! money. Both ratios share one validity condition, because the Rachev
//! denominator and the STARR denominator are the same AVaR of the risk
//! tail; a window is therefore flagged as a whole.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VvixError};
use crate::stats;

/// Conventional tail level used by both ratio defaults.
pub const DEFAULT_TAIL_LEVEL: f64 = 0.05;

/// Default rolling window, roughly one trading year.
pub const DEFAULT_RATIO_WINDOW: usize = 250;

/// Windows shorter than this make the 5% tail degenerate.
const MIN_RATIO_WINDOW: usize = 20;

/// Comparison slack for the exact axioms (scale and distribution).
const SCALE_TOL: f64 = 1e-12;

/// Comparison slack for the order axioms (monotonicity, quasiconcavity),
/// which accumulate more floating-point noise through the sort averages.
const ORDER_TOL: f64 = 1e-9;

/// Tail levels and rolling window for the ratio pipeline. `beta` is the
/// reward (right) tail, `gamma` the risk (left) tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioConfig {
    pub beta: f64,
    pub gamma: f64,
    pub window: usize,
}

impl Default for RatioConfig {
    fn default() -> Self {
        RatioConfig {
            beta: DEFAULT_TAIL_LEVEL,
            gamma: DEFAULT_TAIL_LEVEL,
            window: DEFAULT_RATIO_WINDOW,
        }
    }
}

impl RatioConfig {
    pub fn validate(&self) -> Result<()> {
        check_level(self.beta, "beta")?;
        check_level(self.gamma, "gamma")?;
        if self.window < MIN_RATIO_WINDOW {
            return Err(VvixError::InvalidParameter(format!(
                "ratio window {} must be at least {MIN_RATIO_WINDOW}",
                self.window
            )));
        }
        Ok(())
    }
}

/// A ratio evaluation: either a value or the reason the denominator made
/// the measure undefined. Undefined is an outcome, not an error, so
/// rolling series stay aligned with their dates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RatioOutcome {
    Valid { value: f64 },
    Invalid { reason: String },
}

impl RatioOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            RatioOutcome::Valid { value } => Some(*value),
            RatioOutcome::Invalid { .. } => None,
        }
    }

    pub fn is_valid(&self) -> bool {
        matches!(self, RatioOutcome::Valid { .. })
    }

    pub fn reason(&self) -> Option<&str> {
        match self {
            RatioOutcome::Valid { .. } => None,
            RatioOutcome::Invalid { reason } => Some(reason),
        }
    }
}

/// Per-date validity marker for [`RatioSeries`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RatioFlag {
    Valid,
    Invalid { reason: String },
}

impl RatioFlag {
    pub fn is_valid(&self) -> bool {
        matches!(self, RatioFlag::Valid)
    }
}

/// Dated Rachev and STARR series. Invalid dates hold NaN placeholders in
/// the value columns and carry their reason in the flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSeries {
    pub dates: Vec<NaiveDate>,
    pub rachev: Vec<f64>,
    pub starr: Vec<f64>,
    pub flags: Vec<RatioFlag>,
}

impl RatioSeries {
    pub fn new(
        dates: Vec<NaiveDate>,
        rachev: Vec<f64>,
        starr: Vec<f64>,
        flags: Vec<RatioFlag>,
    ) -> Result<Self> {
        if dates.len() != rachev.len() || dates.len() != starr.len() || dates.len() != flags.len()
        {
            return Err(VvixError::InvalidParameter(format!(
                "ratio series columns disagree: {} dates, {} rachev, {} starr, {} flags",
                dates.len(),
                rachev.len(),
                starr.len(),
                flags.len()
            )));
        }
        if dates.is_empty() {
            return Err(VvixError::InsufficientData(
                "ratio series needs at least one date".into(),
            ));
        }
        for w in dates.windows(2) {
            if w[1] <= w[0] {
                return Err(VvixError::InvalidParameter(format!(
                    "dates must be strictly increasing, saw {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for (i, flag) in flags.iter().enumerate() {
            if flag.is_valid() && (!rachev[i].is_finite() || !starr[i].is_finite()) {
                return Err(VvixError::InvalidParameter(format!(
                    "date {} is flagged valid but holds a non-finite value",
                    dates[i]
                )));
            }
        }
        Ok(RatioSeries {
            dates,
            rachev,
            starr,
            flags,
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn valid_count(&self) -> usize {
        self.flags.iter().filter(|f| f.is_valid()).count()
    }
}

/// Empirical average value-at-risk at `level`: the mean of the worst
/// `level * n` observations, the boundary observation entering with
/// fractional weight, negated so losses come out positive. This matches
/// the quantile-integral definition exactly on step distributions.
pub fn avar(sample: &[f64], level: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(VvixError::InsufficientData(
            "average value-at-risk needs a non-empty sample".into(),
        ));
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(VvixError::Domain("sample contains non-finite values".into()));
    }
    check_level(level, "level")?;

    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let k = level * xs.len() as f64;
    let m = (k.floor() as usize).min(xs.len());
    let mut acc: f64 = xs[..m].iter().sum();
    let frac = k - m as f64;
    if m < xs.len() && frac > 0.0 {
        acc += frac * xs[m];
    }
    Ok(-acc / k)
}

/// Rachev ratio: reward-tail mass over risk-tail mass,
/// AVaR_beta(-X) / AVaR_gamma(X).
pub fn rachev_ratio(sample: &[f64], cfg: &RatioConfig) -> Result<RatioOutcome> {
    cfg.validate()?;
    let denom = avar(sample, cfg.gamma)?;
    if denom <= 0.0 {
        return Ok(invalid_denominator(denom));
    }
    let negated: Vec<f64> = sample.iter().map(|x| -x).collect();
    let numer = avar(&negated, cfg.beta)?;
    Ok(RatioOutcome::Valid {
        value: numer / denom,
    })
}

/// STARR: (E[X])+ over (AVaR_gamma(X))+. A non-positive denominator is an
/// invalid outcome; a non-positive mean clips the ratio to zero.
pub fn starr(sample: &[f64], gamma: f64) -> Result<RatioOutcome> {
    let denom = avar(sample, gamma)?;
    if denom <= 0.0 {
        return Ok(invalid_denominator(denom));
    }
    let mean = stats::mean(sample);
    let value = if mean <= 0.0 { 0.0 } else { mean / denom };
    Ok(RatioOutcome::Valid { value })
}

fn invalid_denominator(denom: f64) -> RatioOutcome {
    RatioOutcome::Invalid {
        reason: format!("risk tail is non-positive: AVaR = {denom:.6e}"),
    }
}

/// Rolling Rachev and STARR over `innovations`, stepping one observation at
/// a time and stamping each window's last date. Invalid windows are flagged
/// in place, never dropped, so the series stays date-aligned.
pub fn rolling_ratios(
    dates: &[NaiveDate],
    innovations: &[f64],
    cfg: &RatioConfig,
) -> Result<RatioSeries> {
    cfg.validate()?;
    check_aligned(dates, innovations, cfg.window)?;
    let ends: Vec<usize> = (cfg.window..=innovations.len()).collect();
    ratio_rows(dates, innovations, cfg, &ends)
}

/// Non-overlapping version of [`rolling_ratios`]: consecutive windows share
/// no observations, and a partial tail block is dropped. Serial-correlation
/// tests need these rows to be independent under the null.
pub fn block_ratios(
    dates: &[NaiveDate],
    innovations: &[f64],
    cfg: &RatioConfig,
) -> Result<RatioSeries> {
    cfg.validate()?;
    check_aligned(dates, innovations, cfg.window)?;
    let ends: Vec<usize> = (1..=innovations.len() / cfg.window)
        .map(|b| b * cfg.window)
        .collect();
    ratio_rows(dates, innovations, cfg, &ends)
}

fn check_aligned(dates: &[NaiveDate], innovations: &[f64], window: usize) -> Result<()> {
    if dates.len() != innovations.len() {
        return Err(VvixError::InvalidParameter(format!(
            "{} dates against {} innovations",
            dates.len(),
            innovations.len()
        )));
    }
    if innovations.len() < window {
        return Err(VvixError::InsufficientData(format!(
            "rolling ratios need at least one full window of {window}, got {}",
            innovations.len()
        )));
    }
    Ok(())
}

fn ratio_rows(
    dates: &[NaiveDate],
    innovations: &[f64],
    cfg: &RatioConfig,
    ends: &[usize],
) -> Result<RatioSeries> {
    let mut out_dates = Vec::with_capacity(ends.len());
    let mut rachev = Vec::with_capacity(ends.len());
    let mut starr_col = Vec::with_capacity(ends.len());
    let mut flags = Vec::with_capacity(ends.len());
    for &end in ends {
        let sample = &innovations[end - cfg.window..end];
        let r = rachev_ratio(sample, cfg)?;
        let s = starr(sample, cfg.gamma)?;
        out_dates.push(dates[end - 1]);
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
    RatioSeries::new(out_dates, rachev, starr_col, flags)
}

/// Verdict for one axiom: whether every panel case passed, how many cases
/// were comparable, and the first counterexample if any.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomVerdict {
    pub passed: bool,
    pub cases: usize,
    pub counterexample: Option<String>,
}

impl AxiomVerdict {
    fn new() -> Self {
        AxiomVerdict {
            passed: true,
            cases: 0,
            counterexample: None,
        }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok && self.passed {
            self.passed = false;
            self.counterexample = Some(describe());
        }
    }
}

/// Pass/fail report over the four ratio axioms: monotonicity (M),
/// quasiconcavity (Q), scale invariance (S), and distribution invariance
/// (D).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub monotonicity: AxiomVerdict,
    pub quasiconcavity: AxiomVerdict,
    pub scale: AxiomVerdict,
    pub distribution: AxiomVerdict,
}

impl std::fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (name, v) in [
            ("monotonicity (M)", &self.monotonicity),
            ("quasiconcavity (Q)", &self.quasiconcavity),
            ("scale invariance (S)", &self.scale),
            ("distribution invariance (D)", &self.distribution),
        ] {
            match (&v.passed, &v.counterexample) {
                (true, _) => writeln!(f, "{name}: pass ({} cases)", v.cases)?,
                (false, Some(ce)) => writeln!(f, "{name}: FAIL ({} cases) {ce}", v.cases)?,
                (false, None) => writeln!(f, "{name}: FAIL ({} cases)", v.cases)?,
            }
        }
        Ok(())
    }
}

/// Checks the four axioms for `measure` over a panel of samples:
/// monotonicity against shifted and pointwise-improved partners,
/// quasiconcavity against convex mixtures of equal-length pairs, scale
/// invariance under positive rescaling, and distribution invariance under
/// reorderings. Invalid outcomes are skipped, not counted as failures;
/// a panel without at least one equal-length pair cannot exercise the
/// mixture axiom and is rejected.
pub fn axiom_check<F>(measure: F, panel: &[Vec<f64>]) -> Result<AxiomReport>
where
    F: Fn(&[f64]) -> Result<RatioOutcome>,
{
    if panel.is_empty() {
        return Err(VvixError::InsufficientData("empty sample panel".into()));
    }
    for (i, s) in panel.iter().enumerate() {
        if s.is_empty() {
            return Err(VvixError::InvalidParameter(format!(
                "panel sample {i} is empty"
            )));
        }
        if s.iter().any(|x| !x.is_finite()) {
            return Err(VvixError::Domain(format!(
                "panel sample {i} contains non-finite values"
            )));
        }
    }
    if !panel
        .iter()
        .enumerate()
        .any(|(i, a)| panel[i + 1..].iter().any(|b| a.len() == b.len()))
    {
        return Err(VvixError::InsufficientData(
            "panel has no equal-length pair to mix".into(),
        ));
    }

    let eval = |s: &[f64]| -> Result<Option<f64>> { measure(s).map(|o| o.value()) };

    let mut monotonicity = AxiomVerdict::new();
    let mut quasiconcavity = AxiomVerdict::new();
    let mut scale = AxiomVerdict::new();
    let mut distribution = AxiomVerdict::new();

    for (i, x) in panel.iter().enumerate() {
        let Some(v) = eval(x)? else { continue };

        // (M): raising outcomes, either everywhere or at the worst state,
        // must not lower the measure.
        for shift in [0.25, 1.0] {
            let up: Vec<f64> = x.iter().map(|a| a + shift).collect();
            if let Some(vu) = eval(&up)? {
                monotonicity.record(vu >= v - ORDER_TOL, || {
                    format!("sample {i} shifted by {shift}: {v:.6} fell to {vu:.6}")
                });
            }
        }
        let worst = x
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(j, _)| j)
            .expect("samples are non-empty");
        let mut bumped = x.clone();
        bumped[worst] += 0.5;
        if let Some(vb) = eval(&bumped)? {
            monotonicity.record(vb >= v - ORDER_TOL, || {
                format!("sample {i} improved at its worst state: {v:.6} fell to {vb:.6}")
            });
        }

        // (S): positive rescaling leaves the measure alone.
        for c in [0.1, 2.0, 100.0] {
            let scaled: Vec<f64> = x.iter().map(|a| c * a).collect();
            if let Some(vs) = eval(&scaled)? {
                scale.record((vs - v).abs() <= SCALE_TOL * (1.0 + v.abs()), || {
                    format!("sample {i} scaled by {c}: {v:.12} became {vs:.12}")
                });
            }
        }

        // (D): reorderings keep the empirical distribution, so the measure
        // must not move.
        let mut reversed = x.clone();
        reversed.reverse();
        let mut interleaved: Vec<f64> = x.iter().copied().step_by(2).collect();
        interleaved.extend(x.iter().copied().skip(1).step_by(2));
        for (label, perm) in [("reversed", reversed), ("interleaved", interleaved)] {
            if let Some(vp) = eval(&perm)? {
                distribution.record((vp - v).abs() <= SCALE_TOL * (1.0 + v.abs()), || {
                    format!("sample {i} {label}: {v:.12} became {vp:.12}")
                });
            }
        }

        // (Q): a convex mixture must not fall below both ingredients.
        for (jo, y) in panel[i + 1..].iter().enumerate() {
            if y.len() != x.len() {
                continue;
            }
            let j = i + 1 + jo;
            let Some(w) = eval(y)? else { continue };
            for lambda in [0.25, 0.5, 0.75] {
                let mix: Vec<f64> = x
                    .iter()
                    .zip(y)
                    .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                    .collect();
                if let Some(vm) = eval(&mix)? {
                    let floor = v.min(w);
                    quasiconcavity.record(vm >= floor - ORDER_TOL, || {
                        format!(
                            "mix of samples {i} and {j} at lambda {lambda}: \
                             {vm:.6} fell below min({v:.6}, {w:.6})"
                        )
                    });
                }
            }
        }
    }

    Ok(AxiomReport {
        monotonicity,
        quasiconcavity,
        scale,
        distribution,
    })
}

/// Frozen sample panel for the axiom harness. The first two samples hold
/// the same outcomes in different orders; their even mixture thins both
/// tails at once, which is exactly the configuration that catches a
/// non-quasiconcave measure.
pub fn default_axiom_panel() -> Vec<Vec<f64>> {
    vec![
        vec![-2.0, -1.0, -0.5, 1.0, 4.0],
        vec![1.0, -2.0, -0.5, 4.0, -1.0],
        vec![-1.5, -0.7, 0.2, 0.9, 2.4],
        vec![-3.0, -0.4, 0.1, 0.3, 0.6],
        vec![-2.2, -1.1, -0.6, -0.2, 0.1, 0.4, 0.8, 1.3, 2.1, 3.5],
        vec![-1.9, -1.4, -0.8, -0.3, 0.2, 0.5, 0.9, 1.2, 1.8, 2.6],
    ]
}

fn check_level(level: f64, name: &str) -> Result<()> {
    if !level.is_finite() || !(0.0..=1.0).contains(&level) || level == 0.0 {
        return Err(VvixError::InvalidParameter(format!(
            "{name} {level} must lie in (0, 1]"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn dates(n: usize) -> Vec<NaiveDate> {
        let start = NaiveDate::from_ymd_opt(2015, 1, 2).unwrap();
        (0..n)
            .map(|i| start + chrono::Duration::days(i as i64))
            .collect()
    }

    fn gaussian(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = stream_rng(seed, 31);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    /// Rockafellar-Uryasev form: the empirical AVaR is the minimum of
    /// t + mean((-x - t)+)/level over t, attained at a kink -x_i.
    fn avar_brute(sample: &[f64], level: f64) -> f64 {
        let n = sample.len() as f64;
        sample
            .iter()
            .map(|t0| {
                let t = -t0;
                let excess: f64 = sample.iter().map(|x| (-x - t).max(0.0)).sum();
                t + excess / (level * n)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn avar_matches_the_reference_evaluations() {
        let v = avar(&[-3.0, -1.0, 0.0, 1.0, 2.0], 0.4).unwrap();
        assert!(
            (v - 2.0).abs() < 1e-12,
            "worst 40% of the sample average to -2, so AVaR is 2, got {v}"
        );

        let c = avar(&[1.7; 9], 0.25).unwrap();
        assert!((c + 1.7).abs() < 1e-12, "constant sample c gives -c, got {c}");

        let xs = [0.4, -1.2, 2.5, 0.1, -0.8, 3.0];
        let full = avar(&xs, 1.0).unwrap();
        let mean = stats::mean(&xs);
        assert!(
            (full + mean).abs() < 1e-12,
            "level 1 averages the whole sample: {full} vs {}",
            -mean
        );

        assert!(avar(&[], 0.5).is_err(), "empty sample");
        assert!(avar(&[1.0], 0.0).is_err(), "level zero");
        assert!(avar(&[1.0], 1.2).is_err(), "level above one");
        assert!(avar(&[1.0, f64::NAN], 0.5).is_err(), "non-finite entry");
    }

    #[test]
    fn avar_equals_the_kink_minimum_exactly_up_to_n_50() {
        for n in 1..=50usize {
            let xs = gaussian(n as u64, n);
            for level in [0.03, 0.1, 1.0 / 3.0, 0.5, 0.77, 1.0] {
                let fast = avar(&xs, level).unwrap();
                let brute = avar_brute(&xs, level);
                assert!(
                    (fast - brute).abs() < 1e-12 * (1.0 + brute.abs()),
                    "n = {n}, level = {level}: {fast} vs brute {brute}"
                );
            }
        }
    }

    #[test]
    fn avar_is_coherent_on_random_pairs() {
        for trial in 0..200u64 {
            let xs = gaussian(1000 + trial, 40);
            let ys = gaussian(2000 + trial, 40);
            let level = 0.1;
            let ax = avar(&xs, level).unwrap();
            let ay = avar(&ys, level).unwrap();

            let sum: Vec<f64> = xs.iter().zip(&ys).map(|(a, b)| a + b).collect();
            let asum = avar(&sum, level).unwrap();
            assert!(
                asum <= ax + ay + 1e-10,
                "trial {trial}: subadditivity broke, {asum} > {ax} + {ay}"
            );

            let scaled: Vec<f64> = xs.iter().map(|a| 2.5 * a).collect();
            let ascale = avar(&scaled, level).unwrap();
            assert!(
                (ascale - 2.5 * ax).abs() < 1e-12 * (1.0 + ax.abs()),
                "trial {trial}: positive homogeneity broke"
            );

            let shifted: Vec<f64> = xs.iter().map(|a| a + 0.3).collect();
            let ashift = avar(&shifted, level).unwrap();
            assert!(
                (ashift - (ax - 0.3)).abs() < 1e-12 * (1.0 + ax.abs()),
                "trial {trial}: translation covariance broke"
            );
        }
    }

    #[test]
    fn rachev_ratio_follows_symmetry_shift_and_scale() {
        let cfg = RatioConfig {
            beta: 0.25,
            gamma: 0.25,
            window: 20,
        };
        let symmetric = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];
        let r = rachev_ratio(&symmetric, &cfg).unwrap().value().unwrap();
        assert!(
            (r - 1.0).abs() < 1e-14,
            "matched tails of a symmetric sample give 1, got {r}"
        );

        let base = [-1.5, -0.7, 0.2, 0.9, 2.4];
        let r0 = rachev_ratio(&base, &cfg).unwrap().value().unwrap();
        let lifted: Vec<f64> = base.iter().map(|x| x + 0.5).collect();
        let r1 = rachev_ratio(&lifted, &cfg).unwrap().value().unwrap();
        assert!(
            r1 > r0,
            "an upward shift must raise the ratio: {r0} vs {r1}"
        );

        for c in [0.1, 2.0, 100.0] {
            let scaled: Vec<f64> = base.iter().map(|x| c * x).collect();
            let rc = rachev_ratio(&scaled, &cfg).unwrap().value().unwrap();
            assert!(
                (rc - r0).abs() < 1e-12 * (1.0 + r0.abs()),
                "scaling by {c} moved the ratio from {r0} to {rc}"
            );
        }

        let all_positive = [0.5, 1.0, 2.0, 3.0, 4.0];
        let out = rachev_ratio(&all_positive, &cfg).unwrap();
        assert!(
            !out.is_valid(),
            "a sample with no losses has no positive risk tail: {out:?}"
        );
        assert!(out.reason().unwrap().contains("non-positive"));
    }

    #[test]
    fn starr_matches_the_reference_cases() {
        let out = starr(&[-2.0, 1.0, 4.0], 1.0 / 3.0).unwrap();
        let v = out.value().unwrap();
        assert!(
            (v - 0.5).abs() < 1e-12,
            "mean 1 over tail loss 2 gives 0.5, got {v}"
        );

        let out = starr(&[0.5, 1.0, 2.0], 1.0 / 3.0).unwrap();
        assert!(!out.is_valid(), "all-positive sample clips the denominator");

        let out = starr(&[-3.0, -1.0, 0.5], 1.0 / 3.0).unwrap();
        assert_eq!(
            out.value(),
            Some(0.0),
            "negative mean with a real risk tail clips to zero"
        );
    }

    #[test]
    fn ratios_are_permutation_invariant() {
        let cfg = RatioConfig {
            beta: 0.2,
            gamma: 0.2,
            window: 20,
        };
        let xs = [-1.9, 0.4, -0.3, 2.2, 0.8, -1.1, 1.5, 0.0, -0.6, 0.9];
        let mut reversed = xs;
        reversed.reverse();
        assert_eq!(
            rachev_ratio(&xs, &cfg).unwrap(),
            rachev_ratio(&reversed, &cfg).unwrap(),
            "sorting inside the measure makes reordering exactly invisible"
        );
        assert_eq!(
            starr(&xs, 0.2).unwrap(),
            starr(&reversed, 0.2).unwrap()
        );
    }

    #[test]
    fn rolling_ratios_reduce_to_the_whole_sample_ratio() {
        let xs = gaussian(5, 40);
        let cfg = RatioConfig {
            beta: 0.1,
            gamma: 0.1,
            window: 40,
        };
        let series = rolling_ratios(&dates(40), &xs, &cfg).unwrap();
        assert_eq!(series.len(), 1, "window equal to length gives one row");
        assert_eq!(
            series.rachev[0],
            rachev_ratio(&xs, &cfg).unwrap().value().unwrap()
        );
        assert_eq!(series.starr[0], starr(&xs, 0.1).unwrap().value().unwrap());
        assert_eq!(series.dates[0], dates(40)[39], "stamped with the window end");
    }

    #[test]
    fn rolling_rachev_hovers_near_one_on_symmetric_noise() {
        let cfg = RatioConfig::default();
        let n = cfg.window + 99;
        let xs = gaussian(8, n);
        let series = rolling_ratios(&dates(n), &xs, &cfg).unwrap();
        assert_eq!(series.len(), 100);
        assert_eq!(series.valid_count(), 100, "no window should go invalid");
        let mut vals = series.rachev.clone();
        vals.sort_by(f64::total_cmp);
        let median = vals[vals.len() / 2];
        assert!(
            (0.8..=1.25).contains(&median),
            "median rolling Rachev {median} strayed from 1 on symmetric noise"
        );
    }

    #[test]
    fn an_injected_outlier_drags_rachev_down() {
        let cfg = RatioConfig::default();
        let n = 300;
        let clean = gaussian(13, n);
        let mut shocked = clean.clone();
        shocked[280] = -6.0;
        let ds = dates(n);
        let base = rolling_ratios(&ds, &clean, &cfg).unwrap();
        let hit = rolling_ratios(&ds, &shocked, &cfg).unwrap();
        for (i, end) in (cfg.window..=n).enumerate() {
            let contains = end > 280;
            if contains {
                assert!(
                    hit.rachev[i] < base.rachev[i],
                    "window ending at {end} holds the outlier and must drop: \
                     {} vs {}",
                    hit.rachev[i],
                    base.rachev[i]
                );
            } else {
                assert_eq!(
                    hit.rachev[i], base.rachev[i],
                    "window ending at {end} never sees the outlier"
                );
            }
        }
    }

    #[test]
    fn block_ratios_use_disjoint_windows() {
        let xs = gaussian(21, 520);
        let ds = dates(520);
        let cfg = RatioConfig::default();
        let blocks = block_ratios(&ds, &xs, &cfg).unwrap();
        assert_eq!(blocks.len(), 2, "520 observations hold two blocks of 250");
        assert_eq!(blocks.dates[0], ds[249]);
        assert_eq!(blocks.dates[1], ds[499]);
        let first = rachev_ratio(&xs[..250], &cfg).unwrap().value().unwrap();
        let second = rachev_ratio(&xs[250..500], &cfg).unwrap().value().unwrap();
        assert_eq!(blocks.rachev[0], first);
        assert_eq!(blocks.rachev[1], second);
    }

    #[test]
    fn ratio_series_validates_its_shape() {
        let ds = dates(2);
        assert!(
            RatioSeries::new(ds.clone(), vec![1.0], vec![0.5, 0.4], vec![
                RatioFlag::Valid,
                RatioFlag::Valid
            ])
            .is_err(),
            "column length mismatch"
        );
        assert!(
            RatioSeries::new(
                ds.clone(),
                vec![1.0, f64::NAN],
                vec![0.5, 0.4],
                vec![RatioFlag::Valid, RatioFlag::Valid]
            )
            .is_err(),
            "NaN under a valid flag"
        );
        let ok = RatioSeries::new(
            ds,
            vec![1.0, f64::NAN],
            vec![0.5, f64::NAN],
            vec![
                RatioFlag::Valid,
                RatioFlag::Invalid {
                    reason: "risk tail is non-positive: AVaR = 0".into(),
                },
            ],
        )
        .unwrap();
        assert_eq!(ok.valid_count(), 1);
    }

    #[test]
    fn config_validation_rejects_bad_levels_and_windows() {
        let bad = RatioConfig {
            beta: 0.0,
            ..RatioConfig::default()
        };
        assert!(bad.validate().is_err(), "zero beta");
        let bad = RatioConfig {
            window: 19,
            ..RatioConfig::default()
        };
        assert!(bad.validate().is_err(), "window below the minimum");
        assert!(RatioConfig::default().validate().is_ok());
    }

    #[test]
    fn axiom_checks_partition_the_two_ratios() {
        let cfg = RatioConfig::default();
        let panel = default_axiom_panel();

        let starr_report =
            axiom_check(|s| starr(s, cfg.gamma), &panel).unwrap();
        assert!(starr_report.monotonicity.passed, "{starr_report}");
        assert!(starr_report.quasiconcavity.passed, "{starr_report}");
        assert!(starr_report.scale.passed, "{starr_report}");
        assert!(starr_report.distribution.passed, "{starr_report}");

        let rachev_report =
            axiom_check(|s| rachev_ratio(s, &cfg), &panel).unwrap();
        assert!(rachev_report.monotonicity.passed, "{rachev_report}");
        assert!(rachev_report.scale.passed, "{rachev_report}");
        assert!(rachev_report.distribution.passed, "{rachev_report}");
        assert!(
            !rachev_report.quasiconcavity.passed,
            "the mixture of the reordered pair must catch the Rachev ratio: \
             {rachev_report}"
        );
        assert!(rachev_report.quasiconcavity.counterexample.is_some());

        // The failing mixture itself, pinned: both ingredients sit at 2,
        // their even mixture at 5/3.
        let x = &panel[0];
        let y = &panel[1];
        let rx = rachev_ratio(x, &cfg).unwrap().value().unwrap();
        let ry = rachev_ratio(y, &cfg).unwrap().value().unwrap();
        let mix: Vec<f64> = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
        let rm = rachev_ratio(&mix, &cfg).unwrap().value().unwrap();
        assert!((rx - 2.0).abs() < 1e-12, "ingredient ratio, got {rx}");
        assert!((ry - 2.0).abs() < 1e-12, "reordered ingredient, got {ry}");
        assert!(
            (rm - 5.0 / 3.0).abs() < 1e-12,
            "even mixture ratio, got {rm}"
        );
    }

    #[test]
    fn axiom_check_rejects_unusable_panels() {
        assert!(axiom_check(|s| starr(s, 0.05), &[]).is_err(), "empty panel");
        let no_pair = vec![vec![-1.0, 1.0], vec![-1.0, 0.0, 1.0]];
        assert!(
            axiom_check(|s| starr(s, 0.05), &no_pair).is_err(),
            "no equal-length pair to mix"
        );
    }
}
