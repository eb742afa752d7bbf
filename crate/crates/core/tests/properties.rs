//! Randomized invariant checks over the public API: characteristic-function
//! analyticity, subordinator monotonicity, option-price shape, tail-measure
//! coherence, index-formula symmetry, normalization round-trips, and the
//! fractional-difference inverse identity.

use proptest::prelude::*;
use vvix::fractional::frac_diff_coeffs;
use vvix::levy::{ndig_cf, ndig_simulate_clocks, NdigParams};
use vvix::pricer::{carr_madan_call, PricerConfig};
use vvix::risk::{avar, rachev_ratio, RatioConfig};
use vvix::vix::{denormalize, interp_weights, normalize, vix_value, Normalization, VixInputs, VolSeries};

fn any_ndig() -> impl Strategy<Value = NdigParams> {
    (
        -0.5..0.5f64,
        0.05..1.0f64,
        -0.5..0.5f64,
        -0.5..0.5f64,
        0.2..8.0f64,
        0.2..8.0f64,
    )
        .prop_map(|(mu3, sigma3, gamma, rho, lt, lu)| {
            NdigParams::standard(mu3, sigma3, gamma, rho, lt, lu)
                .expect("strategy ranges are all valid")
        })
}

/// Parameters mild enough that a damping exponent exists and the
/// mean-correcting measure is well defined.
fn priceable_ndig() -> impl Strategy<Value = NdigParams> {
    (
        -0.02..0.02f64,
        0.1..0.3f64,
        -0.1..0.1f64,
        -0.08..0.08f64,
        0.5..3.0f64,
        0.5..3.0f64,
    )
        .prop_map(|(mu3, sigma3, gamma, rho, lt, lu)| {
            NdigParams::standard(mu3, sigma3, gamma, rho, lt, lu)
                .expect("strategy ranges are all valid")
        })
}

fn dates(n: usize) -> Vec<chrono::NaiveDate> {
    let start = chrono::NaiveDate::from_ymd_opt(2016, 3, 1).unwrap();
    (0..n)
        .map(|i| start + chrono::Duration::days(i as i64))
        .collect()
}

proptest! {
    #[test]
    fn cf_modulus_never_exceeds_one(p in any_ndig(), v in -60.0..60.0f64) {
        let phi = ndig_cf(v, &p);
        prop_assert!(
            phi.norm() <= 1.0 + 1e-12,
            "|cf({v})| = {} for {p:?}",
            phi.norm()
        );
    }

    #[test]
    fn cf_is_hermitian(p in any_ndig(), v in 0.0..60.0f64) {
        let plus = ndig_cf(v, &p);
        let minus = ndig_cf(-v, &p);
        prop_assert!(
            (minus - plus.conj()).norm() <= 1e-12 * (1.0 + plus.norm()),
            "cf(-v) != conj(cf(v)) at v = {v}"
        );
    }

    #[test]
    fn cf_is_one_at_the_origin(p in any_ndig()) {
        let phi = ndig_cf(0.0, &p);
        prop_assert!((phi.re - 1.0).abs() < 1e-14 && phi.im.abs() < 1e-14);
    }

    #[test]
    fn avar_agrees_with_the_variational_form(
        xs in prop::collection::vec(-10.0..10.0f64, 1..60),
        level in 0.01..1.0f64,
    ) {
        // Rockafellar-Uryasev: AVaR is the minimum over t of
        // t + mean((-x - t)+)/level, attained at an order statistic.
        let fast = avar(&xs, level).unwrap();
        let n = xs.len() as f64;
        let brute = xs
            .iter()
            .map(|x0| {
                let t = -x0;
                let excess: f64 = xs.iter().map(|x| (-x - t).max(0.0)).sum();
                t + excess / (level * n)
            })
            .fold(f64::INFINITY, f64::min);
        prop_assert!(
            (fast - brute).abs() <= 1e-10 * (1.0 + brute.abs()),
            "avar = {fast}, variational minimum = {brute}"
        );
    }

    #[test]
    fn avar_is_subadditive_homogeneous_translative(
        xs in prop::collection::vec(-5.0..5.0f64, 8..40),
        ys in prop::collection::vec(-5.0..5.0f64, 8..40),
        level in 0.05..1.0f64,
        c in 0.1..10.0f64,
        shift in -2.0..2.0f64,
    ) {
        let m = xs.len().min(ys.len());
        let ax = avar(&xs[..m], level).unwrap();
        let ay = avar(&ys[..m], level).unwrap();
        let sum: Vec<f64> = xs[..m].iter().zip(&ys[..m]).map(|(a, b)| a + b).collect();
        prop_assert!(
            avar(&sum, level).unwrap() <= ax + ay + 1e-9,
            "subadditivity failed"
        );
        let scaled: Vec<f64> = xs[..m].iter().map(|a| c * a).collect();
        prop_assert!(
            (avar(&scaled, level).unwrap() - c * ax).abs() <= 1e-10 * (1.0 + (c * ax).abs()),
            "positive homogeneity failed at c = {c}"
        );
        let moved: Vec<f64> = xs[..m].iter().map(|a| a + shift).collect();
        prop_assert!(
            (avar(&moved, level).unwrap() - (ax - shift)).abs() <= 1e-10 * (1.0 + ax.abs()),
            "translation covariance failed at shift = {shift}"
        );
    }

    #[test]
    fn rachev_ignores_positive_rescaling(
        xs in prop::collection::vec(-4.0..4.0f64, 25..80),
        c in 0.01..100.0f64,
    ) {
        prop_assume!(xs.iter().copied().fold(f64::INFINITY, f64::min) < 0.0);
        let cfg = RatioConfig { beta: 0.1, gamma: 0.1, window: 20 };
        let base = rachev_ratio(&xs, &cfg).unwrap();
        prop_assume!(base.is_valid());
        let scaled: Vec<f64> = xs.iter().map(|x| c * x).collect();
        let after = rachev_ratio(&scaled, &cfg).unwrap().value().unwrap();
        let before = base.value().unwrap();
        prop_assert!(
            (after - before).abs() <= 1e-12 * (1.0 + before.abs()),
            "scaling by {c} moved the ratio from {before} to {after}"
        );
    }

    #[test]
    fn index_formula_is_symmetric_and_monotone(
        w1 in 0.0..1.0f64,
        s1 in 0.0..2.0f64,
        s2 in 0.0..2.0f64,
        bump in 0.01..0.5f64,
    ) {
        let w2 = 1.0 - w1;
        let v = vix_value(&VixInputs::new(w1, w2, s1, s2).unwrap()).unwrap();
        let swapped = vix_value(&VixInputs::new(w2, w1, s2, s1).unwrap()).unwrap();
        prop_assert!(
            (v - swapped).abs() <= 1e-12 * (1.0 + v),
            "swapping the two terms changed the index: {v} vs {swapped}"
        );
        let lo = 100.0 * s1.min(s2);
        let hi = 100.0 * s1.max(s2);
        prop_assert!(
            v >= lo - 1e-9 && v <= hi + 1e-9,
            "index {v} escaped its envelope [{lo}, {hi}]"
        );
        let bumped = vix_value(&VixInputs::new(w1, w2, s1 + bump, s2).unwrap()).unwrap();
        prop_assert!(
            bumped >= v - 1e-12,
            "raising a term volatility lowered the index: {v} -> {bumped}"
        );
    }

    #[test]
    fn interp_weights_fold_to_exactly_one(
        near in 1_000.0..43_200.0f64,
        next in 43_200.0..86_400.0f64,
    ) {
        // The expiries must bracket the 30-day (43,200-minute) point.
        let (w1, w2) = interp_weights(near, next).unwrap();
        prop_assert_eq!(w1 + w2, 1.0, "weights must fold to 1 bitwise");
        prop_assert!((0.0..=1.0).contains(&w1) && (0.0..=1.0).contains(&w2));
    }

    #[test]
    fn normalization_round_trips_and_is_idempotent(
        values in prop::collection::vec(-5.0..5.0f64, 30..120),
    ) {
        prop_assume!(vvix::stats::variance(&values) > 1e-9);
        let raw = VolSeries::new(dates(values.len()), values.clone(), Normalization::Raw).unwrap();
        let z = normalize(&raw).unwrap();
        let m = vvix::stats::mean(&z.values);
        let v = vvix::stats::variance(&z.values);
        prop_assert!(m.abs() < 1e-10, "normalized mean {m}");
        prop_assert!((v - 1.0).abs() < 1e-10, "normalized variance {v}");

        let back = denormalize(&z).unwrap();
        for (a, b) in back.values.iter().zip(&values) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "round trip moved {b} to {a}");
        }

        let zz = normalize(&z).unwrap();
        for (a, b) in zz.values.iter().zip(&z.values) {
            prop_assert!((a - b).abs() <= 1e-10, "re-normalizing moved {b} to {a}");
        }
    }

    #[test]
    fn fractional_difference_inverts_against_negated_order(
        d in 0.01..0.49f64,
        n in 10usize..60,
    ) {
        // (1-L)^d (1-L)^{-d} = 1, so the coefficient convolution must be
        // the delta sequence.
        let pos = frac_diff_coeffs(d, n).unwrap();
        let neg = frac_diff_coeffs(-d, n).unwrap();
        for k in 0..=n {
            let conv: f64 = (0..=k).map(|j| pos[j] * neg[k - j]).sum();
            let target = if k == 0 { 1.0 } else { 0.0 };
            prop_assert!(
                (conv - target).abs() < 1e-10,
                "convolution at lag {k} is {conv} for d = {d}"
            );
        }
    }
}

proptest! {
    // Simulation and FFT cases are costly, so these run fewer samples.
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn clocks_never_run_backwards(p in any_ndig(), seed in 0u64..1_000) {
        let grid: Vec<f64> = (0..=16).map(|i| i as f64 * 0.25).collect();
        let paths = ndig_simulate_clocks(&p, &grid, 1, seed).unwrap();
        let clocks = &paths[0].1;
        for w in clocks.u.windows(2) {
            prop_assert!(w[1] >= w[0], "outer clock decreased: {} -> {}", w[0], w[1]);
        }
        for w in clocks.t_of_u.windows(2) {
            prop_assert!(w[1] >= w[0], "inner clock decreased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn call_prices_keep_their_shape(p in priceable_ndig(), tau in 0.25..1.5f64) {
        let cfg = match PricerConfig::auto(&p, 0.01, 100.0) {
            Ok(c) => c,
            // No damping region for this corner of the strategy box.
            Err(_) => return Ok(()),
        };
        let strikes: Vec<f64> = (0..=20).map(|i| 60.0 + 4.0 * i as f64).collect();
        let calls = carr_madan_call(&p, &cfg, &strikes, tau).unwrap();
        let disc = (-cfg.r * tau).exp();
        for (i, (&k, &c)) in strikes.iter().zip(&calls).enumerate() {
            let intrinsic = (cfg.s0 - k * disc).max(0.0);
            prop_assert!(
                c >= intrinsic - 1e-6 && c <= cfg.s0 + 1e-6,
                "price {c} at strike {k} escaped [{intrinsic}, {}]",
                cfg.s0
            );
            if i > 0 {
                prop_assert!(
                    c <= calls[i - 1] + 1e-8,
                    "call prices must fall with strike: {} then {c}",
                    calls[i - 1]
                );
            }
        }
        for w in calls.windows(3) {
            prop_assert!(
                w[0] - 2.0 * w[1] + w[2] >= -1e-7,
                "convexity in strike broke: {w:?}"
            );
        }
    }
}
