use proptest::prelude::*;
use stable_convolve::estimators::stats::wilson_lower;
use stable_convolve::estimators::{
    doob_check, doob_constant, dyadic_ladder, khintchine_check, moment_formula_check, report_from_sups,
    small_ball_sups, sup_moment, wiener_sup_moment, DoobParams, MomentParams, SmallBallParams,
};
use stable_convolve::{burgers_modes, Error, ModeSet, StableLaw};

fn modes(n: usize) -> ModeSet {
    ModeSet::power_law(n, 2.0, 2.5, 1.0).unwrap()
}

fn ball(horizon: f64, n_steps: usize, replicas: usize) -> SmallBallParams {
    SmallBallParams { theta_tilde: 0.0, epsilon: 1.0, horizon, n_steps, replicas, seed: 31 }
}

#[test]
fn small_ball_is_monotone_in_epsilon() {
    let law = StableLaw::new(1.5).unwrap();
    let params = ball(0.5, 256, 500);
    let sups = small_ball_sups(&burgers_modes(8, 1.25, 1.0).unwrap(), &law, &params).unwrap();
    let estimates: Vec<f64> = [0.1, 0.3, 1.0, 3.0, 10.0]
        .iter()
        .map(|&epsilon| report_from_sups(&sups, &SmallBallParams { epsilon, ..params.clone() }).estimate)
        .collect();
    assert!(estimates.windows(2).all(|w| w[0] <= w[1]), "{estimates:?}");
}

#[test]
fn nested_horizons_give_monotone_sups() {
    // fixed step: the longer grid extends the shorter one replica by replica
    let law = StableLaw::new(1.3).unwrap();
    let m = modes(6);
    let short = small_ball_sups(&m, &law, &ball(0.25, 128, 200)).unwrap();
    let long = small_ball_sups(&m, &law, &ball(0.5, 256, 200)).unwrap();
    assert!(short.iter().zip(&long).all(|(s, l)| s <= l));
    let short_p = report_from_sups(&short, &ball(0.25, 128, 200)).estimate;
    let long_p = report_from_sups(&long, &ball(0.5, 256, 200)).estimate;
    assert!(long_p <= short_p);
}

#[test]
fn wilson_bound_vanishes_without_hits() {
    assert_eq!(wilson_lower(0, 100, 0.99), 0.0);
    assert!(wilson_lower(1, 100, 0.99) > 0.0);
    assert!(wilson_lower(50, 100, 0.99) < 0.5);
}

#[test]
fn sup_moment_grows_along_the_ladder() {
    let law = StableLaw::new(1.5).unwrap();
    let params = MomentParams { theta_tilde: 0.0, p: 1.0, horizons: dyadic_ladder(-8, -3), n_steps: 256, replicas: 400, seed: 4 };
    let r = sup_moment(&modes(8), &law, &params).unwrap();
    assert!(r.ladder.windows(2).all(|w| w[0].estimate < w[1].estimate));
    assert!(r.slope.is_some() && r.warnings.is_empty());
    let w = wiener_sup_moment(&modes(8), &MomentParams { p: 2.0, ..params }).unwrap();
    assert!(w.ladder.windows(2).all(|w| w[0].estimate < w[1].estimate));
}

#[test]
fn sup_moment_results_are_reproducible() {
    let law = StableLaw::new(1.7).unwrap();
    let params = MomentParams { theta_tilde: 0.1, p: 1.0, horizons: vec![0.01, 0.1], n_steps: 64, replicas: 50, seed: 8 };
    assert_eq!(sup_moment(&modes(5), &law, &params).unwrap(), sup_moment(&modes(5), &law, &params).unwrap());
}

#[test]
fn divergent_summability_is_flagged() {
    let law = StableLaw::new(1.5).unwrap();
    let params = MomentParams { theta_tilde: 1.2, p: 1.0, horizons: vec![0.01], n_steps: 16, replicas: 10, seed: 1 };
    let r = sup_moment(&ModeSet::power_law(128, 2.0, 2.5, 1.0).unwrap(), &law, &params).unwrap();
    assert!(!r.warnings.is_empty());
}

fn exact_rademacher_moment(h: &[f64], p: f64) -> f64 {
    let n = h.len();
    (0..1u32 << n)
        .map(|mask| h.iter().enumerate().map(|(i, v)| if mask >> i & 1 == 1 { *v } else { -*v }).sum::<f64>().abs().powf(p))
        .sum::<f64>()
        / (1u64 << n) as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn khintchine_matches_enumeration(h in prop::collection::vec(-3.0f64..3.0, 1..9), p in 0.5f64..4.0, seed in any::<u64>()) {
        prop_assume!(h.iter().any(|v| v.abs() > 0.1));
        let r = khintchine_check(&h, p, 20_000, seed).unwrap();
        let exact = exact_rademacher_moment(&h, p);
        prop_assert!((r.moment - exact).abs() <= 5.0 * r.moment_stderr + 1e-12 * exact, "{} vs {}", r.moment, exact);
    }
}

#[test]
fn khintchine_ratio_sits_on_the_right_side_of_one() {
    // ‖h‖_2 ≥ (E|S|^p)^{1/p} for p ≤ 2, with equality at p = 2
    let h = [1.0, -2.0, 0.5, 3.0, 1.5];
    let exact = |p: f64| (h.iter().map(|v| v * v).sum::<f64>()).sqrt() / exact_rademacher_moment(&h, p).powf(1.0 / p);
    assert!(exact(1.0) > 1.0);
    assert!((exact(2.0) - 1.0).abs() < 1e-12);
    assert!(exact(4.0) < 1.0);
}

fn doob(p: f64, replicas: usize) -> DoobParams {
    DoobParams { theta_tilde: 0.0, p, horizon: 1.0, n_steps: 256, replicas, seed: 17, bootstrap: 200 }
}

#[test]
fn doob_check_passes_and_guards() {
    let law = StableLaw::new(1.8).unwrap();
    let r = doob_check(&modes(4), &law, &doob(1.5, 1000)).unwrap();
    assert!(r.passes);
    let ratio = r.ratio.unwrap();
    assert!(ratio >= 1.0 && ratio <= doob_constant(1.5));
    assert!(matches!(doob_check(&modes(4), &law, &doob(1.0, 100)), Err(Error::Domain(_))));
    assert!(matches!(doob_check(&modes(4), &law, &doob(1.8, 100)), Err(Error::Domain(_))));
    // Brownian exemption
    let r = doob_check(&modes(4), &StableLaw::new(2.0).unwrap(), &doob(2.0, 500)).unwrap();
    assert!(r.passes && (doob_constant(2.0) - 4.0).abs() < 1e-15);
}

#[test]
fn zero_noise_doob_is_degenerate_but_passes() {
    let quiet = modes(3).with_betas(&[0.0; 3]).unwrap();
    let r = doob_check(&quiet, &StableLaw::new(1.5).unwrap(), &doob(1.2, 50)).unwrap();
    assert!(r.degenerate && r.passes && r.ratio.is_none());
}

#[test]
fn moment_formula_agrees_and_scales_in_t() {
    let law = StableLaw::new(1.5).unwrap();
    let m = modes(8);
    let a = moment_formula_check(&m, &law, 0.25, 1.0, 0.5, 50_000, 3).unwrap();
    assert!(a.agrees, "{} vs {}", a.symmetrized_moment, a.predicted);
    let b = moment_formula_check(&m, &law, 0.25, 4.0, 0.5, 50_000, 3).unwrap();
    assert!(b.agrees);
    // predicted moment scales like t^{p/α}
    assert!((b.predicted / a.predicted - 4f64.powf(0.5 / 1.5)).abs() < 1e-12);
    // |Σ r_k c_k l_k|^p and ‖(c_k l_k)‖^p have comparable means
    assert!(a.norm_moment > 0.5 * a.symmetrized_moment && a.norm_moment < 2.0 * a.symmetrized_moment);
    assert!(moment_formula_check(&m, &law, 0.0, 1.0, 0.75, 10, 3).is_err());
}
