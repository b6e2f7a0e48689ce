use std::collections::BTreeSet;
use std::path::PathBuf;

use proptest::prelude::*;
use stoverify_core::assembly::{build_report, TripleTable};
use stoverify_core::automaton::{translate, Decomposition};
use stoverify_core::ltl::{Formula, Proposition};
use stoverify_core::mc::{
    check_bound, clopper_pearson, estimate_reach, estimate_satisfaction, simulate, trace_of, CheckConfig, Estimate,
    McConfig, McError, Policy,
};
use stoverify_core::system::SwitchedSystem;

fn fixture(name: &str) -> SwitchedSystem {
    SwitchedSystem::load(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)).unwrap()
}

fn one_d(lower: f64, upper: f64, modes: &str, regions: &str, extra: &str, horizon: f64) -> SwitchedSystem {
    let formula = if regions.contains("\"p1\"") { "G !p1" } else { "true" };
    let text = format!(
        r#"{{"dimension": 1, "noise_dimension": 1,
            "state_space": {{"lower": [{lower}], "upper": [{upper}]}},
            "modes": [{modes}], "regions": [{regions}], {extra}
            "complement_prop": "p3", "horizon": {horizon}, "formula": "{formula}"}}"#
    );
    SwitchedSystem::from_json(&text).unwrap()
}

/// Standard Brownian motion on a box wide enough that exit is negligible.
fn wide_brownian() -> SwitchedSystem {
    one_d(
        -12.0,
        12.0,
        r#"{"id": 1, "drift": ["0"], "diffusion": [["1"]]}"#,
        r#"{"prop": "p0", "inequalities": ["x1^2 - 0.01"]}"#,
        "",
        1.0,
    )
}

fn f(s: &str) -> Formula {
    Formula::parse(s).unwrap()
}

/// `P(sup_{t <= T} |W_t| < a)` by the reflection-principle series.
fn two_sided_stay(a: f64, t: f64) -> f64 {
    let pi = std::f64::consts::PI;
    (0..200)
        .map(|k| {
            let m = (2 * k + 1) as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign / m * (-m * m * pi * pi * t / (8.0 * a * a)).exp()
        })
        .sum::<f64>()
        * 4.0
        / pi
}

/// Barrier shift for discretely monitored Brownian motion with step `dt`.
fn monitoring_shift(dt: f64) -> f64 {
    // -zeta(1/2) / sqrt(2 pi)
    0.5826 * dt.sqrt()
}

#[test]
fn reflection_series_reference_values() {
    assert!((two_sided_stay(2.0, 1.0) - 0.9090).abs() < 1e-4);
    assert!((two_sided_stay(0.5, 1.0) - 0.00916).abs() < 1e-4);
}

#[test]
fn zero_dynamics_trajectory_is_constant() {
    let sys = fixture("deterministic_1d.json");
    for policy in [Policy::Constant(0), Policy::PiecewiseRandom { mean_dwell: 0.1 }] {
        let t = simulate(&sys, &policy, &[0.05], 0.01, 7, 3).unwrap();
        assert_eq!(t.states.len(), 101);
        assert!(t.states.iter().all(|x| x == &vec![0.05]));
        assert_eq!(t.stopped_at, None);
    }
}

#[test]
fn brownian_terminal_moments() {
    let sys = wide_brownian();
    let n = 10_000;
    let finals: Vec<f64> = (0..n as u64)
        .map(|i| *simulate(&sys, &Policy::Constant(0), &[0.0], 0.01, 0, i).unwrap().states.last().unwrap().first().unwrap())
        .collect();
    let mean = finals.iter().sum::<f64>() / n as f64;
    let var = finals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!(mean.abs() < 3.0 / (n as f64).sqrt(), "mean {mean}");
    assert!((var - 1.0).abs() < 0.05, "variance {var}");
}

#[test]
fn same_seed_same_trajectory() {
    let sys = fixture("two_mode_1d.json");
    for policy in [Policy::Constant(0), Policy::PiecewiseRandom { mean_dwell: 0.1 }, Policy::MarkovJump { initial: 0 }] {
        let a = simulate(&sys, &policy, &[0.0], 0.01, 11, 5).unwrap();
        let b = simulate(&sys, &policy, &[0.0], 0.01, 11, 5).unwrap();
        assert_eq!(a, b);
        let c = simulate(&sys, &policy, &[0.0], 0.01, 12, 5).unwrap();
        assert_ne!(a, c);
    }
}

#[test]
fn stopped_trajectory_is_frozen_on_the_boundary() {
    let sys = fixture("brownian_1d.json");
    let mut seen = 0;
    for i in 0..200 {
        let t = simulate(&sys, &Policy::Constant(0), &[1.5], 0.01, 0, i).unwrap();
        if let Some(j) = t.stopped_at {
            seen += 1;
            let exit = &t.states[j];
            assert!(exit[0].abs() == 2.0);
            assert!(t.states[j..].iter().all(|x| x == exit));
        }
    }
    assert!(seen > 0);
}

#[test]
fn constant_trajectory_in_initial_set_gives_single_letter() {
    let sys = fixture("deterministic_1d.json");
    let t = simulate(&sys, &Policy::Constant(0), &[0.0], 0.01, 0, 0).unwrap();
    assert_eq!(trace_of(&t, &sys).unwrap().word().to_string(), "(p0)");
}

#[test]
fn crossing_once_gives_two_letters() {
    let sys = one_d(
        -1.0,
        3.0,
        r#"{"id": 1, "drift": ["1"], "diffusion": [["0"]]}"#,
        r#"{"prop": "p1", "inequalities": ["1 - x1"]}"#,
        "",
        2.0,
    );
    let t = simulate(&sys, &Policy::Constant(0), &[0.0], 0.01, 0, 0).unwrap();
    let w = trace_of(&t, &sys).unwrap();
    assert_eq!(w.word().to_string(), "(p3,p1)");
    assert!((w.times[1] - 1.0).abs() < 0.011);
}

#[test]
fn example_start_point_is_labelled_p0() {
    // the example's regions with the dynamics switched off
    let text = r#"{"dimension": 2, "noise_dimension": 2,
        "state_space": {"lower": [-8, -8], "upper": [8, 8]},
        "modes": [{"id": 1, "drift": ["0", "0"], "diffusion": [["0", "0"], ["0", "0"]]}],
        "regions": [
            {"prop": "p0", "inequalities": ["(x1+5)^2 + x2^2 - 2.5"]},
            {"prop": "p1", "inequalities": ["(x1-5)^2 + (x2-5)^2 - 3"]},
            {"prop": "p2", "inequalities": ["(x1-4)^2 + (x2+3)^2 - 2"]}
        ],
        "complement_prop": "p3", "horizon": 1, "formula": "G !p1"}"#;
    let sys = SwitchedSystem::from_json(text).unwrap();
    let t = simulate(&sys, &Policy::Constant(0), &[-5.0, 0.0], 0.01, 0, 0).unwrap();
    assert_eq!(trace_of(&t, &sys).unwrap().word().to_string(), "(p0)");
}

#[test]
fn true_formula_is_always_satisfied() {
    let sys = fixture("brownian_1d.json");
    let cfg = McConfig { trajectories: 500, ..McConfig::default() };
    let e = estimate_satisfaction(&sys, &f("true"), &Policy::Constant(0), &[0.0], &cfg).unwrap();
    assert_eq!(e.phat, 1.0);
    assert_eq!(e.ci_hi, 1.0);
    assert!(e.ci_lo > 0.99);
}

#[test]
fn deterministic_system_never_leaves_initial_set() {
    let sys = fixture("deterministic_1d.json");
    let cfg = McConfig { trajectories: 200, ..McConfig::default() };
    let e = estimate_satisfaction(&sys, &f("G !p1"), &Policy::Constant(0), &[0.0], &cfg).unwrap();
    assert_eq!(e.phat, 1.0);
}

#[test]
fn brownian_safety_matches_discrete_monitoring_reference() {
    let sys = fixture("brownian_1d.json");
    let cfg = McConfig::default();
    let e = estimate_satisfaction(&sys, &f("G !p1"), &Policy::Constant(0), &[0.0], &cfg).unwrap();
    let continuous = two_sided_stay(2.0, 1.0);
    let monitored = two_sided_stay(2.0 + monitoring_shift(cfg.dt), 1.0);
    // grid monitoring misses excursions between steps, biasing the estimate up
    assert!(e.phat > continuous);
    assert!((e.phat - monitored).abs() < 3.0 * e.std_err() + 0.005, "{} vs {monitored}", e.phat);
    assert_eq!(e.excluded, 0);
}

#[test]
fn markov_occupancy_matches_two_state_chain() {
    let sys = fixture("two_mode_1d.json");
    let n = 10_000;
    let in_first = (0..n as u64)
        .filter(|&i| *simulate(&sys, &Policy::MarkovJump { initial: 0 }, &[0.0], 0.01, 3, i).unwrap().modes.last().unwrap() == 0)
        .count();
    let phat = in_first as f64 / n as f64;
    // rates 1 and 1: P(mode 0 at t) = 1/2 + e^{-2t}/2
    let exact = 0.5 + 0.5 * (-2.0f64).exp();
    let sigma = (phat * (1.0 - phat) / n as f64).sqrt();
    assert!((phat - exact).abs() < 3.0 * sigma, "{phat} vs {exact}");
}

#[test]
fn fast_rates_need_a_smaller_step() {
    let sys = one_d(
        -1.0,
        1.0,
        r#"{"id": 1, "drift": ["0"], "diffusion": [["0"]]}, {"id": 2, "drift": ["0"], "diffusion": [["0"]]}"#,
        r#"{"prop": "p0", "inequalities": ["x1^2 - 0.01"]}"#,
        r#""rates": [["-20", "20"], ["20", "-20"]],"#,
        1.0,
    );
    let policy = Policy::MarkovJump { initial: 0 };
    assert!(matches!(simulate(&sys, &policy, &[0.0], 0.01, 0, 0), Err(McError::StepTooLarge(_))));
    assert!(simulate(&sys, &policy, &[0.0], 0.001, 0, 0).is_ok());
}

#[test]
fn dt_refinement_is_within_confidence_width() {
    let sys = fixture("two_mode_1d.json");
    let phi = f("G !p1");
    for policy in [Policy::Constant(0), Policy::PiecewiseRandom { mean_dwell: 0.1 }] {
        let coarse = McConfig { dt: 0.01, trajectories: 4000, ..McConfig::default() };
        let fine = McConfig { dt: 0.005, ..coarse.clone() };
        let a = estimate_satisfaction(&sys, &phi, &policy, &[0.0], &coarse).unwrap();
        let b = estimate_satisfaction(&sys, &phi, &policy, &[0.0], &fine).unwrap();
        assert!((a.phat - b.phat).abs() < a.ci_hi - a.ci_lo, "{policy}: {} vs {}", a.phat, b.phat);
    }
}

#[test]
fn reach_and_safety_estimates_are_complementary() {
    let sys = fixture("brownian_1d.json");
    let cfg = McConfig { trajectories: 2000, ..McConfig::default() };
    let target = sys.region_of(&BTreeSet::from([Proposition::new("p1").unwrap()])).unwrap();
    let reach = estimate_reach(&sys, &target, &Policy::Constant(0), &[0.0], &cfg).unwrap();
    let safe = estimate_satisfaction(&sys, &f("G !p1"), &Policy::Constant(0), &[0.0], &cfg).unwrap();
    assert_eq!(reach.k + safe.k, cfg.trajectories);
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let sys = fixture("two_mode_1d.json");
    let cfg = McConfig { trajectories: 1000, ..McConfig::default() };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
            estimate_satisfaction(&sys, &f("G !p1"), &Policy::MarkovJump { initial: 0 }, &[0.0], &cfg).unwrap()
        })
    };
    assert_eq!(run(1), run(3));
}

fn brownian_report(lower: Option<f64>, sys: &SwitchedSystem) -> stoverify_core::assembly::VerificationReport {
    let dfa = translate(&sys.formula().negate_to_pnf(), &sys.propositions()).unwrap().separate_initial();
    let d = Decomposition::build(&dfa, 0);
    let mut r = build_report(sys.formula().to_string(), String::new(), sys.horizon(), &d, &TripleTable::new());
    if let Some(v) = lower {
        for a in &mut r.propositions {
            a.lower_satisfaction = v;
            a.upper_violation = 1.0 - v;
        }
    }
    r
}

#[test]
fn vacuous_report_always_passes() {
    let sys = fixture("brownian_1d.json");
    let report = brownian_report(None, &sys);
    let cfg = CheckConfig { mc: McConfig { trajectories: 500, ..McConfig::default() }, ..CheckConfig::default() };
    let rows = check_bound(&report, &sys, sys.formula(), &[Policy::Constant(0)], &cfg).unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.pass && r.bound == 0.0));
}

#[test]
fn moderate_bound_passes_on_brownian() {
    let sys = fixture("brownian_1d.json");
    let report = brownian_report(Some(0.7), &sys);
    let cfg = CheckConfig { mc: McConfig { trajectories: 4000, ..McConfig::default() }, points: 1, ..CheckConfig::default() };
    let rows = check_bound(&report, &sys, sys.formula(), &[Policy::Constant(0)], &cfg).unwrap();
    let p0 = rows.iter().find(|r| r.prop == "p0").unwrap();
    assert!(p0.pass, "{p0:?}");
}

#[test]
fn corrupted_bound_fails_on_narrow_target() {
    let sys = one_d(
        -2.0,
        2.0,
        r#"{"id": 1, "drift": ["0"], "diffusion": [["1"]]}"#,
        r#"{"prop": "p0", "inequalities": ["x1^2 - 0.01"]}, {"prop": "p1", "inequalities": ["0.25 - x1^2"]}"#,
        "",
        1.0,
    );
    let report = brownian_report(Some(0.99), &sys);
    let cfg = CheckConfig { mc: McConfig { trajectories: 2000, ..McConfig::default() }, points: 1, ..CheckConfig::default() };
    let rows = check_bound(&report, &sys, sys.formula(), &[Policy::Constant(0)], &cfg).unwrap();
    let p0 = rows.iter().find(|r| r.prop == "p0").unwrap();
    assert!(!p0.pass);
    let monitored = two_sided_stay(0.5 + monitoring_shift(0.01), 1.0);
    assert!((p0.phat - monitored).abs() < 0.02, "{} vs {monitored}", p0.phat);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn interval_contains_point_estimate(n in 1usize..2000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).round() as usize;
        let e = Estimate::new(k, n);
        prop_assert!(0.0 <= e.ci_lo && e.ci_lo <= e.phat && e.phat <= e.ci_hi && e.ci_hi <= 1.0);
        let (lo, hi) = clopper_pearson(k, n, 0.01);
        prop_assert!(lo <= e.ci_lo + 1e-12 && hi >= e.ci_hi - 1e-12);
    }

    #[test]
    fn traces_are_run_length_compressed(seed in 0u64..1000, x0 in -1.9f64..1.9, dwell in 0.01f64..1.0) {
        let sys = fixture("two_mode_1d.json");
        let t = simulate(&sys, &Policy::PiecewiseRandom { mean_dwell: dwell }, &[x0], 0.01, seed, 0).unwrap();
        let w = trace_of(&t, &sys).unwrap();
        prop_assert!(w.letters.windows(2).all(|p| p[0] != p[1]));
        prop_assert_eq!(&w.letters[0], sys.label(&[x0]).unwrap());
        prop_assert!(w.times.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn switching_signals_are_piecewise_constant(seed in 0u64..1000, dwell in 0.005f64..0.5) {
        let sys = fixture("two_mode_1d.json");
        for policy in [Policy::PiecewiseRandom { mean_dwell: dwell }, Policy::MarkovJump { initial: 1 }] {
            let t = simulate(&sys, &policy, &[0.0], 0.01, seed, 1).unwrap();
            prop_assert_eq!(t.modes.len(), t.states.len());
            prop_assert!(t.modes.iter().all(|&m| m < 2));
            let switches = t.modes.windows(2).filter(|p| p[0] != p[1]).count();
            prop_assert!(switches < t.modes.len());
            prop_assert!(t.states.iter().all(|x| sys.state_space().contains(x)));
        }
    }
}
