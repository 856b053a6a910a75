mod common;

use common::*;
use proptest::prelude::*;
use synsafe_core::failures::{
    build_failure_automaton, geometric_cdf, rate_to_step_probability, AnalysisMode, FailureModeDecl, FailurePattern,
    Recovery,
};
use synsafe_core::model::{compose, ComposeOptions, Flavor, PredicateExpr, SystemModel, TimeStep};
use synsafe_core::qualitative::{dcca, Occurrence};
use synsafe_core::quantitative::*;
use synsafe_core::{lang, StateSpace32, StateSpace64};

fn fixture(name: &str) -> SystemModel {
    let path = format!("{}/examples/{name}", env!("CARGO_MANIFEST_DIR"));
    lang::load(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn dtmc(model: &SystemModel) -> StateSpace64 {
    compose(model, Flavor::Dtmc, &ComposeOptions::default()).unwrap()
}

#[test]
fn chain_reaches_target_with_three_quarters() {
    let m = fixture("chain3.ssm");
    let s = dtmc(&m);
    assert_eq!(s.len(), 3);
    // paths of length <= 3 into s2: s0 s1 s2 (1/2), s0 s0 s1 s2 (1/4)
    assert_eq!(hazard_probability(&s, 3).unwrap(), 0.75);
    assert_eq!(enumerate_paths(&m, 3), 0.75);
    assert_eq!(hazard_probability(&s, 0).unwrap(), 0.0);
}

#[test]
fn chain_curve() {
    let s = dtmc(&fixture("chain3.ssm"));
    let dt = TimeStep::from_seconds(1.0).unwrap();
    let curve = hazard_curve(&s, 3, 1, dt).unwrap();
    let values: Vec<f64> = curve.points.iter().map(|p| p.probability).collect();
    assert_eq!(values, vec![0.0, 0.0, 0.5, 0.75]);
    let ks: Vec<u64> = curve.points.iter().map(|p| p.k).collect();
    assert_eq!(ks, vec![0, 1, 2, 3]);
    assert_eq!(curve.points[3].t_seconds, 3.0);

    let coarse = hazard_curve(&s, 3, 3, dt).unwrap();
    assert_eq!(
        coarse.points.last().unwrap().probability,
        hazard_probability(&s, 3).unwrap()
    );
    assert!(hazard_curve(&s, 3, 0, dt).is_err());
}

#[test]
fn single_precision_space_agrees() {
    let m = fixture("chain3.ssm");
    let s: StateSpace32 = compose(&m, Flavor::Dtmc, &ComposeOptions::default()).unwrap();
    let p = hazard_probability(&s, 3).unwrap();
    assert!((p - 0.75f32).abs() < 1e-6);
}

#[test]
fn dtmc_analysis_rejects_other_flavors() {
    let m = fixture("chain3.ssm");
    let nd: StateSpace64 = compose(&m, Flavor::Nondeterministic, &ComposeOptions::default()).unwrap();
    assert!(hazard_probability(&nd, 3).is_err());
    assert!(max_hazard_probability(&nd, 3).is_err());
}

#[test]
fn monte_carlo_on_chain() {
    let s = dtmc(&fixture("chain3.ssm"));
    let est = monte_carlo_hazard(&s, 3, 100_000, 7).unwrap();
    assert!((est.estimate - 0.75).abs() <= 3.0 * est.sigma(), "{est:?}");
    let again = monte_carlo_hazard(&s, 3, 100_000, 7).unwrap();
    assert_eq!(est, again);
    let other = monte_carlo_hazard(&s, 3, 100_000, 8).unwrap();
    assert_ne!(est.hits, other.hits);
}

#[test]
fn monte_carlo_trivial_cases() {
    let text = "const dt = 1s;\nautomaton A { states a, b; init a; a -> a; b -> b; }\nhazard H = A.a;";
    let s = dtmc(&lang::load(text).unwrap());
    let est = monte_carlo_hazard(&s, 5, 1000, 1).unwrap();
    assert_eq!((est.estimate, est.half_width), (1.0, 0.0));

    let text = "const dt = 1s;\nautomaton A { states a, b; init a; a -> a; b -> b; }\nhazard H = A.b;";
    let s = dtmc(&lang::load(text).unwrap());
    assert_eq!(monte_carlo_hazard(&s, 5, 1000, 1).unwrap().estimate, 0.0);
    assert_eq!(hazard_probability(&s, 5).unwrap(), 0.0);
}

fn isolated_failure(recovery: Recovery) -> (SystemModel, f64) {
    let dt = TimeStep::from_seconds(0.01).unwrap();
    let rate = 1e-2;
    let decl = FailureModeDecl {
        name: "F".into(),
        pattern: FailurePattern::PerTime {
            rate_per_hour: rate,
            recovery,
        },
        automaton: 0,
        affects: None,
        injection: None,
    };
    let a = build_failure_automaton(&decl, AnalysisMode::Probabilistic, dt).unwrap();
    let mut m = SystemModel::new(vec![a], PredicateExpr::is(0, 1), dt);
    m.failures.push(decl);
    (m, rate_to_step_probability(rate, dt).unwrap())
}

#[test]
fn isolated_per_time_failure_follows_geometric_law() {
    for recovery in [Recovery::Latching, Recovery::Memoryless] {
        let (m, p) = isolated_failure(recovery);
        let s = dtmc(&m);
        for k in [1u64, 10, 1_000, 100_000] {
            let got = hazard_probability(&s, k).unwrap();
            let want = geometric_cdf(p, k);
            assert!((got - want).abs() <= 1e-12, "k={k}: {got} vs {want}");
            // relative agreement matters at this scale
            assert!(((got - want) / want).abs() < 1e-9, "k={k}: {got} vs {want}");
        }
    }
}

#[test]
fn certain_target_has_probability_one() {
    let s = dtmc(&fixture("chain3.ssm"));
    let all = vec![true; s.len()];
    for k in [0, 1, 5] {
        let x = bounded_until(&s, &all, &all, k).unwrap();
        assert!(x.values.iter().all(|&v| v == 1.0));
    }
}

#[test]
fn phi_masks_states() {
    // phi false in s1: the only way to s2 is blocked
    let s = dtmc(&fixture("chain3.ssm"));
    let phi = vec![true, false, true];
    let x = bounded_until(&s, &phi, s.hazard(), 5).unwrap();
    assert_eq!(x.at(0), 0.0);
    assert_eq!(x.at(1), 0.0);
    assert_eq!(x.at(2), 1.0);
}

#[test]
fn mdp_takes_the_dominating_action() {
    let text = "const dt = 1s;\nautomaton A { states a, b; init a; a -> b; a -> a; b -> b; }\nhazard H = A.b;";
    let m = lang::load(text).unwrap();
    let s: StateSpace64 = compose(&m, Flavor::Mdp, &ComposeOptions::default()).unwrap();
    assert_eq!(max_hazard_probability(&s, 0).unwrap(), 0.0);
    assert_eq!(max_hazard_probability(&s, 1).unwrap(), 1.0);
}

#[test]
fn restricted_until_is_only_a_lower_estimate() {
    let m = probabilistic(&failures_toy());
    let s = dtmc(&m);
    let names = m.failure_names();
    let full = hazard_probability(&s, 20).unwrap();
    for gamma in [vec![], vec!["F0"], vec!["F1"], vec!["F0", "F1"]] {
        let r = diagnostic_restricted_until(&s, &gamma, &names, 20).unwrap();
        assert!(r <= full + 1e-15);
    }
    let both = diagnostic_restricted_until(&s, &["F0", "F1"], &names, 20).unwrap();
    assert!((both - full).abs() < 1e-15);
}

/// Two latching failures; the hazard needs both.
fn failures_toy() -> SystemModel {
    lang::load(
        "const dt = 1s;
         automaton A { states ok, bad; init ok; ok -> bad [F0]; ok -> ok [!F0]; bad -> bad; }
         automaton B { states ok, bad; init ok; ok -> bad [F1]; ok -> ok [!F1]; bad -> bad; }
         failure F0 per_time(360/h);
         failure F1 per_time(720/h);
         hazard H = A.bad & B.bad;",
    )
    .unwrap()
}

#[test]
fn fta_bound_for_two_latching_failures() {
    let m = failures_toy();
    let (r, _) = dcca(&m, Occurrence::Current, 1000).unwrap();
    let mcs: Vec<Vec<String>> = r.minimal_critical_sets.iter().map(|c| c.failures.clone()).collect();
    assert_eq!(mcs, vec![vec!["F0".to_string(), "F1".to_string()]]);
    let k = 30;
    let probs = horizon_probabilities(&m, k, &DemandBounds::default()).unwrap();
    let report = fta_bound(&mcs, &probs).unwrap();
    // F0 and F1 independent; each effect appears one step after the failure
    let want = geometric_cdf(0.1, k - 1) * geometric_cdf(0.2, k - 1);
    let got = hazard_probability(&dtmc(&probabilistic(&m)), k).unwrap();
    assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    assert!(report.bound >= got);
    assert!(!report.with_model_checked(got).violated());
}

#[test]
fn per_demand_probability_needs_a_source() {
    let m = lang::load(
        "const dt = 1s;
         automaton A { states i, s; init i; i -> s [!F]; i -> i [F]; s -> s; }
         failure F per_demand(1e-3) demand (A.i);
         hazard H = A.i;",
    )
    .unwrap();
    let mcs = vec![vec!["F".to_string()]];
    let probs = horizon_probabilities(&m, 10, &DemandBounds::default()).unwrap();
    assert!(fta_bound(&mcs, &probs).is_err());
    let bounds = DemandBounds {
        default_to_probability: true,
        ..Default::default()
    };
    let probs = horizon_probabilities(&m, 10, &bounds).unwrap();
    assert_eq!(fta_bound(&mcs, &probs).unwrap().bound, 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn curve_matches_independent_queries(rm in random_model(), k_max in 0u64..40, stride in 1u64..7) {
        let s = dtmc(&probabilistic(&rm.model(false)));
        let curve = hazard_curve(&s, k_max, stride, TimeStep::from_seconds(1.0).unwrap()).unwrap();
        let mut last = 0.0;
        for p in &curve.points {
            prop_assert_eq!(p.probability, hazard_probability(&s, p.k).unwrap());
            prop_assert!(p.probability >= last);
            last = p.probability;
        }
    }

    #[test]
    fn fta_bound_dominates_model_checking(rm in random_model(), k in 1u64..60) {
        let m = rm.model(false);
        let (r, _) = dcca(&m, Occurrence::Current, 100_000).unwrap();
        let mcs: Vec<Vec<String>> = r.minimal_critical_sets.iter().map(|c| c.failures.clone()).collect();
        let probs = horizon_probabilities(&m, k, &DemandBounds::default()).unwrap();
        let report = fta_bound(&mcs, &probs).unwrap();
        let p = hazard_probability(&dtmc(&probabilistic(&m)), k).unwrap();
        prop_assert!(report.bound + 1e-12 >= p, "bound {} < {}", report.bound, p);
    }
}
