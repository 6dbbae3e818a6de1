mod common;

use proptest::prelude::*;
use recruit::experiments::{self, builtin_cases};
use recruit::model::validate;
use recruit::{
    compare, exact_outcome, monte_carlo, CandidateState, Category, CategoryParams, NumericalConfig, Policy,
    Scenario, Verdict,
};

#[test]
fn golden_outcomes_match_closed_forms_and_conserve_mass() {
    let cfg = NumericalConfig::default();
    for (id, after, s) in common::golden_pairs() {
        let d = exact_outcome(&s, &cfg).unwrap();
        let expected = common::golden_gamma_a(id, after);
        assert!((d.mid(Category::A) - expected).abs() <= 1e-6, "{id:?} after={after}: {} vs {expected}", d.mid(Category::A));
        assert!(d.pa_hi + d.pb_hi + d.pnone_hi >= 1.0 - 1e-12);
        assert!(d.pa_lo + d.pb_lo + d.pnone_lo <= 1.0 + 1e-12);
        for (lo, hi) in [d.category(Category::A), d.category(Category::B), d.none()] {
            assert!(lo <= hi && hi - lo <= cfg.prob_tol);
        }
    }
}

#[test]
fn frozen_reference_values() {
    let cfg = NumericalConfig::default();
    let frozen = [
        (0, false, 0.576),
        (0, true, 0.570217),
        (1, false, 0.41080),
        (1, true, 0.354307),
        (2, false, 0.225),
        (2, true, 0.0892319),
        (3, false, 0.152986),
        (3, true, 0.144591),
    ];
    let cases = builtin_cases();
    for (i, after, v) in frozen {
        let s = if after { &cases[i].after } else { &cases[i].before };
        let d = exact_outcome(s, &cfg).unwrap();
        assert!((d.mid(Category::A) - v).abs() < 1e-6, "{:?} {after}", cases[i].id);
    }
}

#[test]
fn builtin_cases_reproduce_their_direction() {
    let cfg = NumericalConfig::default();
    for case in builtin_cases() {
        assert!(experiments::check_conditions(&case).unwrap().all_hold());
        let cmp = experiments::reproduce(&case, &cfg).unwrap();
        assert_eq!(cmp.verdict, case.expected_direction, "{:?}", case.id);
    }
}

#[test]
fn robustness_to_small_perturbations() {
    let cfg = NumericalConfig::default();
    for case in builtin_cases() {
        let out = experiments::robustness(&case, 1e-4, &cfg).unwrap();
        assert!(!out.is_empty());
        for o in &out {
            assert!(o.preserved(), "{:?} {} {:+e}: {o:?}", case.id, o.key, o.eps);
        }
    }
}

fn relabel(s: &Scenario) -> Scenario {
    let mut a = s.cat_b;
    let mut b = s.cat_a;
    a.label = Category::A;
    b.label = Category::B;
    let mut t = Scenario::new(s.delta, a, b, s.mu_b, s.mu_a, s.policy);
    t.initial_pool = s
        .initial_pool
        .iter()
        .rev()
        .map(|c| CandidateState {
            category: c.category.other(),
            ..*c
        })
        .collect();
    t
}

#[test]
fn relabelling_swaps_outcomes() {
    let cfg = NumericalConfig::default();
    for (_, _, s) in common::golden_pairs() {
        let d = exact_outcome(&s, &cfg).unwrap();
        let e = exact_outcome(&relabel(&s), &cfg).unwrap();
        assert!((d.mid(Category::A) - e.mid(Category::B)).abs() <= 1e-12);
        assert!((d.mid(Category::B) - e.mid(Category::A)).abs() <= 1e-12);
        assert!((d.none_mid() - e.none_mid()).abs() <= 1e-12);
    }
}

#[test]
fn monte_carlo_is_seeded() {
    let s = common::case(experiments::CaseId::P4).after;
    let a = monte_carlo(&s, 20_000, 11, 1000).unwrap();
    let b = monte_carlo(&s, 20_000, 11, 1000).unwrap();
    let c = monte_carlo(&s, 20_000, 12, 1000).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.pa, c.pa);
    let d = exact_outcome(&s, &NumericalConfig::default()).unwrap();
    assert!((a.pa - d.mid(Category::A)).abs() <= 4.0 * a.stderr_a);
}

#[test]
fn renewal_share_from_an_empty_pool() {
    // qH = qL = 1: one evaluation reveals the type, so each block hires with
    // probability p0 and otherwise search resumes
    let a = CategoryParams::new(Category::A, 0.5, 1.0, 1.0, 1.0, 0.9);
    let b = CategoryParams::new(Category::B, 0.4, 1.0, 1.0, 1.0, 0.9);
    let mut s = Scenario::new(0.5, a, b, 0.3, 0.7, Policy::Myopic);
    s.initial_pool.clear();
    let d = exact_outcome(&s, &NumericalConfig::default()).unwrap();
    let expected = 0.3 * 0.5 / (0.3 * 0.5 + 0.7 * 0.4);
    assert!((d.mid(Category::A) - expected).abs() <= 1e-12);
}

#[test]
fn compare_refuses_non_arrival_differences() {
    let case = common::case(experiments::CaseId::P1);
    let mut after = case.after.clone();
    after.delta = 0.8;
    assert!(compare(&case.before, &after, &NumericalConfig::default()).is_err());
}

fn symmetric() -> impl Strategy<Value = (Scenario, f64)> {
    (
        0.5f64..0.95,
        0.1f64..0.8,
        0.5f64..2.0,
        prop_oneof![
            (0.3f64..1.0).prop_map(|qh| (qh, 1.0)),
            (0.65f64..0.95).prop_map(|ql| (1.0, ql)),
        ],
        0.85f64..0.97,
        0.0f64..1.0,
        0.05f64..1.0,
        0.0f64..1.0,
        prop_oneof![Just(Policy::Myopic), Just(Policy::OptimalIndex)],
    )
        .prop_map(|(delta, p0, v, (qh, ql), pbar, mu_a, total, z, policy)| {
            let a = CategoryParams::new(Category::A, p0, v, qh, ql, pbar);
            let b = CategoryParams { label: Category::B, ..a };
            let mu_a = mu_a * total;
            let mu_b = total - mu_a;
            (Scenario::new(delta, a, b, mu_a, mu_b, policy), z * mu_b)
        })
        .prop_filter("valid", |(s, _)| validate(s).is_empty())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn blind_reallocation_never_lowers_a((s, zeta) in symmetric()) {
        let after = s.with_mu(s.mu_a + zeta, s.mu_b - zeta);
        let cfg = NumericalConfig::default();
        match compare(&s, &after, &cfg) {
            Ok(c) => prop_assert_ne!(c.verdict, Verdict::Backfires),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}
