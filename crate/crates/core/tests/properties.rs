mod common;

use std::collections::HashSet;

use nlwb_core::npa::Symbol;
use nlwb_core::qubit::{expression_with_gradient, trace_probability};
use nlwb_core::{
    as_inequality, behavior_of, behavior_of_model, enumerate_strategies, evaluate, BellExpression,
    Event, Monomial, QubitModel, Scenario,
};
use proptest::prelude::*;

use common::{model_born, strategy_value};

const PI: f64 = std::f64::consts::PI;

fn model(n: u16) -> impl Strategy<Value = QubitModel> {
    let n = usize::from(n);
    (
        -PI..PI,
        prop::collection::vec(-PI..PI, n),
        prop::collection::vec(-PI..PI, n),
    )
        .prop_map(|(t, a, b)| QubitModel::new(t, a, b).unwrap())
}

fn any_model() -> impl Strategy<Value = QubitModel> {
    prop_oneof![model(2), model(4), model(6)]
}

fn event(n: u16) -> impl Strategy<Value = Event> {
    (0u8..2, 0u8..2, 1..=n, 1..=n).prop_map(|(i, j, x, y)| Event::new(i, j, x, y))
}

fn terms(n: u16) -> impl Strategy<Value = Vec<(Event, f64)>> {
    prop::collection::vec((event(n), -3i32..=3), 0..24)
        .prop_map(|v| v.into_iter().map(|(e, c)| (e, f64::from(c))).collect())
}

fn symbols() -> impl Strategy<Value = Vec<Symbol>> {
    prop::collection::vec(
        prop_oneof![
            (1u16..=3).prop_map(Symbol::E),
            (1u16..=3).prop_map(Symbol::F)
        ],
        0..=6,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn qubit_behaviors_are_normalized_and_no_signaling(m in any_model()) {
        let b = behavior_of_model(&m);
        let n = m.scenario().n_settings();
        for x in 1..=n {
            for y in 1..=n {
                let total: f64 = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| b.prob(i, j, x, y)).sum();
                prop_assert!((total - 1.0).abs() <= 1e-12);
                for i in 0..2 {
                    prop_assert!(b.prob(i, 0, x, y) >= -1e-12 && b.prob(i, 1, x, y) >= -1e-12);
                }
            }
        }
        for x in 1..=n {
            for i in 0..2u8 {
                let first = b.prob(i, 0, x, 1) + b.prob(i, 1, x, 1);
                for y in 2..=n {
                    prop_assert!((b.prob(i, 0, x, y) + b.prob(i, 1, x, y) - first).abs() <= 1e-12);
                }
            }
        }
        for y in 1..=n {
            for j in 0..2u8 {
                let first = b.prob(0, j, 1, y) + b.prob(1, j, 1, y);
                for x in 2..=n {
                    prop_assert!((b.prob(0, j, x, y) + b.prob(1, j, x, y) - first).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn closed_form_matches_trace_formula(m in any_model()) {
        for e in m.scenario().events() {
            let oracle = model_born(&m, e);
            prop_assert!((m.probability(e) - oracle).abs() <= 1e-12);
            prop_assert!((trace_probability(&m, e) - oracle).abs() <= 1e-12);
        }
    }

    #[test]
    fn gradients_match_central_differences(m in model(4), expr in terms(4)) {
        let expr = BellExpression::from_terms(Scenario::new(4).unwrap(), expr).unwrap();
        let params = m.params();
        let (_, grad) = expression_with_gradient(&expr, &params);
        let h = 1e-6;
        for k in 0..params.len() {
            let mut up = params.clone();
            let mut down = params.clone();
            up[k] += h;
            down[k] -= h;
            let fd = (expression_with_gradient(&expr, &up).0 - expression_with_gradient(&expr, &down).0) / (2.0 * h);
            let scale = grad[k].abs().max(fd.abs()).max(1e-3);
            prop_assert!((grad[k] - fd).abs() <= 1e-4 * scale, "k={} analytic={} fd={}", k, grad[k], fd);
        }
    }

    #[test]
    fn monomial_reduction_ignores_association(word in symbols(), split in 0usize..=6, split2 in 0usize..=6) {
        let whole = Monomial::from_symbols(&word);
        let a = split.min(word.len());
        let b = split2.clamp(a, word.len());
        let (l, m, r) = (&word[..a], &word[a..b], &word[b..]);
        let left_first = Monomial::from_symbols(l).product(&Monomial::from_symbols(m)).product(&Monomial::from_symbols(r));
        let right_first = Monomial::from_symbols(l).product(&Monomial::from_symbols(m).product(&Monomial::from_symbols(r)));
        prop_assert_eq!(&left_first, &whole);
        prop_assert_eq!(&right_first, &whole);
        prop_assert_eq!(Monomial::from_symbols(&whole.symbols()), whole.clone());
        prop_assert_eq!(whole.adjoint().adjoint(), whole.clone());
        let rev: Vec<Symbol> = word.iter().rev().copied().collect();
        prop_assert_eq!(Monomial::from_symbols(&rev), whole.adjoint());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn canonicalization_is_idempotent_and_order_free(t in terms(4)) {
        let s = Scenario::new(4).unwrap();
        let once = BellExpression::from_terms(s, t.clone()).unwrap();
        let twice = BellExpression::from_terms(s, once.terms()).unwrap();
        prop_assert_eq!(&once, &twice);
        let reversed = BellExpression::from_terms(s, t.iter().rev().copied()).unwrap();
        prop_assert!(once.same_terms(&reversed));
        let keys: Vec<(u16, u16, u8, u8)> = once.terms().map(|(e, _)| (e.x, e.y, e.i, e.j)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        prop_assert_eq!(keys, sorted);
        prop_assert!(once.terms().all(|(_, c)| c != 0.0));
    }

    #[test]
    fn evaluate_is_affine_in_the_behavior(m1 in model(4), m2 in model(4), t in terms(4), lambda in 0.0..=1.0f64) {
        let expr = BellExpression::from_terms(Scenario::new(4).unwrap(), t).unwrap();
        let (b1, b2) = (behavior_of_model(&m1), behavior_of_model(&m2));
        let mixed = b1.mix(lambda, &b2).unwrap();
        let lhs = evaluate(&expr, &mixed).unwrap();
        let rhs = lambda * evaluate(&expr, &b1).unwrap() + (1.0 - lambda) * evaluate(&expr, &b2).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }
}

#[test]
fn enumeration_is_complete_and_duplicate_free() {
    for n in [2u16, 4, 6] {
        let strategies: Vec<_> = enumerate_strategies(Scenario::new(n).unwrap())
            .unwrap()
            .collect();
        assert_eq!(strategies.len(), 4usize.pow(u32::from(n)));
        let distinct: HashSet<_> = strategies
            .iter()
            .map(|s| (s.alice_outcomes(), s.bob_outcomes()))
            .collect();
        assert_eq!(distinct.len(), strategies.len());
        assert!(strategies.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn strategy_evaluation_matches_term_counting() {
    for n in [2u16, 4] {
        let s = Scenario::new(n).unwrap();
        let mut exprs = vec![as_inequality(n).unwrap()];
        // A dense expression with distinct weights on every event.
        exprs.push(
            BellExpression::from_terms(
                s,
                s.events()
                    .enumerate()
                    .map(|(k, e)| (e, (k % 7) as f64 - 3.0)),
            )
            .unwrap(),
        );
        for expr in &exprs {
            for strategy in enumerate_strategies(s).unwrap() {
                let oracle =
                    strategy_value(expr, &strategy.alice_outcomes(), &strategy.bob_outcomes());
                assert_eq!(
                    evaluate(expr, &behavior_of(&strategy)).unwrap(),
                    oracle,
                    "{strategy}"
                );
            }
        }
    }
}

#[test]
fn as_family_bounds() {
    for n in [2u16, 4, 6, 8] {
        let expr = as_inequality(n).unwrap();
        let classical = f64::from(n * n + n) / 2.0;
        assert_eq!(expr.classical_bound(), Some(classical));
        assert!(nlwb_core::as_quantum_bound(n).unwrap() > classical);
    }
    assert!(as_inequality(2)
        .unwrap()
        .same_terms(&nlwb_core::chsh_probability_form()));
}
