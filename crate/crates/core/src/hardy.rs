//! Hardy paradoxes as data: condition expressions with targets, plus the
//! probability that plays the role of the Hardy value.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scenario::{as_inequality, evaluate, Behavior, BellExpression, Event, Scenario};

/// `expression = target`.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub expression: BellExpression,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardyParadox {
    id: String,
    scenario: Scenario,
    conditions: Vec<Condition>,
    hardy_term: Event,
    quantum_value_reference: Option<f64>,
}

/// Outcome of [`check`].
#[derive(Debug, Clone, PartialEq)]
pub struct HardyCheck {
    pub conditions_met: bool,
    /// `evaluate(condition_k, b) − target_k`.
    pub residuals: Vec<f64>,
    pub hardy_value: f64,
}

/// The Hardy value slot shared by every paradox built here.
pub const HARDY_TERM: Event = Event::new(0, 0, 1, 1);

impl HardyParadox {
    pub fn new(
        id: impl Into<String>,
        conditions: Vec<Condition>,
        hardy_term: Event,
        quantum_value_reference: Option<f64>,
    ) -> Result<Self> {
        let first = conditions.first().ok_or_else(|| {
            Error::InvalidConfig("a paradox needs at least one condition".to_string())
        })?;
        let scenario = first.expression.scenario();
        for c in &conditions {
            if c.expression.scenario() != scenario {
                return Err(Error::ScenarioMismatch {
                    left: scenario,
                    right: c.expression.scenario(),
                });
            }
            if !c.target.is_finite() {
                return Err(Error::NonFiniteCoefficient(c.target));
            }
        }
        scenario.check_event(&hardy_term)?;
        Ok(Self {
            id: id.into(),
            scenario,
            conditions,
            hardy_term,
            quantum_value_reference,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    pub fn hardy_term(&self) -> Event {
        self.hardy_term
    }

    /// Reported literature value; never used in computation.
    pub fn quantum_value_reference(&self) -> Option<f64> {
        self.quantum_value_reference
    }

    /// Copy with condition `index` retargeted, e.g. to probe certificates.
    pub fn with_condition_target(&self, index: usize, target: f64) -> Result<Self> {
        let mut out = self.clone();
        let len = out.conditions.len();
        let c = out
            .conditions
            .get_mut(index)
            .ok_or(Error::DimensionMismatch {
                expected: len,
                actual: index,
            })?;
        c.target = target;
        out.id = format!("{}-retargeted", self.id);
        Ok(out)
    }

    /// True when every condition and the Hardy term are invariant under
    /// exchanging Alice and Bob.
    pub fn is_party_symmetric(&self) -> bool {
        self.hardy_term.swapped() == self.hardy_term
            && self.conditions.iter().all(|c| {
                let swapped = c.expression.party_swapped();
                self.conditions
                    .iter()
                    .any(|d| d.target == c.target && d.expression.same_terms(&swapped))
            })
    }
}

/// Hardy's original paradox: `P(00|A2B2) = P(01|A1B2) = P(10|A2B1) = 0`
/// with Hardy value `P(00|A1B1)`, quantum maximum `(5√5 − 11)/2`.
pub fn original_hardy() -> HardyParadox {
    let scenario = Scenario::new(2).expect("n=2 is valid");
    let single = |e: Event| Condition {
        expression: BellExpression::from_terms(scenario, [(e, 1.0)]).expect("valid event"),
        target: 0.0,
    };
    let conditions = vec![
        single(Event::new(0, 0, 2, 2)),
        single(Event::new(0, 1, 1, 2)),
        single(Event::new(1, 0, 2, 1)),
    ];
    let reference = (5.0 * libm::sqrt(5.0) - 11.0) / 2.0;
    HardyParadox::new("original", conditions, HARDY_TERM, Some(reference))
        .expect("static paradox is valid")
}

/// Realigned paradox from `I_nn22`: the single condition is the inequality
/// with `P(00|A1B1)` removed, pinned at the classical bound `(n² + n)/2`.
pub fn realigned_hardy(n: u16) -> Result<HardyParadox> {
    let full = as_inequality(n)?;
    let (expression, _) = full.without(HARDY_TERM);
    let nf = f64::from(n);
    let target = (nf * nf + nf) / 2.0;
    let reference = match n {
        2 => Some(0.4140),
        4 => Some(0.7734),
        _ => None,
    };
    HardyParadox::new(
        format!("realigned-n{n}"),
        vec![Condition { expression, target }],
        HARDY_TERM,
        reference,
    )
}

/// Evaluates every condition on `b` and reads off the Hardy value.
pub fn check(paradox: &HardyParadox, b: &Behavior, tol: f64) -> Result<HardyCheck> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if paradox.scenario != b.scenario() {
        return Err(Error::ScenarioMismatch {
            left: paradox.scenario,
            right: b.scenario(),
        });
    }
    let residuals = paradox
        .conditions
        .iter()
        .map(|c| evaluate(&c.expression, b).map(|v| v - c.target))
        .collect::<Result<Vec<_>>>()?;
    let conditions_met = residuals.iter().all(|r| r.abs() <= tol);
    Ok(HardyCheck {
        conditions_met,
        residuals,
        hardy_value: b.get(paradox.hardy_term)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::chsh_probability_form;

    #[test]
    fn original_shape() {
        let p = original_hardy();
        assert_eq!(p.conditions().len(), 3);
        for c in p.conditions() {
            assert_eq!(c.target, 0.0);
            assert_eq!(c.expression.len(), 1);
            assert!(c.expression.terms().all(|(_, w)| w == 1.0));
        }
        let r = p.quantum_value_reference().unwrap();
        assert!((r - 0.09017).abs() < 1e-5);
        assert!(p.is_party_symmetric());
    }

    #[test]
    fn original_on_all_zero_is_not_applicable() {
        let p = original_hardy();
        let b = Behavior::from_fn(
            p.scenario(),
            |e| if e.i == 0 && e.j == 0 { 1.0 } else { 0.0 },
        )
        .unwrap();
        let c = check(&p, &b, 1e-12).unwrap();
        assert!(!c.conditions_met);
        assert_eq!(c.residuals, vec![1.0, 0.0, 0.0]);
        assert_eq!(c.hardy_value, 1.0);
    }

    #[test]
    fn realigned_two_matches_first_seven_chsh_terms() {
        let p = realigned_hardy(2).unwrap();
        assert_eq!(p.conditions().len(), 1);
        let c = &p.conditions()[0];
        assert_eq!(c.target, 3.0);
        assert_eq!(c.expression.len(), 7);
        let listing = [
            Event::new(1, 1, 1, 1),
            Event::new(1, 0, 2, 2),
            Event::new(0, 0, 1, 2),
            Event::new(1, 1, 2, 1),
            Event::new(1, 1, 1, 2),
            Event::new(0, 0, 2, 1),
            Event::new(0, 1, 2, 2),
        ];
        for e in listing {
            assert_eq!(c.expression.coefficient(e), 1.0);
        }
        assert_eq!(c.expression.coefficient(HARDY_TERM), 0.0);
        let (chsh_rest, w) = chsh_probability_form().without(HARDY_TERM);
        assert_eq!(w, 1.0);
        assert!(chsh_rest.same_terms(&c.expression));
    }

    #[test]
    fn realigned_references() {
        assert_eq!(
            realigned_hardy(2).unwrap().quantum_value_reference(),
            Some(0.4140)
        );
        assert_eq!(
            realigned_hardy(4).unwrap().quantum_value_reference(),
            Some(0.7734)
        );
        assert_eq!(realigned_hardy(6).unwrap().quantum_value_reference(), None);
        assert!(realigned_hardy(3).is_err());
    }

    #[test]
    fn uniform_hardy_value() {
        for p in [
            original_hardy(),
            realigned_hardy(2).unwrap(),
            realigned_hardy(4).unwrap(),
        ] {
            let c = check(&p, &Behavior::uniform(p.scenario()), 1e-9).unwrap();
            assert_eq!(c.hardy_value, 0.25);
        }
    }

    #[test]
    fn check_rejects_bad_input() {
        let p = realigned_hardy(2).unwrap();
        assert!(check(&p, &Behavior::uniform(p.scenario()), 0.0).is_err());
        let b4 = Behavior::uniform(Scenario::new(4).unwrap());
        assert!(matches!(
            check(&p, &b4, 1e-6),
            Err(Error::ScenarioMismatch { .. })
        ));
    }

    #[test]
    fn retarget() {
        let p = realigned_hardy(2)
            .unwrap()
            .with_condition_target(0, 2.0)
            .unwrap();
        assert_eq!(p.conditions()[0].target, 2.0);
        assert!(realigned_hardy(2)
            .unwrap()
            .with_condition_target(1, 2.0)
            .is_err());
    }
}
