//! Bipartite dichotomic Bell scenarios with their behaviors and expressions.
//!
//! Settings are 1-based labels `A_1..A_n` / `B_1..B_n`, outcomes are `0` and
//! `1`. Behaviors are stored densely in `(x, y, i, j)` order; expressions are
//! sparse maps keyed by [`Event`] whose derived ordering is the canonical
//! total order on `(x, y, i, j)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::tolerance;

/// Two parties, `n_settings` measurements each, two outcomes per measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Scenario {
    n_settings: u16,
}

impl Scenario {
    /// Fails unless `n` is a positive even integer.
    pub fn new(n_settings: u16) -> Result<Self> {
        if n_settings < 2 || n_settings % 2 != 0 {
            return Err(Error::InvalidSettings {
                n: i64::from(n_settings),
            });
        }
        Ok(Self { n_settings })
    }

    pub fn n_settings(&self) -> u16 {
        self.n_settings
    }

    pub fn n_outcomes(&self) -> u8 {
        2
    }

    pub fn parties(&self) -> u8 {
        2
    }

    /// Number of entries in a dense behavior table, `4 n²`.
    pub fn behavior_len(&self) -> usize {
        let n = usize::from(self.n_settings);
        4 * n * n
    }

    fn check_setting(&self, index: u16) -> Result<()> {
        if index == 0 || index > self.n_settings {
            return Err(Error::SettingOutOfRange {
                index,
                n: self.n_settings,
            });
        }
        Ok(())
    }

    pub(crate) fn check_event(&self, e: &Event) -> Result<()> {
        self.check_setting(e.x)?;
        self.check_setting(e.y)?;
        if e.i > 1 {
            return Err(Error::InvalidOutcome(e.i));
        }
        if e.j > 1 {
            return Err(Error::InvalidOutcome(e.j));
        }
        Ok(())
    }

    /// Dense offset of `p(ij|xy)`.
    pub(crate) fn offset(&self, e: &Event) -> usize {
        let n = usize::from(self.n_settings);
        (((usize::from(e.x) - 1) * n + usize::from(e.y) - 1) * 2 + usize::from(e.i)) * 2
            + usize::from(e.j)
    }

    /// All `4 n²` events in canonical order.
    pub fn events(&self) -> impl Iterator<Item = Event> + '_ {
        let n = self.n_settings;
        (1..=n).flat_map(move |x| {
            (1..=n).flat_map(move |y| {
                (0..2u8).flat_map(move |i| (0..2u8).map(move |j| Event { x, y, i, j }))
            })
        })
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Scenario(parties=2, n_settings={}, n_outcomes=2)",
            self.n_settings
        )
    }
}

/// The probability index `P(ij|A_x B_y)`.
///
/// Field order gives the canonical `(x, y, i, j)` ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Event {
    pub x: u16,
    pub y: u16,
    pub i: u8,
    pub j: u8,
}

impl Event {
    /// Arguments follow the `P(ij|xy)` reading order.
    pub const fn new(i: u8, j: u8, x: u16, y: u16) -> Self {
        Self { x, y, i, j }
    }

    /// The same event with the parties exchanged.
    pub const fn swapped(self) -> Self {
        Self {
            x: self.y,
            y: self.x,
            i: self.j,
            j: self.i,
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P({}{}|A{}B{})", self.i, self.j, self.x, self.y)
    }
}

/// A full table of conditional probabilities `p(ij|xy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Behavior {
    scenario: Scenario,
    p: Vec<f64>,
}

impl Behavior {
    /// Wraps a dense `(x, y, i, j)` table after checking normalization and
    /// nonnegativity.
    pub fn new(scenario: Scenario, p: Vec<f64>) -> Result<Self> {
        if p.len() != scenario.behavior_len() {
            return Err(Error::DimensionMismatch {
                expected: scenario.behavior_len(),
                actual: p.len(),
            });
        }
        let b = Self { scenario, p };
        b.validate()?;
        Ok(b)
    }

    pub fn from_fn(scenario: Scenario, mut f: impl FnMut(Event) -> f64) -> Result<Self> {
        let p = scenario.events().map(&mut f).collect();
        Self::new(scenario, p)
    }

    /// `p(ij|xy) = 1/4` everywhere.
    pub fn uniform(scenario: Scenario) -> Self {
        Self {
            scenario,
            p: alloc::vec![0.25; scenario.behavior_len()],
        }
    }

    /// Convex combination `λ·self + (1−λ)·other`.
    pub fn mix(&self, lambda: f64, other: &Behavior) -> Result<Self> {
        if self.scenario != other.scenario {
            return Err(Error::ScenarioMismatch {
                left: self.scenario,
                right: other.scenario,
            });
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidBehavior(format!(
                "mixing weight {lambda} outside [0, 1]"
            )));
        }
        let p = self
            .p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        Self::new(self.scenario, p)
    }

    fn validate(&self) -> Result<()> {
        for (k, &v) in self.p.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidBehavior(format!("entry {k} is not finite")));
            }
            if v < -tolerance::NONNEGATIVITY {
                return Err(Error::InvalidBehavior(format!(
                    "entry {k} is negative ({v})"
                )));
            }
        }
        for (row, chunk) in self.p.chunks_exact(4).enumerate() {
            let s: f64 = chunk.iter().sum();
            if (s - 1.0).abs() > tolerance::NORMALIZATION {
                let n = usize::from(self.scenario.n_settings);
                return Err(Error::InvalidBehavior(format!(
                    "outcomes for (A{}, B{}) sum to {s}",
                    row / n + 1,
                    row % n + 1
                )));
            }
        }
        Ok(())
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    /// Dense table in `(x, y, i, j)` row-major order.
    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn get(&self, e: Event) -> Result<f64> {
        self.scenario.check_event(&e)?;
        Ok(self.p[self.scenario.offset(&e)])
    }

    /// `p(ij|xy)` without bounds checking beyond the slice index.
    pub fn prob(&self, i: u8, j: u8, x: u16, y: u16) -> f64 {
        self.p[self.scenario.offset(&Event::new(i, j, x, y))]
    }

    /// Alice's marginal `Σ_j p(ij|xy)`.
    pub fn alice_marginal(&self, i: u8, x: u16, y: u16) -> f64 {
        self.prob(i, 0, x, y) + self.prob(i, 1, x, y)
    }

    /// Bob's marginal `Σ_i p(ij|xy)`.
    pub fn bob_marginal(&self, j: u8, x: u16, y: u16) -> f64 {
        self.prob(0, j, x, y) + self.prob(1, j, x, y)
    }
}

/// A sparse linear functional over behavior entries.
#[derive(Debug, Clone, PartialEq)]
pub struct BellExpression {
    scenario: Scenario,
    terms: BTreeMap<Event, f64>,
    classical_bound: Option<f64>,
    quantum_bound: Option<f64>,
}

impl BellExpression {
    pub fn empty(scenario: Scenario) -> Self {
        Self {
            scenario,
            terms: BTreeMap::new(),
            classical_bound: None,
            quantum_bound: None,
        }
    }

    /// Canonicalizes the given terms: repeated events are summed and
    /// zero coefficients dropped.
    pub fn from_terms(
        scenario: Scenario,
        terms: impl IntoIterator<Item = (Event, f64)>,
    ) -> Result<Self> {
        terms
            .into_iter()
            .try_fold(Self::empty(scenario), |e, (ev, c)| e.with_term(ev, c))
    }

    /// Adds `coeff` to the coefficient of `event`.
    pub fn with_term(mut self, event: Event, coeff: f64) -> Result<Self> {
        self.scenario.check_event(&event)?;
        if !coeff.is_finite() {
            return Err(Error::NonFiniteCoefficient(coeff));
        }
        let c = self.terms.get(&event).copied().unwrap_or(0.0) + coeff;
        if c == 0.0 {
            self.terms.remove(&event);
        } else {
            self.terms.insert(event, c);
        }
        Ok(self)
    }

    pub fn with_bounds(mut self, classical: Option<f64>, quantum: Option<f64>) -> Self {
        self.classical_bound = classical;
        self.quantum_bound = quantum;
        self
    }

    /// Removes `event`, returning the reduced expression and the coefficient
    /// it carried (zero if absent). Bounds are dropped.
    pub fn without(&self, event: Event) -> (Self, f64) {
        let mut terms = self.terms.clone();
        let c = terms.remove(&event).unwrap_or(0.0);
        (
            Self {
                scenario: self.scenario,
                terms,
                classical_bound: None,
                quantum_bound: None,
            },
            c,
        )
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    /// Terms in canonical `(x, y, i, j)` order.
    pub fn terms(&self) -> impl ExactSizeIterator<Item = (Event, f64)> + '_ {
        self.terms.iter().map(|(e, c)| (*e, *c))
    }

    pub fn coefficient(&self, event: Event) -> f64 {
        self.terms.get(&event).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn classical_bound(&self) -> Option<f64> {
        self.classical_bound
    }

    pub fn quantum_bound(&self) -> Option<f64> {
        self.quantum_bound
    }

    /// Image under the party exchange `(i, j, x, y) → (j, i, y, x)`.
    pub fn party_swapped(&self) -> Self {
        Self {
            scenario: self.scenario,
            terms: self.terms.iter().map(|(e, c)| (e.swapped(), *c)).collect(),
            classical_bound: self.classical_bound,
            quantum_bound: self.quantum_bound,
        }
    }

    /// Same coefficient map (bounds are metadata and ignored).
    pub fn same_terms(&self, other: &Self) -> bool {
        self.scenario == other.scenario && self.terms == other.terms
    }
}

/// `Σ coeff · p(ij|xy)` over the expression's terms. Bounds are not enforced.
pub fn evaluate(expr: &BellExpression, b: &Behavior) -> Result<f64> {
    if expr.scenario != b.scenario {
        return Err(Error::ScenarioMismatch {
            left: expr.scenario,
            right: b.scenario,
        });
    }
    Ok(expr
        .terms
        .iter()
        .map(|(e, c)| c * b.p[b.scenario.offset(e)])
        .sum())
}

/// CHSH in probability form: eight unit-coefficient terms, classical bound 3,
/// quantum bound `2 + √2`.
pub fn chsh_probability_form() -> BellExpression {
    let scenario = Scenario { n_settings: 2 };
    let listing = [
        Event::new(1, 1, 1, 1),
        Event::new(1, 0, 2, 2),
        Event::new(0, 0, 1, 2),
        Event::new(1, 1, 2, 1),
        Event::new(1, 1, 1, 2),
        Event::new(0, 0, 2, 1),
        Event::new(0, 1, 2, 2),
        Event::new(0, 0, 1, 1),
    ];
    let expr = BellExpression::from_terms(scenario, listing.into_iter().map(|e| (e, 1.0)))
        .expect("static CHSH listing is valid");
    expr.with_bounds(Some(3.0), Some(2.0 + libm::sqrt(2.0)))
}

/// The `I_nn22` inequality in probability form, with
/// `P(A_i = B_j) = P(00) + P(11)` and `P(A_i ≠ B_j) = P(01) + P(10)`.
pub fn as_inequality(n: u16) -> Result<BellExpression> {
    let scenario = Scenario::new(n)?;
    let mut terms: Vec<(Event, f64)> = Vec::new();
    let equal = |x: u16, y: u16, w: f64, terms: &mut Vec<(Event, f64)>| {
        terms.push((Event::new(0, 0, x, y), w));
        terms.push((Event::new(1, 1, x, y), w));
    };
    for i in 1..=n {
        for j in 1..=(n - i + 1) {
            equal(i, j, 1.0, &mut terms);
        }
    }
    let differ = |x: u16, y: u16, w: f64, terms: &mut Vec<(Event, f64)>| {
        terms.push((Event::new(0, 1, x, y), w));
        terms.push((Event::new(1, 0, x, y), w));
    };
    for i in 2..=n / 2 {
        let w = f64::from(i - 1);
        differ(i, n - i + 2, w, &mut terms);
        differ(n + 2 - i, i, w, &mut terms);
    }
    let mid = n / 2 + 1;
    differ(mid, mid, f64::from(n / 2), &mut terms);

    let nf = f64::from(n);
    let expr = BellExpression::from_terms(scenario, terms)?;
    Ok(expr.with_bounds(Some((nf * nf + nf) / 2.0), Some(as_quantum_bound(n)?)))
}

/// `((n+1)√(n(n+2))/3 + (3n²+2n)/4) / 2`.
pub fn as_quantum_bound(n: u16) -> Result<f64> {
    Scenario::new(n)?;
    let nf = f64::from(n);
    Ok(((nf + 1.0) * libm::sqrt(nf * (nf + 2.0)) / 3.0 + (3.0 * nf * nf + 2.0 * nf) / 4.0) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn all_zero(s: Scenario) -> Behavior {
        Behavior::from_fn(s, |e| if e.i == 0 && e.j == 0 { 1.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn scenario_rejects_odd_and_zero() {
        assert_eq!(Scenario::new(3), Err(Error::InvalidSettings { n: 3 }));
        assert_eq!(Scenario::new(0), Err(Error::InvalidSettings { n: 0 }));
        assert!(Scenario::new(2).is_ok());
    }

    #[test]
    fn chsh_on_uniform_and_all_zero() {
        let chsh = chsh_probability_form();
        let s = chsh.scenario();
        assert_eq!(evaluate(&chsh, &Behavior::uniform(s)).unwrap(), 2.0);
        assert_eq!(evaluate(&chsh, &all_zero(s)).unwrap(), 3.0);
    }

    #[test]
    fn chsh_metadata() {
        let chsh = chsh_probability_form();
        assert_eq!(chsh.len(), 8);
        assert!(chsh.terms().all(|(_, c)| c == 1.0));
        assert_eq!(chsh.classical_bound(), Some(3.0));
        assert!((chsh.quantum_bound().unwrap() - 3.414_213_562_373_095).abs() < 1e-12);
    }

    #[test]
    fn as_two_is_chsh() {
        let as2 = as_inequality(2).unwrap();
        assert!(as2.same_terms(&chsh_probability_form()));
        assert_eq!(as2.classical_bound(), Some(3.0));
    }

    #[test]
    fn as_bounds() {
        assert_eq!(as_inequality(6).unwrap().classical_bound(), Some(21.0));
        assert!((as_quantum_bound(2).unwrap() - (2.0 + libm::sqrt(2.0))).abs() < 1e-12);
        let q4 = 7.0 + 5.0 * libm::sqrt(6.0) / 3.0;
        assert!((as_quantum_bound(4).unwrap() - q4).abs() < 1e-12);
        assert!((q4 - 11.08248).abs() < 1e-5);
        let q6 = (7.0 * libm::sqrt(48.0) / 3.0 + 30.0) / 2.0;
        assert!((as_quantum_bound(6).unwrap() - q6).abs() < 1e-12);
        assert!(as_quantum_bound(5).is_err());
        assert!(as_inequality(7).is_err());
    }

    #[test]
    fn evaluate_rejects_mismatch() {
        let chsh = chsh_probability_form();
        let b = Behavior::uniform(Scenario::new(4).unwrap());
        match evaluate(&chsh, &b) {
            Err(Error::ScenarioMismatch { left, right }) => {
                assert_eq!(left.n_settings(), 2);
                assert_eq!(right.n_settings(), 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn from_terms_merges_and_drops_zero() {
        let s = Scenario::new(2).unwrap();
        let e = Event::new(0, 1, 2, 1);
        let expr =
            BellExpression::from_terms(s, vec![(e, 1.5), (e, -1.5), (Event::new(1, 1, 1, 1), 2.0)])
                .unwrap();
        assert_eq!(expr.len(), 1);
        assert_eq!(expr.coefficient(e), 0.0);
        assert!(BellExpression::from_terms(s, vec![(Event::new(0, 0, 3, 1), 1.0)]).is_err());
        assert!(BellExpression::from_terms(s, vec![(Event::new(2, 0, 1, 1), 1.0)]).is_err());
        assert!(BellExpression::from_terms(s, vec![(e, f64::NAN)]).is_err());
    }

    #[test]
    fn behavior_validation() {
        let s = Scenario::new(2).unwrap();
        assert!(Behavior::new(s, vec![0.25; 15]).is_err());
        let mut p = vec![0.25; 16];
        p[0] = 0.5;
        assert!(Behavior::new(s, p).is_err());
        let mut p = vec![0.25; 16];
        p[0] = -0.25;
        p[1] = 0.75;
        assert!(Behavior::new(s, p).is_err());
    }

    #[test]
    fn offsets_follow_declared_order() {
        let s = Scenario::new(4).unwrap();
        for (k, e) in s.events().enumerate() {
            assert_eq!(s.offset(&e), k);
        }
    }

    #[test]
    fn as_inequality_is_party_symmetric() {
        for n in [2, 4, 6, 8] {
            let e = as_inequality(n).unwrap();
            assert!(e.same_terms(&e.party_swapped()));
        }
    }
}
