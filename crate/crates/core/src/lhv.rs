//! Deterministic local strategies: the vertices of the local-hidden-variable
//! polytope.
//!
//! A linear functional attains its LHV maximum at a vertex, so exhausting the
//! `2^n · 2^n` strategies gives exact classical bounds. Evaluation streams
//! over strategies without materializing behavior tables: for each Alice
//! assignment the coefficients are folded into per-Bob-setting tables, so a
//! strategy costs `O(n)` lookups.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::hardy::HardyParadox;
use crate::scenario::{Behavior, BellExpression, Scenario};
use crate::tolerance;

/// Fixed outcomes for every setting of both parties.
///
/// Outcomes are packed most-significant-first: `A_1` is the top bit of
/// `alice`, so ordering by `(alice, bob)` is lexicographic order on
/// `(a(A_1), .., a(A_n), b(B_1), .., b(B_n))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DeterministicStrategy {
    n: u16,
    alice: u16,
    bob: u16,
}

impl DeterministicStrategy {
    /// `alice[k]`/`bob[k]` are the outcomes for setting `k + 1`.
    pub fn from_outcomes(alice: &[u8], bob: &[u8]) -> Result<Self> {
        let n = alice.len();
        if bob.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: bob.len(),
            });
        }
        let scenario = Scenario::new(u16::try_from(n).unwrap_or(u16::MAX))?;
        check_capacity(scenario)?;
        let pack = |o: &[u8]| -> Result<u16> {
            o.iter().try_fold(0u16, |acc, &v| match v {
                0 | 1 => Ok((acc << 1) | u16::from(v)),
                other => Err(Error::InvalidOutcome(other)),
            })
        };
        Ok(Self {
            n: scenario.n_settings(),
            alice: pack(alice)?,
            bob: pack(bob)?,
        })
    }

    pub fn scenario(&self) -> Scenario {
        Scenario::new(self.n).expect("strategies are built from valid scenarios")
    }

    /// Alice's outcome for setting `x` (1-based).
    pub fn alice(&self, x: u16) -> u8 {
        ((self.alice >> (self.n - x)) & 1) as u8
    }

    /// Bob's outcome for setting `y` (1-based).
    pub fn bob(&self, y: u16) -> u8 {
        ((self.bob >> (self.n - y)) & 1) as u8
    }

    pub fn alice_outcomes(&self) -> Vec<u8> {
        (1..=self.n).map(|x| self.alice(x)).collect()
    }

    pub fn bob_outcomes(&self) -> Vec<u8> {
        (1..=self.n).map(|y| self.bob(y)).collect()
    }

    /// Position in the lexicographic enumeration.
    pub fn index(&self) -> u64 {
        (u64::from(self.alice) << self.n) | u64::from(self.bob)
    }
}

impl fmt::Display for DeterministicStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a=")?;
        for x in 1..=self.n {
            write!(f, "{}", self.alice(x))?;
        }
        f.write_str(" b=")?;
        for y in 1..=self.n {
            write!(f, "{}", self.bob(y))?;
        }
        Ok(())
    }
}

fn check_capacity(scenario: Scenario) -> Result<()> {
    if scenario.n_settings() > tolerance::MAX_ENUMERATION_SETTINGS {
        return Err(Error::CapacityExceeded {
            n: scenario.n_settings(),
            limit: tolerance::MAX_ENUMERATION_SETTINGS,
        });
    }
    Ok(())
}

/// Lexicographic stream over all deterministic strategies of a scenario.
#[derive(Debug, Clone)]
pub struct Strategies {
    n: u16,
    next: u64,
    end: u64,
}

impl Iterator for Strategies {
    type Item = DeterministicStrategy;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.end {
            return None;
        }
        let k = self.next;
        self.next += 1;
        let mask = (1u64 << self.n) - 1;
        Some(DeterministicStrategy {
            n: self.n,
            alice: (k >> self.n) as u16,
            bob: (k & mask) as u16,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Strategies {}

pub fn enumerate_strategies(scenario: Scenario) -> Result<Strategies> {
    check_capacity(scenario)?;
    let n = scenario.n_settings();
    Ok(Strategies {
        n,
        next: 0,
        end: 1u64 << (2 * n),
    })
}

/// The deterministic behavior `p(ij|xy) = [i = a(x)]·[j = b(y)]`.
pub fn behavior_of(strategy: &DeterministicStrategy) -> Behavior {
    Behavior::from_fn(strategy.scenario(), |e| {
        if strategy.alice(e.x) == e.i && strategy.bob(e.y) == e.j {
            1.0
        } else {
            0.0
        }
    })
    .expect("deterministic rows are normalized")
}

/// Coefficients of one expression folded into `w[x][y][a][b]`.
struct StrategyEvaluator {
    n: usize,
    weights: Vec<[[f64; 2]; 2]>,
}

impl StrategyEvaluator {
    fn new(expr: &BellExpression) -> Self {
        let n = usize::from(expr.scenario().n_settings());
        let mut weights = alloc::vec![[[0.0; 2]; 2]; n * n];
        for (e, c) in expr.terms() {
            weights[(usize::from(e.x) - 1) * n + usize::from(e.y) - 1][usize::from(e.i)]
                [usize::from(e.j)] += c;
        }
        Self { n, weights }
    }

    /// Per-Bob-setting tables `t[y][b] = Σ_x w[x][y][a(x)][b]` for a fixed
    /// Alice assignment.
    fn bob_tables(&self, alice: u16, out: &mut Vec<[f64; 2]>) {
        let n = self.n;
        out.clear();
        out.resize(n, [0.0; 2]);
        for x in 0..n {
            let a = usize::from((alice >> (n - 1 - x)) & 1);
            for (y, t) in out.iter_mut().enumerate() {
                let w = &self.weights[x * n + y][a];
                t[0] += w[0];
                t[1] += w[1];
            }
        }
    }

    fn value_with(tables: &[[f64; 2]], bob: u16) -> f64 {
        let n = tables.len();
        tables
            .iter()
            .enumerate()
            .map(|(y, t)| t[usize::from((bob >> (n - 1 - y)) & 1)])
            .sum()
    }
}

/// Result of [`classical_max`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalMax {
    pub value: f64,
    /// Every strategy within [`tolerance::SATURATION`] of `value`, in
    /// lexicographic order.
    pub maximizers: Vec<DeterministicStrategy>,
    pub checked: u64,
}

fn alice_codes(n: u16) -> core::ops::Range<u32> {
    0..(1u32 << n)
}

/// Runs `f` for every Alice assignment, in order, and collects the results.
fn map_alice<T: Send>(n: u16, f: impl Fn(u16) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        alice_codes(n)
            .into_par_iter()
            .map(|a| f(a as u16))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        alice_codes(n).map(|a| f(a as u16)).collect()
    }
}

/// Maximum of `expr` over the LHV polytope, with all maximizing vertices.
pub fn classical_max(expr: &BellExpression) -> Result<ClassicalMax> {
    let scenario = expr.scenario();
    check_capacity(scenario)?;
    let n = scenario.n_settings();
    let eval = StrategyEvaluator::new(expr);
    let bobs = 1u32 << n;

    let local_max = map_alice(n, |a| {
        let mut t = Vec::new();
        eval.bob_tables(a, &mut t);
        (0..bobs)
            .map(|b| StrategyEvaluator::value_with(&t, b as u16))
            .fold(f64::NEG_INFINITY, f64::max)
    });
    let value = local_max.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let maximizers: Vec<DeterministicStrategy> = map_alice(n, |a| {
        if local_max[usize::from(a)] < value - tolerance::SATURATION {
            return Vec::new();
        }
        let mut t = Vec::new();
        eval.bob_tables(a, &mut t);
        (0..bobs)
            .filter(|&b| {
                StrategyEvaluator::value_with(&t, b as u16) >= value - tolerance::SATURATION
            })
            .map(|b| DeterministicStrategy {
                n,
                alice: a,
                bob: b as u16,
            })
            .collect()
    })
    .into_iter()
    .flatten()
    .collect();

    Ok(ClassicalMax {
        value,
        maximizers,
        checked: 1u64 << (2 * n),
    })
}

/// Exhaustive check that every vertex saturating all Hardy conditions has a
/// vanishing Hardy value.
#[derive(Debug, Clone, PartialEq)]
pub struct SoundnessReport {
    pub paradox_id: String,
    pub n: u16,
    pub checked: u64,
    pub saturating: u64,
    pub counterexamples: Vec<DeterministicStrategy>,
    pub sound: bool,
}

/// Soundness over vertices implies soundness over the whole polytope when
/// each target is the condition's classical maximum: a mixture reaches the
/// maximum only if every strategy in its support does.
pub fn certify_hardy_soundness(paradox: &HardyParadox) -> Result<SoundnessReport> {
    let scenario = paradox.scenario();
    check_capacity(scenario)?;
    let n = scenario.n_settings();
    let evals: Vec<(StrategyEvaluator, f64)> = paradox
        .conditions()
        .iter()
        .map(|c| (StrategyEvaluator::new(&c.expression), c.target))
        .collect();
    let hardy = paradox.hardy_term();
    let bobs = 1u32 << n;

    let per_alice = map_alice(n, |a| {
        let tables: Vec<Vec<[f64; 2]>> = evals
            .iter()
            .map(|(e, _)| {
                let mut t = Vec::new();
                e.bob_tables(a, &mut t);
                t
            })
            .collect();
        let mut saturating = 0u64;
        let mut bad = Vec::new();
        for b in 0..bobs {
            let b = b as u16;
            let saturates = tables.iter().zip(&evals).all(|(t, (_, target))| {
                (StrategyEvaluator::value_with(t, b) - target).abs() <= tolerance::SATURATION
            });
            if saturates {
                saturating += 1;
                let s = DeterministicStrategy {
                    n,
                    alice: a,
                    bob: b,
                };
                if s.alice(hardy.x) == hardy.i && s.bob(hardy.y) == hardy.j {
                    bad.push(s);
                }
            }
        }
        (saturating, bad)
    });

    let saturating = per_alice.iter().map(|(s, _)| s).sum();
    let counterexamples: Vec<_> = per_alice.into_iter().flat_map(|(_, b)| b).collect();
    Ok(SoundnessReport {
        paradox_id: String::from(paradox.id()),
        n,
        checked: 1u64 << (2 * n),
        saturating,
        sound: counterexamples.is_empty(),
        counterexamples,
    })
}
