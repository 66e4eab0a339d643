use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::hardy::HardyParadox;
use crate::npa::monomial::Monomial;
use crate::qubit::QubitModel;
use crate::scenario::{BellExpression, Event, Scenario};

/// `constant + Σ coeff · moment[index]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearForm {
    pub constant: f64,
    /// Sorted by moment index, no duplicates, no zeros.
    pub coeffs: Vec<(usize, f64)>,
}

impl LinearForm {
    fn from_map(constant: f64, map: BTreeMap<usize, f64>) -> Self {
        Self {
            constant,
            coeffs: map.into_iter().filter(|(_, c)| *c != 0.0).collect(),
        }
    }

    pub fn eval(&self, moments: &[f64]) -> f64 {
        self.constant
            + self
                .coeffs
                .iter()
                .map(|(k, c)| c * moments[*k])
                .sum::<f64>()
    }

    /// Image under a permutation of moment indices.
    pub(crate) fn permuted(&self, perm: &[usize]) -> Self {
        let mut map = BTreeMap::new();
        for (k, c) in &self.coeffs {
            *map.entry(perm[*k]).or_insert(0.0) += c;
        }
        Self::from_map(self.constant, map)
    }
}

/// An NPA relaxation: a moment matrix indexed by `basis`, whose cell
/// `(u, v)` holds the moment of the canonical word `u† v`, with a linear
/// objective and linear equality constraints on the moments.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentProgram {
    scenario: Scenario,
    level: u8,
    basis: Vec<Monomial>,
    moments: Vec<Monomial>,
    index: BTreeMap<Monomial, usize>,
    cell_moment: Vec<usize>,
    objective: LinearForm,
    equalities: Vec<(LinearForm, f64)>,
    null_vectors: Vec<Vec<f64>>,
}

impl MomentProgram {
    /// Maximize `objective` subject to `expression_k = target_k`.
    pub fn new(
        scenario: Scenario,
        level: u8,
        objective: &BellExpression,
        equalities: &[(BellExpression, f64)],
    ) -> Result<Self> {
        if !(1..=3).contains(&level) {
            return Err(Error::UnsupportedLevel(level));
        }
        for e in core::iter::once(objective).chain(equalities.iter().map(|(e, _)| e)) {
            if e.scenario() != scenario {
                return Err(Error::ScenarioMismatch {
                    left: scenario,
                    right: e.scenario(),
                });
            }
        }
        let basis = Monomial::basis(scenario.n_settings(), usize::from(level));
        let size = basis.len();
        let mut moments = Vec::new();
        let mut index = BTreeMap::new();
        let mut cell_moment = vec![0; size * size];
        let adjoints: Vec<Monomial> = basis.iter().map(Monomial::adjoint).collect();
        for r in 0..size {
            for c in r..size {
                let word = adjoints[r].product(&basis[c]).real_class();
                let k = *index.entry(word.clone()).or_insert_with(|| {
                    moments.push(word);
                    moments.len() - 1
                });
                cell_moment[r * size + c] = k;
                cell_moment[c * size + r] = k;
            }
        }
        let mut program = Self {
            scenario,
            level,
            basis,
            moments,
            index,
            cell_moment,
            objective: LinearForm::default(),
            equalities: Vec::new(),
            null_vectors: Vec::new(),
        };
        program.objective = program.expression_form(objective)?;
        program.equalities = equalities
            .iter()
            .map(|(e, t)| Ok((program.expression_form(e)?, *t)))
            .collect::<Result<_>>()?;
        program.null_vectors = equalities
            .iter()
            .filter(|(e, t)| *t == 0.0 && e.terms().all(|(_, c)| c > 0.0))
            .flat_map(|(e, _)| e.terms().map(|(ev, _)| ev))
            .filter_map(|ev| program.event_vector(ev))
            .collect();
        Ok(program)
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn level(&self) -> u8 {
        self.level
    }

    pub fn basis(&self) -> &[Monomial] {
        &self.basis
    }

    pub fn size(&self) -> usize {
        self.basis.len()
    }

    /// Distinct moment classes; index 0 is the identity, pinned to 1.
    pub fn moments(&self) -> &[Monomial] {
        &self.moments
    }

    pub fn moment_index(&self, word: &Monomial) -> Option<usize> {
        self.index.get(&word.real_class()).copied()
    }

    /// Moment index carried by cell `(r, c)`.
    pub fn cell(&self, r: usize, c: usize) -> usize {
        self.cell_moment[r * self.size() + c]
    }

    /// The identification classes: for each moment, every cell carrying it.
    pub fn identification(&self) -> Vec<Vec<(usize, usize)>> {
        let n = self.size();
        let mut out = vec![Vec::new(); self.moments.len()];
        for r in 0..n {
            for c in 0..n {
                out[self.cell_moment[r * n + c]].push((r, c));
            }
        }
        out
    }

    pub fn objective(&self) -> &LinearForm {
        &self.objective
    }

    pub fn equalities(&self) -> &[(LinearForm, f64)] {
        &self.equalities
    }

    /// Coefficient vectors `v` over the basis with `vᵀ M v` equal to a
    /// probability that the equalities force to zero. Any PSD moment matrix
    /// satisfying them has `M v = 0`.
    pub fn null_vectors(&self) -> &[Vec<f64>] {
        &self.null_vectors
    }

    /// The operator `Π_i^x Π_j^y` expanded over the basis, when every word
    /// it needs is present (level 2 and up).
    fn event_vector(&self, e: Event) -> Option<Vec<f64>> {
        let party = |outcome: u8, letter: u16| -> Vec<(Vec<u16>, f64)> {
            if outcome == 0 {
                vec![(vec![letter], 1.0)]
            } else {
                vec![(Vec::new(), 1.0), (vec![letter], -1.0)]
            }
        };
        let mut v = vec![0.0; self.size()];
        for (a, ca) in party(e.i, e.x) {
            for (b, cb) in party(e.j, e.y) {
                let symbols: Vec<super::Symbol> = a
                    .iter()
                    .map(|&x| super::Symbol::E(x))
                    .chain(b.iter().map(|&y| super::Symbol::F(y)))
                    .collect();
                let word = Monomial::from_symbols(&symbols);
                let pos = self.basis.iter().position(|w| *w == word)?;
                v[pos] += ca * cb;
            }
        }
        Some(v)
    }

    /// Dense moment matrix for an assignment of moment values.
    pub fn moment_matrix(&self, moments: &[f64]) -> Result<Vec<f64>> {
        if moments.len() != self.moments.len() {
            return Err(Error::DimensionMismatch {
                expected: self.moments.len(),
                actual: moments.len(),
            });
        }
        Ok(self.cell_moment.iter().map(|&k| moments[k]).collect())
    }

    /// `P(ij|xy)` as a moment form, using `E_x`/`F_y` for outcome 0 and
    /// complements for outcome 1.
    pub fn probability_form(&self, e: Event) -> Result<LinearForm> {
        self.expression_form(&BellExpression::from_terms(self.scenario, [(e, 1.0)])?)
    }

    fn expression_form(&self, expr: &BellExpression) -> Result<LinearForm> {
        let lookup = |w: Monomial| {
            self.moment_index(&w)
                .ok_or(Error::InvalidConfig(alloc::format!(
                    "moment {w} missing from program"
                )))
        };
        let mut constant = 0.0;
        let mut map: BTreeMap<usize, f64> = BTreeMap::new();
        for (e, c) in expr.terms() {
            let ea = lookup(Monomial::from_symbols(&[super::Symbol::E(e.x)]))?;
            let fb = lookup(Monomial::from_symbols(&[super::Symbol::F(e.y)]))?;
            let ef = lookup(Monomial::from_symbols(&[
                super::Symbol::E(e.x),
                super::Symbol::F(e.y),
            ]))?;
            let mut add = |k: usize, w: f64| *map.entry(k).or_insert(0.0) += c * w;
            match (e.i, e.j) {
                (0, 0) => add(ef, 1.0),
                (0, 1) => {
                    add(ea, 1.0);
                    add(ef, -1.0);
                }
                (1, 0) => {
                    add(fb, 1.0);
                    add(ef, -1.0);
                }
                _ => {
                    constant += c;
                    add(ea, -1.0);
                    add(fb, -1.0);
                    add(ef, 1.0);
                }
            }
        }
        Ok(LinearForm::from_map(constant, map))
    }

    /// Moment permutation induced by exchanging the parties.
    pub fn party_swap_permutation(&self) -> Vec<usize> {
        self.moments
            .iter()
            .map(|w| {
                self.moment_index(&w.party_swapped())
                    .expect("basis is closed under the swap")
            })
            .collect()
    }

    /// Whether objective and equality set are invariant under the party
    /// swap, which makes symmetric moment assignments sufficient.
    pub fn is_party_symmetric(&self) -> bool {
        let perm = self.party_swap_permutation();
        self.objective.permuted(&perm) == self.objective
            && self.equalities.iter().all(|(f, t)| {
                let g = f.permuted(&perm);
                self.equalities.iter().any(|(h, s)| s == t && *h == g)
            })
    }

    /// Moments `⟨ψ|w|ψ⟩` of a two-qubit model, one per moment class.
    pub fn qubit_moments(&self, model: &QubitModel) -> Result<Vec<f64>> {
        self.check_model(model)?;
        let psi = qubit_state(model);
        Ok(self
            .moments
            .iter()
            .map(|w| {
                let v = apply_word(model, w, psi);
                psi.iter().zip(&v).map(|(a, b)| a * b).sum()
            })
            .collect())
    }

    /// Gram matrix `⟨u ψ, v ψ⟩` over the basis, computed cell by cell.
    pub fn qubit_gram(&self, model: &QubitModel) -> Result<Vec<f64>> {
        self.check_model(model)?;
        let psi = qubit_state(model);
        let vecs: Vec<[f64; 4]> = self
            .basis
            .iter()
            .map(|w| apply_word(model, w, psi))
            .collect();
        let n = self.size();
        let mut out = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                out[r * n + c] = vecs[r].iter().zip(&vecs[c]).map(|(a, b)| a * b).sum();
            }
        }
        Ok(out)
    }

    fn check_model(&self, model: &QubitModel) -> Result<()> {
        if model.scenario() != self.scenario {
            return Err(Error::ScenarioMismatch {
                left: self.scenario,
                right: model.scenario(),
            });
        }
        Ok(())
    }
}

fn qubit_state(model: &QubitModel) -> [f64; 4] {
    [libm::cos(model.theta()), 0.0, 0.0, libm::sin(model.theta())]
}

/// Outcome-0 projector `(I + A(angle))/2`.
fn projector0(angle: f64) -> [[f64; 2]; 2] {
    let (c2, s2) = (libm::cos(2.0 * angle), libm::sin(2.0 * angle));
    [[(1.0 + c2) / 2.0, s2 / 2.0], [s2 / 2.0, (1.0 - c2) / 2.0]]
}

/// `w |v⟩`, applying the rightmost letter first.
fn apply_word(model: &QubitModel, w: &Monomial, mut v: [f64; 4]) -> [f64; 4] {
    for &y in w.bob().iter().rev() {
        let p = projector0(model.beta()[usize::from(y) - 1]);
        let mut out = [0.0; 4];
        for a in 0..2 {
            for b in 0..2 {
                out[2 * a + b] = p[b][0] * v[2 * a] + p[b][1] * v[2 * a + 1];
            }
        }
        v = out;
    }
    for &x in w.alice().iter().rev() {
        let p = projector0(model.alpha()[usize::from(x) - 1]);
        let mut out = [0.0; 4];
        for a in 0..2 {
            for b in 0..2 {
                out[2 * a + b] = p[a][0] * v[b] + p[a][1] * v[2 + b];
            }
        }
        v = out;
    }
    v
}

/// The relaxation of a Hardy paradox: maximize the Hardy probability subject
/// to every condition.
pub fn build_program(paradox: &HardyParadox, level: u8) -> Result<MomentProgram> {
    let scenario = paradox.scenario();
    let objective = BellExpression::from_terms(scenario, [(paradox.hardy_term(), 1.0)])?;
    let equalities: Vec<(BellExpression, f64)> = paradox
        .conditions()
        .iter()
        .map(|c| (c.expression.clone(), c.target))
        .collect();
    MomentProgram::new(scenario, level, &objective, &equalities)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardy::{original_hardy, realigned_hardy};
    use crate::qubit::behavior_of_model;
    use crate::scenario::{chsh_probability_form, evaluate};

    #[test]
    fn sizes() {
        let p2 = build_program(&realigned_hardy(2).unwrap(), 1).unwrap();
        assert_eq!(p2.size(), 5);
        let p4 = build_program(&realigned_hardy(4).unwrap(), 1).unwrap();
        assert_eq!(p4.size(), 9);
        let p43 = build_program(&realigned_hardy(4).unwrap(), 3).unwrap();
        assert_eq!(p43.size(), 217);
        assert_eq!(p43.moments().len(), 6157);
        assert!(build_program(&realigned_hardy(2).unwrap(), 4).is_err());
        assert!(build_program(&realigned_hardy(2).unwrap(), 0).is_err());
    }

    #[test]
    fn identity_is_moment_zero() {
        let p = build_program(&realigned_hardy(2).unwrap(), 2).unwrap();
        assert!(p.moments()[0].is_identity());
        assert_eq!(p.cell(0, 0), 0);
        for r in (0..p.size()).filter(|&r| p.basis()[r].len() <= 1) {
            assert_eq!(p.cell(r, r), p.cell(0, r), "projectors satisfy P†P = P");
        }
    }

    #[test]
    fn forms_match_qubit_probabilities() {
        let m = QubitModel::new(0.7968, vec![-0.1996, 0.5901], vec![0.1996, -0.5901]).unwrap();
        let b = behavior_of_model(&m);
        let p = MomentProgram::new(m.scenario(), 2, &chsh_probability_form(), &[]).unwrap();
        let mom = p.qubit_moments(&m).unwrap();
        for e in m.scenario().events() {
            let f = p.probability_form(e).unwrap();
            assert!((f.eval(&mom) - b.get(e).unwrap()).abs() < 1e-12, "{e}");
        }
        let chsh = evaluate(&chsh_probability_form(), &b).unwrap();
        assert!((p.objective().eval(&mom) - chsh).abs() < 1e-12);
    }

    #[test]
    fn symmetry_detection() {
        for p in [
            original_hardy(),
            realigned_hardy(2).unwrap(),
            realigned_hardy(4).unwrap(),
        ] {
            assert!(build_program(&p, 2).unwrap().is_party_symmetric());
        }
        let s = Scenario::new(2).unwrap();
        let lopsided = BellExpression::from_terms(s, [(Event::new(0, 1, 1, 2), 1.0)]).unwrap();
        assert!(!MomentProgram::new(s, 1, &lopsided, &[])
            .unwrap()
            .is_party_symmetric());
    }

    #[test]
    fn identification_partitions_cells() {
        let p = build_program(&realigned_hardy(2).unwrap(), 2).unwrap();
        let classes = p.identification();
        assert_eq!(
            classes.iter().map(Vec::len).sum::<usize>(),
            p.size() * p.size()
        );
        assert!(classes.iter().all(|c| !c.is_empty()));
    }
}
