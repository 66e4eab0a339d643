use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// One operator letter: `E_x` is Alice's outcome-0 projector for setting
/// `x`, `F_y` Bob's for setting `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    E(u16),
    F(u16),
}

/// A canonical operator word. Alice's letters precede Bob's (the parties
/// commute) and no letter repeats adjacently (projectors are idempotent).
/// The empty word is the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial {
    alice: Vec<u16>,
    bob: Vec<u16>,
}

fn push_reduced(word: &mut Vec<u16>, s: u16) {
    if word.last() != Some(&s) {
        word.push(s);
    }
}

impl Monomial {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_symbols(symbols: &[Symbol]) -> Self {
        let mut m = Self::identity();
        for s in symbols {
            match *s {
                Symbol::E(x) => push_reduced(&mut m.alice, x),
                Symbol::F(y) => push_reduced(&mut m.bob, y),
            }
        }
        m
    }

    pub fn alice(&self) -> &[u16] {
        &self.alice
    }

    pub fn bob(&self) -> &[u16] {
        &self.bob
    }

    pub fn len(&self) -> usize {
        self.alice.len() + self.bob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_identity()
    }

    pub fn is_identity(&self) -> bool {
        self.alice.is_empty() && self.bob.is_empty()
    }

    /// Letters in canonical order.
    pub fn symbols(&self) -> Vec<Symbol> {
        self.alice
            .iter()
            .map(|&x| Symbol::E(x))
            .chain(self.bob.iter().map(|&y| Symbol::F(y)))
            .collect()
    }

    /// Canonical form of `self · other`.
    pub fn product(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for &x in &other.alice {
            push_reduced(&mut out.alice, x);
        }
        for &y in &other.bob {
            push_reduced(&mut out.bob, y);
        }
        out
    }

    /// `w†`: each party's letters reversed.
    pub fn adjoint(&self) -> Self {
        Self {
            alice: self.alice.iter().rev().copied().collect(),
            bob: self.bob.iter().rev().copied().collect(),
        }
    }

    /// Alice and Bob exchanged, `E_k ↔ F_k`.
    pub fn party_swapped(&self) -> Self {
        Self {
            alice: self.bob.clone(),
            bob: self.alice.clone(),
        }
    }

    /// Representative of `{w, w†}`; real moment matrices identify the two.
    pub fn real_class(&self) -> Self {
        let adj = self.adjoint();
        if adj < *self {
            adj
        } else {
            self.clone()
        }
    }

    /// All canonical words of total length at most `level` over `n`
    /// settings per party, ordered by length then lexicographically.
    pub fn basis(n: u16, level: usize) -> Vec<Self> {
        let mut party_words: Vec<Vec<Vec<u16>>> = alloc::vec![alloc::vec![Vec::new()]];
        for len in 1..=level {
            let mut next = Vec::new();
            for w in &party_words[len - 1] {
                for s in 1..=n {
                    if w.last() != Some(&s) {
                        let mut v = w.clone();
                        v.push(s);
                        next.push(v);
                    }
                }
            }
            party_words.push(next);
        }
        let mut out = Vec::new();
        for total in 0..=level {
            for la in (0..=total).rev() {
                for a in &party_words[la] {
                    for b in &party_words[total - la] {
                        out.push(Self {
                            alice: a.clone(),
                            bob: b.clone(),
                        });
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for Monomial {
    /// `E1E2F3`; the identity prints as `I`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return f.write_str("I");
        }
        for x in &self.alice {
            write!(f, "E{x}")?;
        }
        for y in &self.bob {
            write!(f, "F{y}")?;
        }
        Ok(())
    }
}

impl FromStr for Monomial {
    type Err = Error;

    /// Parses the [`fmt::Display`] form; the result is canonicalized.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "I" || s.is_empty() {
            return Ok(Self::identity());
        }
        let bad = || Error::InvalidConfig(String::from("malformed monomial ") + s);
        let mut symbols = Vec::new();
        let bytes = s.as_bytes();
        let mut k = 0;
        while k < bytes.len() {
            let party = bytes[k];
            k += 1;
            let start = k;
            while k < bytes.len() && bytes[k].is_ascii_digit() {
                k += 1;
            }
            let idx: u16 = s[start..k].parse().map_err(|_| bad())?;
            if idx == 0 {
                return Err(bad());
            }
            symbols.push(match party {
                b'E' => Symbol::E(idx),
                b'F' => Symbol::F(idx),
                _ => return Err(bad()),
            });
        }
        Ok(Self::from_symbols(&symbols))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn canonical_form() {
        let w = Monomial::from_symbols(&[
            Symbol::F(1),
            Symbol::E(2),
            Symbol::E(2),
            Symbol::F(1),
            Symbol::E(1),
        ]);
        assert_eq!(w.alice(), &[2, 1]);
        assert_eq!(w.bob(), &[1]);
        assert_eq!(w.to_string(), "E2E1F1");
    }

    #[test]
    fn product_collapses_at_the_seam() {
        let u: Monomial = "E1E2".parse().unwrap();
        let v: Monomial = "E2E1F3".parse().unwrap();
        assert_eq!(u.product(&v).to_string(), "E1E2E1F3");
        assert_eq!(u.adjoint().product(&u).to_string(), "E2E1E2");
    }

    #[test]
    fn parse_roundtrip_and_errors() {
        for s in ["I", "E1", "F12", "E3E1E2F2F1"] {
            assert_eq!(s.parse::<Monomial>().unwrap().to_string(), s);
        }
        assert!("X1".parse::<Monomial>().is_err());
        assert!("E".parse::<Monomial>().is_err());
        assert!("E0".parse::<Monomial>().is_err());
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(Monomial::basis(2, 1).len(), 5);
        assert_eq!(Monomial::basis(4, 1).len(), 9);
        assert_eq!(Monomial::basis(2, 2).len(), 13);
        assert_eq!(Monomial::basis(4, 2).len(), 49);
        assert_eq!(Monomial::basis(4, 3).len(), 217);
        let b = Monomial::basis(2, 1);
        assert!(b[0].is_identity());
        let names: Vec<_> = b.iter().map(|m| m.to_string()).collect();
        assert_eq!(names, vec!["I", "E1", "E2", "F1", "F2"]);
    }

    #[test]
    fn real_class_and_swap() {
        let w: Monomial = "E2E1F1F3".parse().unwrap();
        assert_eq!(w.real_class().to_string(), "E1E2F3F1");
        assert_eq!(w.party_swapped().to_string(), "E1E3F2F1");
        assert_eq!(w.adjoint().adjoint(), w);
    }
}
