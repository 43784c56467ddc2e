//! Subsets of a finite ground universe and closure operators on them.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SetError {
    #[error("universe size must be in 1..=64, got {0}")]
    BadUniverse(usize),
    #[error("atom {atom} is outside a universe of {size} atoms")]
    OutsideUniverse { atom: u32, size: u32 },
    #[error("not a closure operator: {0}")]
    NotClosure(String),
}

/// A set of atoms `0..64`, as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct AtomSet(pub u64);

impl AtomSet {
    pub const EMPTY: AtomSet = AtomSet(0);

    pub fn full(n: u32) -> AtomSet {
        if n >= 64 {
            AtomSet(u64::MAX)
        } else {
            AtomSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(a: u32) -> AtomSet {
        AtomSet(1 << a)
    }

    pub fn from_atoms<I: IntoIterator<Item = u32>>(it: I) -> AtomSet {
        AtomSet(it.into_iter().fold(0, |m, a| m | (1 << a)))
    }

    pub fn contains(self, a: u32) -> bool {
        a < 64 && self.0 >> a & 1 == 1
    }

    pub fn union(self, o: AtomSet) -> AtomSet {
        AtomSet(self.0 | o.0)
    }

    pub fn inter(self, o: AtomSet) -> AtomSet {
        AtomSet(self.0 & o.0)
    }

    pub fn minus(self, o: AtomSet) -> AtomSet {
        AtomSet(self.0 & !o.0)
    }

    pub fn is_subset(self, o: AtomSet) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn atoms(self) -> impl Iterator<Item = u32> {
        (0..64).filter(move |&a| self.contains(a))
    }
}

impl fmt::Display for AtomSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.atoms().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for AtomSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for AtomSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.atoms())
    }
}

impl<'de> Deserialize<'de> for AtomSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<u32>::deserialize(d)?;
        if let Some(a) = v.iter().find(|&&a| a >= 64) {
            return Err(serde::de::Error::custom(format!("atom {a} out of range")));
        }
        Ok(AtomSet::from_atoms(v))
    }
}

/// The ground universe `{0, …, size-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Universe {
    pub size: u32,
}

impl Universe {
    pub fn new(size: usize) -> Result<Universe, SetError> {
        if size == 0 || size > 64 {
            return Err(SetError::BadUniverse(size));
        }
        Ok(Universe { size: size as u32 })
    }

    pub fn full(self) -> AtomSet {
        AtomSet::full(self.size)
    }

    pub fn check(self, s: AtomSet) -> Result<(), SetError> {
        match s.minus(self.full()).atoms().next() {
            Some(atom) => Err(SetError::OutsideUniverse { atom, size: self.size }),
            None => Ok(()),
        }
    }

    /// All subsets, for universes of at most 20 atoms.
    pub fn subsets(self) -> impl Iterator<Item = AtomSet> {
        assert!(self.size <= 20, "too many subsets");
        (0..1u64 << self.size).map(AtomSet)
    }
}

/// A closure operator given by its family of closed sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClosureOperator {
    Identity,
    Closed { universe: Universe, closed: Vec<AtomSet> },
}

impl ClosureOperator {
    /// Checks that `closed` contains `∅` and the universe and is closed under
    /// binary unions and intersections, which makes `A ↦ ⋂{F ⊇ A}` a
    /// Kuratowski closure.
    pub fn from_closed_sets(universe: Universe, mut closed: Vec<AtomSet>) -> Result<Self, SetError> {
        closed.sort();
        closed.dedup();
        for &f in &closed {
            universe.check(f)?;
        }
        if !closed.contains(&AtomSet::EMPTY) || !closed.contains(&universe.full()) {
            return Err(SetError::NotClosure("missing ∅ or the universe".into()));
        }
        for &a in &closed {
            for &b in &closed {
                if closed.binary_search(&a.union(b)).is_err() || closed.binary_search(&a.inter(b)).is_err() {
                    return Err(SetError::NotClosure(format!("{a} and {b}")));
                }
            }
        }
        Ok(ClosureOperator::Closed { universe, closed })
    }

    pub fn apply(&self, a: AtomSet) -> AtomSet {
        match self {
            ClosureOperator::Identity => a,
            ClosureOperator::Closed { universe, closed } => closed
                .iter()
                .filter(|f| a.is_subset(**f))
                .fold(universe.full(), |acc, f| acc.inter(*f)),
        }
    }

    /// Brute-force check of the Kuratowski axioms over all subsets.
    pub fn check_kuratowski(&self, universe: Universe) -> Result<(), SetError> {
        if !self.apply(AtomSet::EMPTY).is_empty() {
            return Err(SetError::NotClosure("closure of ∅ is nonempty".into()));
        }
        let subsets: Vec<AtomSet> = universe.subsets().collect();
        for &a in &subsets {
            let ca = self.apply(a);
            if !a.is_subset(ca) || self.apply(ca) != ca {
                return Err(SetError::NotClosure(format!("not extensive or idempotent at {a}")));
            }
            for &b in &subsets {
                if self.apply(a.union(b)) != ca.union(self.apply(b)) {
                    return Err(SetError::NotClosure(format!("unions at {a}, {b}")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atom_sets() {
        let a = AtomSet::from_atoms([0, 3]);
        assert_eq!(a.to_string(), "{0,3}");
        assert!(a.contains(3) && !a.contains(1));
        assert_eq!(serde_json::to_string(&a).unwrap(), "[0,3]");
        let b: AtomSet = serde_json::from_str("[3,5]").unwrap();
        assert_eq!(a.inter(b), AtomSet::singleton(3));
        assert!(Universe::new(4).unwrap().check(AtomSet::singleton(4)).is_err());
    }

    #[test]
    fn sierpinski_closure() {
        let u = Universe::new(2).unwrap();
        // opens ∅, {0}, {0,1}; closed ∅, {1}, {0,1}
        let c = ClosureOperator::from_closed_sets(u, vec![AtomSet(0), AtomSet(2), AtomSet(3)]).unwrap();
        assert_eq!(c.apply(AtomSet::singleton(0)), AtomSet(3));
        assert_eq!(c.apply(AtomSet::singleton(1)), AtomSet(2));
        c.check_kuratowski(u).unwrap();
        assert!(ClosureOperator::from_closed_sets(u, vec![AtomSet(0), AtomSet(1), AtomSet(2), AtomSet(3)]).is_ok());
        assert!(ClosureOperator::from_closed_sets(u, vec![AtomSet(1), AtomSet(3)]).is_err());
    }
}
