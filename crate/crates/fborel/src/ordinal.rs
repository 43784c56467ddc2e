//! Ordinals below ω^ω in Cantor normal form.
//!
//! An ordinal is a list of terms `ω^e·c` with strictly decreasing exponents
//! and positive coefficients. Text form: `w^2*3 + w^1*1 + 4` (the printer
//! always writes `w^e*c`; the parser also accepts `w`, `w*2`, `w^3`, `ω`).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::coding;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrdinalError {
    #[error("cannot parse ordinal `{0}`")]
    Parse(String),
    #[error("{0} is not a limit ordinal")]
    NotLimit(Ordinal),
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Ordinal {
    terms: Vec<(u32, u64)>,
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::nat(1)
    }

    pub fn nat(n: u64) -> Self {
        if n == 0 {
            Self::zero()
        } else {
            Ordinal { terms: vec![(0, n)] }
        }
    }

    pub fn omega() -> Self {
        Self::omega_pow(1)
    }

    pub fn omega_pow(e: u32) -> Self {
        Ordinal { terms: vec![(e, 1)] }
    }

    /// `ω^e·c`
    pub fn term(e: u32, c: u64) -> Self {
        if c == 0 {
            Self::zero()
        } else {
            Ordinal { terms: vec![(e, c)] }
        }
    }

    /// Builds from raw terms, normalising order and merging equal exponents
    /// the way ordinal addition would.
    pub fn from_terms(terms: &[(u32, u64)]) -> Self {
        terms
            .iter()
            .fold(Self::zero(), |acc, &(e, c)| acc.add(&Self::term(e, c)))
    }

    pub fn terms(&self) -> &[(u32, u64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.terms.iter().all(|t| t.0 == 0)
    }

    pub fn as_finite(&self) -> Option<u64> {
        match self.terms.as_slice() {
            [] => Some(0),
            [(0, c)] => Some(*c),
            _ => None,
        }
    }

    pub fn is_successor(&self) -> bool {
        matches!(self.terms.last(), Some((0, _)))
    }

    /// Limit ordinal (zero is not a limit).
    pub fn is_limit(&self) -> bool {
        !self.is_zero() && !self.is_successor()
    }

    pub fn finite_part(&self) -> u64 {
        match self.terms.last() {
            Some((0, c)) => *c,
            _ => 0,
        }
    }

    /// The limit-or-zero part `λ` of `λ + k`.
    pub fn limit_part(&self) -> Ordinal {
        Ordinal {
            terms: self.terms.iter().copied().filter(|t| t.0 > 0).collect(),
        }
    }

    pub fn is_even(&self) -> bool {
        self.finite_part() % 2 == 0
    }

    pub fn succ(&self) -> Ordinal {
        self.add(&Self::one())
    }

    pub fn pred(&self) -> Option<Ordinal> {
        if !self.is_successor() {
            return None;
        }
        let mut terms = self.terms.clone();
        let last = terms.last_mut().unwrap();
        last.1 -= 1;
        if last.1 == 0 {
            terms.pop();
        }
        Some(Ordinal { terms })
    }

    /// `self + k` for a natural `k`.
    pub fn plus_nat(&self, k: u64) -> Ordinal {
        self.add(&Self::nat(k))
    }

    /// `self - k` when the finite part is at least `k`.
    pub fn minus_nat(&self, k: u64) -> Option<Ordinal> {
        let f = self.finite_part();
        if f < k {
            return None;
        }
        Some(self.limit_part().plus_nat(f - k))
    }

    /// Ordinal addition in CNF: the terms of `self` below the leading exponent
    /// of `other` are absorbed.
    pub fn add(&self, other: &Ordinal) -> Ordinal {
        let Some(&(e0, c0)) = other.terms.first() else {
            return self.clone();
        };
        let mut terms: Vec<(u32, u64)> = self.terms.iter().copied().filter(|t| t.0 >= e0).collect();
        match terms.last_mut() {
            Some(last) if last.0 == e0 => last.1 += c0,
            _ => terms.push((e0, c0)),
        }
        terms.extend_from_slice(&other.terms[1..]);
        Ordinal { terms }
    }

    /// The unique `γ` with `a + γ = self`, when `a <= self`.
    pub fn left_sub(&self, a: &Ordinal) -> Option<Ordinal> {
        if a > self {
            return None;
        }
        let mut k = 0;
        while k < a.terms.len() && k < self.terms.len() && a.terms[k] == self.terms[k] {
            k += 1;
        }
        if k == a.terms.len() {
            return Some(Ordinal { terms: self.terms[k..].to_vec() });
        }
        let (se, sc) = self.terms[k];
        let (ae, ac) = a.terms[k];
        let mut terms = Vec::new();
        if se == ae {
            terms.push((se, sc - ac));
            terms.extend_from_slice(&self.terms[k + 1..]);
        } else {
            terms.extend_from_slice(&self.terms[k..]);
        }
        Some(Ordinal { terms })
    }

    /// The unique `q` with `self = ω·q + m`, `m` finite.
    pub fn div_omega(&self) -> Ordinal {
        Ordinal {
            terms: self.terms.iter().filter(|t| t.0 > 0).map(|&(e, c)| (e - 1, c)).collect(),
        }
    }

    /// `ω·q`
    pub fn omega_times(q: &Ordinal) -> Ordinal {
        Ordinal { terms: q.terms.iter().map(|&(e, c)| (e + 1, c)).collect() }
    }

    /// `α = λ + 2n + i` with `λ` limit or zero and `i ∈ {0,1}`.
    pub fn decompose(&self) -> (Ordinal, u64, u8) {
        let k = self.finite_part();
        (self.limit_part(), k / 2, (k % 2) as u8)
    }

    pub fn reassemble(lambda: &Ordinal, n: u64, i: u8) -> Ordinal {
        lambda.plus_nat(2 * n + i as u64)
    }

    /// `α′ = λ + n`.
    pub fn alpha_prime(&self) -> Ordinal {
        let (l, n, _) = self.decompose();
        l.plus_nat(n)
    }

    pub fn max(a: &Ordinal, b: &Ordinal) -> Ordinal {
        if a >= b { a.clone() } else { b.clone() }
    }
}

impl Ord for Ordinal {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.terms.iter().zip(&other.terms) {
            match a.0.cmp(&b.0).then(a.1.cmp(&b.1)) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        self.terms.len().cmp(&other.terms.len())
    }
}

impl PartialOrd for Ordinal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, &(e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if e == 0 {
                write!(f, "{c}")?;
            } else {
                write!(f, "w^{e}*{c}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ordinal({self})")
    }
}

fn parse_term(raw: &str) -> Option<Ordinal> {
    let t: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return None;
    }
    if t.chars().all(|c| c.is_ascii_digit()) {
        return t.parse().ok().map(Ordinal::nat);
    }
    let rest = t.strip_prefix('w').or_else(|| t.strip_prefix('ω'))?;
    let (exp_part, coef_part) = match rest.split_once('*') {
        Some((a, b)) => (a, Some(b)),
        None => (rest, None),
    };
    let e: u32 = if exp_part.is_empty() {
        1
    } else {
        exp_part.strip_prefix('^')?.parse().ok()?
    };
    let c: u64 = match coef_part {
        Some(c) => c.parse().ok()?,
        None => 1,
    };
    Some(Ordinal::term(e, c))
}

impl FromStr for Ordinal {
    type Err = OrdinalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut acc = Ordinal::zero();
        for part in s.split('+') {
            let t = parse_term(part).ok_or_else(|| OrdinalError::Parse(s.to_string()))?;
            acc = acc.add(&t);
        }
        Ok(acc)
    }
}

impl Serialize for Ordinal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Ordinal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            S(String),
            N(u64),
        }
        match Raw::deserialize(d)? {
            Raw::S(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::N(n) => Ok(Ordinal::nat(n)),
        }
    }
}

/// Which bijection `π_λ : ω → λ` to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Enumeration {
    /// Blocks in CNF order, coordinates decoded left to right.
    #[default]
    Canonical,
    /// Blocks in reverse order, coordinates reversed. Used to check that
    /// nothing downstream depends on the choice.
    Swapped,
}

/// `π_λ` for a limit `λ < ω^ω`.
///
/// `λ` is cut into blocks of order type `ω^e`, one block per unit of each
/// CNF coefficient. Index `k` lands in block `k mod B` at position `k div B`;
/// a position inside `ω^e` is read as `e` coordinates via the balanced
/// pairing coder. For `λ = ω` this is the identity and for `λ = ω·2` it
/// starts `0, ω, 1, ω+1, 2, …`.
#[derive(Clone, Debug)]
pub struct LimitEnumeration {
    blocks: Vec<(Ordinal, u32)>,
    swapped: bool,
}

impl LimitEnumeration {
    pub fn new(lambda: &Ordinal, how: Enumeration) -> Result<Self, OrdinalError> {
        if !lambda.is_limit() {
            return Err(OrdinalError::NotLimit(lambda.clone()));
        }
        let mut blocks = Vec::new();
        let mut start = Ordinal::zero();
        for &(e, c) in lambda.terms() {
            for _ in 0..c {
                blocks.push((start.clone(), e));
                start = start.add(&Ordinal::omega_pow(e));
            }
        }
        let swapped = how == Enumeration::Swapped;
        if swapped {
            blocks.reverse();
        }
        Ok(LimitEnumeration { blocks, swapped })
    }

    pub fn at(&self, k: u64) -> Ordinal {
        let b = self.blocks.len() as u64;
        let (start, e) = &self.blocks[(k % b) as usize];
        let pos = k / b;
        let mut coords = coding::decode_tuple(pos, *e as usize);
        if self.swapped {
            coords.reverse();
        }
        let inner: Vec<(u32, u64)> = coords
            .iter()
            .enumerate()
            .map(|(i, &c)| (*e - 1 - i as u32, c))
            .collect();
        start.add(&Ordinal::from_terms(&inner))
    }
}

/// `π_λ(k)` with the canonical enumeration.
pub fn limit_enumeration(lambda: &Ordinal) -> Result<LimitEnumeration, OrdinalError> {
    LimitEnumeration::new(lambda, Enumeration::Canonical)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(s: &str) -> Ordinal {
        s.parse().unwrap()
    }

    #[test]
    fn parse_print_round_trip() {
        for s in ["0", "4", "w^1*1", "w^2*3 + w^1*1 + 4", "w^5*2 + 7"] {
            assert_eq!(o(s).to_string(), s);
        }
        assert_eq!(o("w"), Ordinal::omega());
        assert_eq!(o("w*2 + 3"), o("w^1*2 + 3"));
        assert_eq!(o("w^2"), Ordinal::omega_pow(2));
        assert_eq!(o("1 + w"), Ordinal::omega());
        assert!("w^".parse::<Ordinal>().is_err());
        assert!("x".parse::<Ordinal>().is_err());
    }

    #[test]
    fn addition_examples() {
        assert_eq!(Ordinal::nat(2).add(&Ordinal::omega()), Ordinal::omega());
        assert_eq!(o("w*2+3").add(&o("w")), o("w*3"));
        assert_eq!(o("w^2 + w").add(&o("w^2*2 + 1")), o("w^2*3 + 1"));
    }

    #[test]
    fn decompose_examples() {
        assert_eq!(o("w+5").decompose(), (o("w"), 2, 1));
        assert_eq!(Ordinal::zero().decompose(), (Ordinal::zero(), 0, 0));
        assert_eq!(o("w^2+w*3+4").decompose(), (o("w^2+w*3"), 2, 0));
        assert_eq!(Ordinal::nat(4).alpha_prime(), Ordinal::nat(2));
        assert_eq!(o("w+5").alpha_prime(), o("w+2"));
        assert_eq!(o("w").alpha_prime(), o("w"));
    }

    #[test]
    fn left_subtraction() {
        assert_eq!(o("w*2").left_sub(&o("w+1")), Some(o("w")));
        assert_eq!(o("w^2+3").left_sub(&o("w*5")), Some(o("w^2+3")));
        assert_eq!(o("5").left_sub(&o("2")), Some(o("3")));
        assert_eq!(o("2").left_sub(&o("5")), None);
        assert_eq!(o("w").left_sub(&o("1")), Some(o("w")));
    }

    #[test]
    fn enumeration_prefixes() {
        let w = limit_enumeration(&o("w")).unwrap();
        for k in 0..50 {
            assert_eq!(w.at(k), Ordinal::nat(k));
        }
        let w2 = limit_enumeration(&o("w*2")).unwrap();
        let got: Vec<Ordinal> = (0..6).map(|k| w2.at(k)).collect();
        let want: Vec<Ordinal> = ["0", "w", "1", "w+1", "2", "w+2"].iter().map(|s| o(s)).collect();
        assert_eq!(got, want);
        assert!(limit_enumeration(&o("w+1")).is_err());
        assert!(limit_enumeration(&Ordinal::zero()).is_err());
    }
}
