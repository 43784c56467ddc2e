//! Finite broom sets, their infinite extensions, classification in the
//! hierarchy `B_α`, and the rank checks for both.
//!
//! A broom is described by a finite expression. Forks are either a finite
//! list of branches, a finite prefix followed by a uniform tail
//! `f_n = (base+n)⌢word` with a fixed sub-broom, or a ladder whose n-th
//! branch is `(base+n)⌢word⌢K_{π_λ(n)}` with `K_δ` the canonical broom of
//! rank δ.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::derive::{self, Kind};
use crate::ordinal::{Enumeration, LimitEnumeration, Ordinal, OrdinalError};
use crate::seqtree::{RayFork, Seq, TreeError, TreeExpr, TreeFamily};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BroomError {
    #[error("forking condition fails: {0}")]
    Forking(String),
    #[error("branch heads must be nonempty")]
    EmptyHead,
    #[error("not a broom set: {0}")]
    NotABroom(String),
    #[error("{0} is not an element of the base broom")]
    NotALeaf(Seq),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Ordinal(#[from] OrdinalError),
}

pub type BroomResult<T> = Result<T, BroomError>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BroomBranch {
    pub head: Seq,
    pub sub: BroomExpr,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BroomExpr {
    /// `{∅}`
    Trivial,
    /// `h⌢B`
    Handle { h: Seq, sub: Box<BroomExpr> },
    /// `⋃_n f_n⌢B_n`
    Fork { family: BroomFamily },
}

/// Heads `(offset+n)⌢word` put on every leaf of a ladder member.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LeafFork {
    pub offset: u64,
    #[serde(default)]
    pub word: Seq,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BroomFamily {
    /// Only a single branch gives a broom; two or more finitely many
    /// branches are not in any `B_α`.
    FiniteList { branches: Vec<BroomBranch> },
    /// `prefix` branches (first entries below `base`), then
    /// `(base+n)⌢word⌢sub` for all n.
    UniformTail {
        #[serde(default)]
        prefix: Vec<BroomBranch>,
        base: u64,
        #[serde(default)]
        word: Seq,
        sub: Box<BroomExpr>,
    },
    /// `(base+n)⌢word⌢K_{π_λ(n)}`; with `leaf`, every leaf of `K_δ` is
    /// replaced by a fork of heads.
    RankLadder {
        lambda: Ordinal,
        #[serde(default)]
        base: u64,
        #[serde(default)]
        word: Seq,
        #[serde(default)]
        enumeration: Enumeration,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        leaf: Option<LeafFork>,
    },
}

/// A ray fork for one element of the base.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LeafRays {
    pub leaf: Seq,
    pub rays: RayFork,
}

/// `A = { s⌢f^s_n⌢ν^s_n }` over the base `B`. Every `s ∈ B` carries the
/// default ray fork unless overridden; `f^s_n = (offset+n)⌢word` and
/// `ν^s_n = tail⌢cycle^ω`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InfBroomExpr {
    pub base: BroomExpr,
    #[serde(default)]
    pub rays: RayFork,
    #[serde(default)]
    pub overrides: Vec<LeafRays>,
}

/// How extensions pick their ray forks.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionStrategy {
    #[serde(default)]
    pub rays: RayFork,
    #[serde(default)]
    pub overrides: Vec<LeafRays>,
}

impl BroomExpr {
    pub fn handle(h: Seq, sub: BroomExpr) -> BroomExpr {
        BroomExpr::Handle { h, sub: Box::new(sub) }
    }

    pub fn uniform(base: u64, word: Seq, sub: BroomExpr) -> BroomExpr {
        BroomExpr::Fork { family: BroomFamily::UniformTail { prefix: vec![], base, word, sub: Box::new(sub) } }
    }

    pub fn validate(&self) -> BroomResult<()> {
        match self {
            BroomExpr::Trivial => Ok(()),
            BroomExpr::Handle { sub, .. } => sub.validate(),
            BroomExpr::Fork { family } => family.validate(),
        }
    }
}

fn check_heads<'a>(branches: impl Iterator<Item = &'a BroomBranch>) -> BroomResult<BTreeSet<u64>> {
    let mut firsts = BTreeSet::new();
    for b in branches {
        let Some(&f) = b.head.0.first() else {
            return Err(BroomError::EmptyHead);
        };
        if !firsts.insert(f) {
            return Err(BroomError::Forking(format!("two heads start with {f}")));
        }
        b.sub.validate()?;
    }
    Ok(firsts)
}

impl BroomFamily {
    pub fn validate(&self) -> BroomResult<()> {
        match self {
            BroomFamily::FiniteList { branches } => {
                check_heads(branches.iter())?;
                match branches.len() {
                    1 => Ok(()),
                    0 => Err(BroomError::NotABroom("empty fork".into())),
                    n => Err(BroomError::NotABroom(format!("a fork of {n} branches is finite"))),
                }
            }
            BroomFamily::UniformTail { prefix, base, sub, .. } => {
                let firsts = check_heads(prefix.iter())?;
                if let Some(f) = firsts.iter().find(|&&f| f >= *base) {
                    return Err(BroomError::Forking(format!("prefix head {f} collides with the tail from {base}")));
                }
                sub.validate()
            }
            BroomFamily::RankLadder { lambda, .. } => {
                if lambda.is_limit() {
                    Ok(())
                } else {
                    Err(BroomError::NotABroom(format!("ladder over non-limit {lambda}")))
                }
            }
        }
    }

    /// The branch whose head starts with `a`.
    fn branch(&self, a: u64) -> BroomResult<Option<BroomBranch>> {
        Ok(match self {
            BroomFamily::FiniteList { branches } => branches.iter().find(|b| b.head.0[0] == a).cloned(),
            BroomFamily::UniformTail { prefix, base, word, sub } => {
                if let Some(b) = prefix.iter().find(|b| b.head.0[0] == a) {
                    Some(b.clone())
                } else if a >= *base {
                    Some(BroomBranch { head: Seq(vec![a]).concat(word), sub: (**sub).clone() })
                } else {
                    None
                }
            }
            BroomFamily::RankLadder { lambda, base, word, enumeration, leaf } => {
                if a < *base {
                    None
                } else {
                    let d = LimitEnumeration::new(lambda, *enumeration)?.at(a - base);
                    Some(BroomBranch { head: Seq(vec![a]).concat(word), sub: canonical_broom(&d, *enumeration, leaf.as_ref()) })
                }
            }
        })
    }
}

/// `K_δ`: `{∅}`, odd `(0)⌢K_{δ-1}`, even successor `⋃_n (n)⌢K_{δ-1}`,
/// limit `⋃_n (n)⌢K_{π_λ(n)}`. With `leaf`, `{∅}` becomes a fork of heads.
pub fn canonical_broom(delta: &Ordinal, enumeration: Enumeration, leaf: Option<&LeafFork>) -> BroomExpr {
    if delta.is_zero() {
        return match leaf {
            None => BroomExpr::Trivial,
            Some(l) => BroomExpr::uniform(l.offset, l.word.clone(), BroomExpr::Trivial),
        };
    }
    match delta.pred() {
        Some(p) => {
            let sub = canonical_broom(&p, enumeration, leaf);
            if delta.is_even() {
                BroomExpr::uniform(0, Seq::empty(), sub)
            } else {
                BroomExpr::handle(Seq(vec![0]), sub)
            }
        }
        None => BroomExpr::Fork {
            family: BroomFamily::RankLadder {
                lambda: delta.clone(),
                base: 0,
                word: Seq::empty(),
                enumeration,
                leaf: leaf.cloned(),
            },
        },
    }
}

/// Smallest even ordinal above `m`.
fn even_above(m: &Ordinal) -> Ordinal {
    if m.is_even() {
        m.plus_nat(2)
    } else {
        m.succ()
    }
}

/// The least α with the denotation in `B_α`.
pub fn classify(b: &BroomExpr) -> BroomResult<Ordinal> {
    b.validate()?;
    Ok(classify_rec(b))
}

fn classify_rec(b: &BroomExpr) -> Ordinal {
    match b {
        BroomExpr::Trivial => Ordinal::zero(),
        BroomExpr::Handle { h, sub } => {
            let c = classify_rec(sub);
            if h.is_empty() || !c.is_even() {
                c
            } else {
                c.succ()
            }
        }
        BroomExpr::Fork { family } => match family {
            BroomFamily::FiniteList { branches } => {
                let br = &branches[0];
                classify_rec(&BroomExpr::handle(br.head.clone(), br.sub.clone()))
            }
            BroomFamily::UniformTail { prefix, sub, .. } => {
                let m = prefix.iter().map(|b| classify_rec(&b.sub)).fold(classify_rec(sub), |a, r| Ordinal::max(&a, &r));
                even_above(&m)
            }
            BroomFamily::RankLadder { lambda, .. } => lambda.clone(),
        },
    }
}

/// The longest sequence common to all elements.
pub fn handle_of(b: &BroomExpr) -> Seq {
    match b {
        BroomExpr::Trivial => Seq::empty(),
        BroomExpr::Handle { h, sub } => h.concat(&handle_of(sub)),
        BroomExpr::Fork { family: BroomFamily::FiniteList { branches } } if branches.len() == 1 => {
            branches[0].head.concat(&handle_of(&branches[0].sub))
        }
        BroomExpr::Fork { .. } => Seq::empty(),
    }
}

/// `s ∈ B`
pub fn contains(b: &BroomExpr, s: &Seq) -> BroomResult<bool> {
    match b {
        BroomExpr::Trivial => Ok(s.is_empty()),
        BroomExpr::Handle { h, sub } => Ok(h.is_prefix_of(s) && contains(sub, &s.suffix(h.len()))?),
        BroomExpr::Fork { family } => {
            let Some(&a) = s.0.first() else { return Ok(false) };
            match family.branch(a)? {
                Some(br) => Ok(br.head.is_prefix_of(s) && contains(&br.sub, &s.suffix(br.head.len()))?),
                None => Ok(false),
            }
        }
    }
}

/// `B(h) = { s ∈ B : h ⊑ s }`, `None` when empty.
pub fn cone(b: &BroomExpr, h: &Seq) -> BroomResult<Option<BroomExpr>> {
    match b {
        BroomExpr::Trivial => Ok(h.is_empty().then_some(BroomExpr::Trivial)),
        BroomExpr::Handle { h: g, sub } => {
            if h.is_prefix_of(g) {
                Ok(Some(b.clone()))
            } else if g.is_prefix_of(h) {
                Ok(cone(sub, &h.suffix(g.len()))?.map(|x| BroomExpr::handle(g.clone(), x)))
            } else {
                Ok(None)
            }
        }
        BroomExpr::Fork { family } => {
            if h.is_empty() {
                return Ok(Some(b.clone()));
            }
            match family.branch(h.0[0])? {
                Some(br) => cone(&BroomExpr::handle(br.head, br.sub), h),
                None => Ok(None),
            }
        }
    }
}

/// The elements reachable with fork indices below `base + width`.
pub fn truncation(b: &BroomExpr, width: u64) -> BroomResult<BTreeSet<Seq>> {
    let mut out = BTreeSet::new();
    trunc_rec(b, width, &Seq::empty(), &mut out)?;
    Ok(out)
}

fn trunc_rec(b: &BroomExpr, width: u64, path: &Seq, out: &mut BTreeSet<Seq>) -> BroomResult<()> {
    match b {
        BroomExpr::Trivial => {
            out.insert(path.clone());
        }
        BroomExpr::Handle { h, sub } => trunc_rec(sub, width, &path.concat(h), out)?,
        BroomExpr::Fork { family } => {
            let firsts: Vec<u64> = match family {
                BroomFamily::FiniteList { branches } => branches.iter().map(|b| b.head.0[0]).collect(),
                BroomFamily::UniformTail { prefix, base, .. } => {
                    prefix.iter().map(|b| b.head.0[0]).chain(*base..base + width).collect()
                }
                BroomFamily::RankLadder { base, .. } => (*base..base + width).collect(),
            };
            for a in firsts {
                let br = family.branch(a)?.expect("listed branch");
                trunc_rec(&br.sub, width, &path.concat(&br.head), out)?;
            }
        }
    }
    Ok(())
}

/// Rank of a finite set of sequences read as a finite broom: forks need at
/// least two branches. Every split of a branch into head and rest is
/// tried. `None` when the set is not of that form.
pub fn brute_rank(set: &BTreeSet<Seq>) -> Option<u64> {
    if set.is_empty() {
        return None;
    }
    if set.len() == 1 && set.contains(&Seq::empty()) {
        return Some(0);
    }
    let lcp = common_prefix(set);
    if !lcp.is_empty() {
        // h⌢B' with h = lcp; shorter handles leave a nonempty common
        // prefix inside, which cannot be a fork or {∅}
        let rest: BTreeSet<Seq> = set.iter().map(|s| s.suffix(lcp.len())).collect();
        let r = brute_rank(&rest)?;
        return Some(if r % 2 == 0 { r + 1 } else { r });
    }
    if set.contains(&Seq::empty()) {
        return None;
    }
    let mut groups: std::collections::BTreeMap<u64, BTreeSet<Seq>> = Default::default();
    for s in set {
        groups.entry(s.0[0]).or_default().insert(s.suffix(1));
    }
    if groups.len() < 2 {
        return None;
    }
    let mut top = 0;
    for g in groups.values() {
        let gl = common_prefix(g);
        let best = (0..=gl.len())
            .filter_map(|k| brute_rank(&g.iter().map(|s| s.suffix(k)).collect()))
            .min()?;
        top = top.max(best);
    }
    Some(if top % 2 == 0 { top + 2 } else { top + 1 })
}

fn common_prefix(set: &BTreeSet<Seq>) -> Seq {
    let mut it = set.iter();
    let first = it.next().cloned().unwrap_or_default();
    let mut k = first.len();
    for s in it {
        k = k.min(s.0.iter().zip(&first.0).take_while(|(a, b)| a == b).count());
    }
    first.prefix(k)
}

enum LeafMode<'a> {
    Point,
    Rays(&'a RayFork, &'a [LeafRays]),
}

impl LeafMode<'_> {
    fn leaf(&self, path: Option<&Seq>) -> TreeExpr {
        match self {
            LeafMode::Point => TreeExpr::Point,
            LeafMode::Rays(d, ov) => {
                let rf = path.and_then(|p| ov.iter().find(|o| &o.leaf == p)).map_or(*d, |o| &o.rays);
                rf.tree()
            }
        }
    }

    fn overrides_below(&self, path: Option<&Seq>) -> Vec<&Seq> {
        match (self, path) {
            (LeafMode::Rays(_, ov), Some(p)) => ov.iter().map(|o| &o.leaf).filter(|l| p.is_prefix_of(l)).collect(),
            _ => vec![],
        }
    }
}

/// `cl_Tr(B)`
pub fn closure_tree(b: &BroomExpr) -> BroomResult<TreeExpr> {
    b.validate()?;
    closure_rec(b, Some(&Seq::empty()), &LeafMode::Point)
}

fn closure_rec(b: &BroomExpr, path: Option<&Seq>, mode: &LeafMode) -> BroomResult<TreeExpr> {
    let sub_path = |h: &Seq| path.map(|p| p.concat(h));
    Ok(match b {
        BroomExpr::Trivial => mode.leaf(path),
        BroomExpr::Handle { h, sub } => TreeExpr::graft(h.clone(), closure_rec(sub, sub_path(h).as_ref(), mode)?),
        BroomExpr::Fork { family } => match family {
            BroomFamily::FiniteList { branches } => TreeExpr::join_finite(
                branches
                    .iter()
                    .map(|br| Ok((br.head.clone(), closure_rec(&br.sub, sub_path(&br.head).as_ref(), mode)?)))
                    .collect::<BroomResult<Vec<_>>>()?,
            ),
            BroomFamily::UniformTail { base, word, sub, .. } => {
                let depth = path.map_or(0, |p| p.len());
                let last = mode.overrides_below(path).iter().map(|l| l.0[depth]).filter(|&a| a >= *base).max();
                let len = last.map_or(*base, |m| m + 1);
                let mut members = vec![TreeExpr::Empty; len as usize];
                for a in 0..len {
                    if let Some(br) = family.branch(a)? {
                        let t = closure_rec(&br.sub, sub_path(&br.head).as_ref(), mode)?;
                        members[a as usize] = TreeExpr::graft(br.head.suffix(1), t);
                    }
                }
                let tail = TreeExpr::graft(word.clone(), closure_rec(sub, None, mode)?);
                TreeExpr::join_omega(TreeFamily::PrefixThenConstant { prefix: members, tail })
            }
            BroomFamily::RankLadder { lambda, base, word, enumeration, leaf } => {
                if leaf.is_some() {
                    return Err(BroomError::Unsupported("closure of a ladder with forked leaves".into()));
                }
                if !mode.overrides_below(path).is_empty() {
                    return Err(BroomError::Unsupported("ray overrides inside a ladder".into()));
                }
                let ext = match mode {
                    LeafMode::Point => None,
                    LeafMode::Rays(d, _) => Some((*d).clone()),
                };
                TreeExpr::join_omega(TreeFamily::BroomSeq {
                    lambda: lambda.clone(),
                    head: word.clone(),
                    offset: *base,
                    ext,
                    enumeration: *enumeration,
                })
            }
        },
    })
}

impl InfBroomExpr {
    pub fn validate(&self) -> BroomResult<()> {
        self.base.validate()?;
        let mut seen = BTreeSet::new();
        for o in &self.overrides {
            if !contains(&self.base, &o.leaf)? {
                return Err(BroomError::NotALeaf(o.leaf.clone()));
            }
            if !seen.insert(&o.leaf) {
                return Err(BroomError::Forking(format!("two ray forks for {}", o.leaf)));
            }
        }
        Ok(())
    }

    fn rays_at(&self, s: Option<&Seq>) -> &RayFork {
        s.and_then(|p| self.overrides.iter().find(|o| &o.leaf == p)).map_or(&self.rays, |o| &o.rays)
    }

    /// `cl_Tr(A)`
    pub fn closure_tree(&self) -> BroomResult<TreeExpr> {
        self.validate()?;
        closure_rec(&self.base, Some(&Seq::empty()), &LeafMode::Rays(&self.rays, &self.overrides))
    }

    /// `B̃ = { s⌢f^s_n }`
    pub fn tilde(&self) -> BroomResult<BroomExpr> {
        self.validate()?;
        self.tilde_rec(&self.base, Some(&Seq::empty()))
    }

    fn tilde_rec(&self, b: &BroomExpr, path: Option<&Seq>) -> BroomResult<BroomExpr> {
        let sub_path = |h: &Seq| path.map(|p| p.concat(h));
        Ok(match b {
            BroomExpr::Trivial => {
                let rf = self.rays_at(path);
                BroomExpr::uniform(rf.offset, rf.word.clone(), BroomExpr::Trivial)
            }
            BroomExpr::Handle { h, sub } => BroomExpr::handle(h.clone(), self.tilde_rec(sub, sub_path(h).as_ref())?),
            BroomExpr::Fork { family } => BroomExpr::Fork {
                family: match family {
                    BroomFamily::FiniteList { branches } => BroomFamily::FiniteList {
                        branches: branches
                            .iter()
                            .map(|br| {
                                Ok(BroomBranch {
                                    head: br.head.clone(),
                                    sub: self.tilde_rec(&br.sub, sub_path(&br.head).as_ref())?,
                                })
                            })
                            .collect::<BroomResult<_>>()?,
                    },
                    BroomFamily::UniformTail { base, word, sub, .. } => {
                        let depth = path.map_or(0, |p| p.len());
                        let below: Vec<u64> = match path {
                            Some(p) => self.overrides.iter().filter(|o| p.is_prefix_of(&o.leaf)).map(|o| o.leaf.0[depth]).collect(),
                            None => vec![],
                        };
                        let len = below.iter().copied().filter(|&a| a >= *base).max().map_or(*base, |m| m + 1);
                        let mut prefix = Vec::new();
                        for a in 0..len {
                            if let Some(br) = family.branch(a)? {
                                let s = self.tilde_rec(&br.sub, sub_path(&br.head).as_ref())?;
                                prefix.push(BroomBranch { head: br.head, sub: s });
                            }
                        }
                        BroomFamily::UniformTail {
                            prefix,
                            base: len,
                            word: word.clone(),
                            sub: Box::new(self.tilde_rec(sub, None)?),
                        }
                    }
                    BroomFamily::RankLadder { lambda, base, word, enumeration, leaf } => {
                        if leaf.is_some() {
                            return Err(BroomError::Unsupported("extension of a ladder with forked leaves".into()));
                        }
                        if path.is_some_and(|p| self.overrides.iter().any(|o| p.is_prefix_of(&o.leaf))) {
                            return Err(BroomError::Unsupported("ray overrides inside a ladder".into()));
                        }
                        BroomFamily::RankLadder {
                            lambda: lambda.clone(),
                            base: *base,
                            word: word.clone(),
                            enumeration: *enumeration,
                            leaf: Some(LeafFork { offset: self.rays.offset, word: self.rays.word.clone() }),
                        }
                    }
                },
            },
        })
    }
}

pub fn extend_broom(b: &BroomExpr, strategy: &ExtensionStrategy) -> BroomResult<InfBroomExpr> {
    let a = InfBroomExpr { base: b.clone(), rays: strategy.rays.clone(), overrides: strategy.overrides.clone() };
    a.validate()?;
    Ok(a)
}

/// `D_iie(A)` read off the description: a node has infinitely many
/// extensions in `A` exactly when it lies below an element of `B`, since
/// each element carries a whole fork of rays and each ray is a single
/// extension of its own nodes past the fork.
pub fn broom_diie(a: &InfBroomExpr) -> BroomResult<TreeExpr> {
    a.validate()?;
    closure_rec(&a.base, Some(&Seq::empty()), &LeafMode::Point)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankLemmaReport {
    pub alpha: Ordinal,
    pub alpha_prime: Ordinal,
    /// the derivative is finite
    pub finite: bool,
    /// for even α: the derivative is `∅` or `{∅}`
    pub trivial_when_even: Option<bool>,
    /// for extensions: `D_iie(A) = cl_Tr(B)`
    pub diie_is_closure: Option<bool>,
    /// nodes of the derivative (a truncation when it is infinite)
    pub surviving: Vec<Seq>,
    pub pass: bool,
}

fn lemma_report(alpha: Ordinal, d: TreeExpr, diie_is_closure: Option<bool>) -> BroomResult<RankLemmaReport> {
    let alpha_prime = alpha.alpha_prime();
    let fin = d.to_finite()?;
    let finite = fin.is_some();
    let surviving: Vec<Seq> = match &fin {
        Some(t) => t.nodes().iter().cloned().collect(),
        None => d.truncate(6, 3)?.nodes().iter().cloned().collect(),
    };
    let trivial_when_even = alpha.is_even().then(|| surviving.iter().all(|s| s.is_empty()) && finite);
    let pass = finite && trivial_when_even != Some(false) && diie_is_closure != Some(false);
    Ok(RankLemmaReport { alpha, alpha_prime, finite, trivial_when_even, diie_is_closure, surviving, pass })
}

/// `D_iie^{α′}(B)` for `B ∈ B_α`.
pub fn rank_lemma_check(b: &BroomExpr) -> BroomResult<RankLemmaReport> {
    let alpha = classify(b)?;
    let d = derive::iterate(Kind::Iie, &closure_tree(b)?, &alpha.alpha_prime())?;
    lemma_report(alpha, d, None)
}

/// `D_iie^{α′}(D_iie(A))` for `A ∈ A_α`, with `D_iie(A)` computed by the
/// derivative engine and compared with `cl_Tr(B)`.
pub fn rank_lemma_check_inf(a: &InfBroomExpr) -> BroomResult<RankLemmaReport> {
    let alpha = classify(&a.base)?;
    let da = derive::derive(Kind::Iie, &a.closure_tree()?)?;
    let same = derive::tree_eq(&da, &closure_tree(&a.base)?)?;
    let d = derive::iterate(Kind::Iie, &da, &alpha.alpha_prime())?;
    lemma_report(alpha, d, Some(same))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Count {
    Zero,
    Finite,
    Infinite,
}

impl Count {
    fn add(self, o: Count) -> Count {
        match (self, o) {
            (Count::Infinite, _) | (_, Count::Infinite) => Count::Infinite,
            (Count::Zero, Count::Zero) => Count::Zero,
            _ => Count::Finite,
        }
    }
}

/// Ladder members vary with the index, so when two different ladders meet
/// the tail is scanned over two windows of this size; a common ray in the
/// second window is taken to mean infinitely many.
const LADDER_SCAN: u64 = 24;

fn descend(t: &TreeExpr, w: &Seq) -> BroomResult<Option<TreeExpr>> {
    let mut cur = t.clone();
    for &x in &w.0 {
        match cur.child_tree(x)? {
            Some(c) => cur = c,
            None => return Ok(None),
        }
    }
    Ok(Some(cur))
}

fn tail_start(f: &TreeFamily) -> BroomResult<Option<u64>> {
    Ok(match f {
        TreeFamily::Constant { .. } => Some(0),
        TreeFamily::PrefixThenConstant { prefix, .. } => Some(prefix.len() as u64),
        TreeFamily::BroomSeq { offset, .. } => Some(*offset),
        _ => None,
    })
}

/// Number of common branches of two ray-fork closures.
fn common_rays(x: &TreeExpr, y: &TreeExpr) -> BroomResult<Count> {
    use TreeExpr as T;
    match (x, y) {
        (T::Empty | T::Point | T::Explicit { .. }, _) | (_, T::Empty | T::Point | T::Explicit { .. }) => Ok(Count::Zero),
        (T::Full, _) | (_, T::Full) => Err(BroomError::Unsupported("full tree in a ray set".into())),
        (T::Ray { c }, T::Ray { c: d }) => Ok(if c == d { Count::Finite } else { Count::Zero }),
        (T::Ray { c }, o) | (o, T::Ray { c }) => match o.child_tree(*c)? {
            Some(o2) => common_rays(&T::Ray { c: *c }, &o2),
            None => Ok(Count::Zero),
        },
        (T::Graft { handle, sub }, o) | (o, T::Graft { handle, sub }) => match descend(o, handle)? {
            Some(o2) => common_rays(sub, &o2),
            None => Ok(Count::Zero),
        },
        (T::JoinFinite { branches }, o) | (o, T::JoinFinite { branches }) => {
            let mut acc = Count::Zero;
            for b in branches {
                acc = acc.add(common_rays(&T::graft(b.head.clone(), b.sub.clone()), o)?);
            }
            Ok(acc)
        }
        (T::JoinOmega { family: f }, T::JoinOmega { family: g }) => {
            let (Some(sf), Some(sg)) = (tail_start(f)?, tail_start(g)?) else {
                return Err(BroomError::Unsupported("derived family in a ray set".into()));
            };
            let n0 = sf.max(sg);
            let mut acc = Count::Zero;
            for n in 0..n0 {
                acc = acc.add(common_rays(&f.member(n)?, &g.member(n)?)?);
            }
            let ladder = |t: &TreeFamily| matches!(t, TreeFamily::BroomSeq { .. });
            if !ladder(f) && !ladder(g) || f == g {
                if common_rays(&f.member(n0)?, &g.member(n0)?)? != Count::Zero {
                    acc = Count::Infinite;
                }
                return Ok(acc);
            }
            let mut late = Count::Zero;
            for n in n0..n0 + 2 * LADDER_SCAN {
                let c = common_rays(&f.member(n)?, &g.member(n)?)?;
                if n < n0 + LADDER_SCAN {
                    acc = acc.add(c);
                } else {
                    late = late.add(c);
                }
            }
            Ok(if late != Count::Zero { Count::Infinite } else { acc })
        }
    }
}

/// True iff every two distinct members meet in a finite set.
pub fn almost_disjoint_check(family: &[InfBroomExpr]) -> BroomResult<bool> {
    let trees = family.iter().map(|a| a.closure_tree()).collect::<BroomResult<Vec<_>>>()?;
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            if family[i] == family[j] {
                continue;
            }
            if common_rays(&trees[i], &trees[j])? == Count::Infinite {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn random_word<R: Rng>(rng: &mut R, max_len: usize) -> Seq {
    let len = rng.gen_range(0..=max_len);
    Seq((0..len).map(|_| rng.gen_range(0..4)).collect())
}

fn random_below<R: Rng>(alpha: &Ordinal, rng: &mut R) -> Ordinal {
    if let Some(a) = alpha.as_finite() {
        return Ordinal::nat(rng.gen_range(0..a));
    }
    let k = alpha.finite_part();
    if k > 0 && rng.gen_bool(0.5) {
        alpha.limit_part().plus_nat(rng.gen_range(0..k))
    } else {
        Ordinal::nat(rng.gen_range(0..4))
    }
}

/// A random broom with `classify` equal to `alpha`.
pub fn random_broom<R: Rng>(alpha: &Ordinal, rng: &mut R) -> BroomExpr {
    if alpha.is_zero() {
        return BroomExpr::Trivial;
    }
    if !alpha.is_even() {
        let mut h = random_word(rng, 2);
        if h.is_empty() {
            h = Seq(vec![rng.gen_range(0..4)]);
        }
        return BroomExpr::handle(h, random_broom(&alpha.pred().expect("odd"), rng));
    }
    if alpha.is_limit() {
        return BroomExpr::Fork {
            family: BroomFamily::RankLadder {
                lambda: alpha.clone(),
                base: rng.gen_range(0..3),
                word: random_word(rng, 1),
                enumeration: Enumeration::Canonical,
                leaf: None,
            },
        };
    }
    let p = alpha.pred().expect("successor");
    let top = if rng.gen_bool(0.5) { p.clone() } else { p.pred().expect("even successor") };
    let n_prefix = rng.gen_range(0..=2u64);
    let base = n_prefix + rng.gen_range(0..2);
    let mut firsts: Vec<u64> = (0..base).collect();
    let mut prefix = Vec::new();
    for _ in 0..n_prefix {
        let i = rng.gen_range(0..firsts.len());
        let f = firsts.swap_remove(i);
        let head = Seq(vec![f]).concat(&random_word(rng, 1));
        prefix.push(BroomBranch { head, sub: random_broom(&random_below(alpha, rng), rng) });
    }
    BroomExpr::Fork {
        family: BroomFamily::UniformTail {
            prefix,
            base,
            word: random_word(rng, 1),
            sub: Box::new(random_broom(&top, rng)),
        },
    }
}

/// A random extension; overrides are placed on elements outside ladders.
pub fn random_extension<R: Rng>(b: &BroomExpr, rng: &mut R) -> InfBroomExpr {
    let random_rays = |rng: &mut R| RayFork {
        offset: rng.gen_range(0..3),
        word: random_word(rng, 1),
        tail: random_word(rng, 1),
        cycle: rng.gen_range(0..3),
    };
    let rays = random_rays(rng);
    let mut a = InfBroomExpr { base: b.clone(), rays, overrides: vec![] };
    let elems: Vec<Seq> = truncation(b, 2).map(|s| s.into_iter().collect()).unwrap_or_default();
    for _ in 0..rng.gen_range(0..=2) {
        if elems.is_empty() {
            break;
        }
        let leaf = elems[rng.gen_range(0..elems.len())].clone();
        if a.overrides.iter().any(|o| o.leaf == leaf) {
            continue;
        }
        let mut try_a = a.clone();
        try_a.overrides.push(LeafRays { leaf, rays: random_rays(rng) });
        if try_a.closure_tree().is_ok() && try_a.tilde().is_ok() {
            a = try_a;
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqtree::cl_tr;

    fn s(v: &[u64]) -> Seq {
        Seq(v.to_vec())
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify(&BroomExpr::Trivial).unwrap(), Ordinal::zero());
        let h = BroomExpr::handle(s(&[3]), BroomExpr::Trivial);
        assert_eq!(classify(&h).unwrap(), Ordinal::one());
        let f = BroomExpr::uniform(0, Seq::empty(), BroomExpr::Trivial);
        assert_eq!(classify(&f).unwrap(), Ordinal::nat(2));
        assert_eq!(handle_of(&f), Seq::empty());
        let hf = BroomExpr::handle(s(&[1, 2]), f.clone());
        assert_eq!(classify(&hf).unwrap(), Ordinal::nat(3));
        assert_eq!(handle_of(&hf), s(&[1, 2]));
        // a handle over an odd broom stays odd
        assert_eq!(classify(&BroomExpr::handle(s(&[5]), hf)).unwrap(), Ordinal::nat(3));
        let two = BroomExpr::Fork {
            family: BroomFamily::FiniteList {
                branches: vec![
                    BroomBranch { head: s(&[0]), sub: BroomExpr::Trivial },
                    BroomBranch { head: s(&[1]), sub: BroomExpr::Trivial },
                ],
            },
        };
        assert!(classify(&two).is_err());
        for d in ["0", "1", "2", "5", "w", "w+1", "w*2", "w^2"] {
            let d: Ordinal = d.parse().unwrap();
            assert_eq!(classify(&canonical_broom(&d, Enumeration::Canonical, None)).unwrap(), d);
        }
    }

    #[test]
    fn closure_and_handle() {
        let h = BroomExpr::handle(s(&[1, 2]), BroomExpr::Trivial);
        let t = closure_tree(&h).unwrap();
        assert_eq!(t.to_finite().unwrap().unwrap(), cl_tr([s(&[1, 2])]));
        assert_eq!(handle_of(&h), s(&[1, 2]));
        let a = extend_broom(&BroomExpr::Trivial, &ExtensionStrategy::default()).unwrap();
        assert_eq!(broom_diie(&a).unwrap(), TreeExpr::Point);
        assert_eq!(classify(&a.tilde().unwrap()).unwrap(), Ordinal::nat(2));
        let a = extend_broom(&BroomExpr::handle(s(&[1]), BroomExpr::Trivial), &ExtensionStrategy::default()).unwrap();
        let d = derive::derive(Kind::Iie, &a.closure_tree().unwrap()).unwrap();
        assert!(derive::tree_eq(&d, &broom_diie(&a).unwrap()).unwrap());
    }

    #[test]
    fn brute_force_agrees_on_small_brooms() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for a in 0..=4 {
            for _ in 0..20 {
                let b = random_broom(&Ordinal::nat(a), &mut rng);
                assert_eq!(brute_rank(&truncation(&b, 2).unwrap()), Some(a), "{b:?}");
            }
        }
    }

    #[test]
    fn almost_disjointness() {
        let b = BroomExpr::uniform(0, Seq::empty(), BroomExpr::Trivial);
        let a1 = extend_broom(&b, &ExtensionStrategy { rays: RayFork { cycle: 1, ..Default::default() }, overrides: vec![] }).unwrap();
        let a2 = extend_broom(&b, &ExtensionStrategy { rays: RayFork { cycle: 2, ..Default::default() }, overrides: vec![] }).unwrap();
        assert!(almost_disjoint_check(&[a1.clone(), a2.clone()]).unwrap());
        assert!(almost_disjoint_check(&[a1.clone(), a1.clone()]).unwrap());
        let h = BroomExpr::handle(s(&[4]), BroomExpr::Trivial);
        let a3 = extend_broom(&h, &ExtensionStrategy { rays: RayFork { cycle: 1, ..Default::default() }, overrides: vec![] }).unwrap();
        assert!(!almost_disjoint_check(&[a1, a3]).unwrap());
    }
}
