//! The derivatives `D_l`, `D_i`, `D_iie`, their iterates and ranks.
//!
//! All three derivatives are local: `t ∈ D(T)` depends only on `T^t`. Hence
//! `t ∈ D^α(T)` iff `rank(T^t) >= α`, and the iterates are computed from the
//! ranks of subtrees. Ranks come from a per-tree profile aggregated bottom up;
//! ω-families described by ladders (`CanonicalSeq`, `BroomSeq`) are aggregated
//! in closed form.

use std::cell::RefCell;
use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::ordinal::Ordinal;
use crate::seqtree::{
    Children, FiniteTree, Seq, TreeError, TreeExpr, TreeFamily, TreeResult,
};

pub use crate::seqtree::Derivative as Kind;

/// `r(S)`, with `Empty` standing for `r(∅) = -1`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rank {
    Empty,
    Ord(Ordinal),
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rank::Empty => write!(f, "-1"),
            Rank::Ord(a) => write!(f, "{a}"),
        }
    }
}

impl Serialize for Rank {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Rank including the "never empties" case.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rk {
    Dead,
    Ord(Ordinal),
    Inf,
}

impl Rk {
    fn at_least(&self, a: &Ordinal) -> bool {
        match self {
            Rk::Dead => false,
            Rk::Ord(r) => r >= a,
            Rk::Inf => true,
        }
    }
}

/// Supremum of the lengths of the nodes of `D^α(T)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Height {
    Dead,
    Fin(u64),
    Inf,
}

impl Height {
    fn plus(self, k: u64) -> Height {
        match self {
            Height::Fin(h) => Height::Fin(h + k),
            h => h,
        }
    }
}

/// A right-continuous step function on ordinals, `[(start, value)]` with
/// increasing starts, the first one 0. Empty means `Dead` everywhere.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Steps(Vec<(Ordinal, Height)>);

impl Steps {
    fn dead() -> Steps {
        Steps(Vec::new())
    }

    fn constant(h: Height) -> Steps {
        Steps(vec![(Ordinal::zero(), h)])
    }

    /// `h` on `[0, end)`, dead afterwards.
    fn until(h: Height, end: &Ordinal) -> Steps {
        if end.is_zero() {
            return Steps::dead();
        }
        let mut s = Steps(vec![(Ordinal::zero(), h), (end.clone(), Height::Dead)]);
        s.normalize();
        s
    }

    pub fn at(&self, a: &Ordinal) -> Height {
        self.0.iter().rev().find(|(s, _)| s <= a).map(|p| p.1).unwrap_or(Height::Dead)
    }

    pub fn segments(&self) -> &[(Ordinal, Height)] {
        &self.0
    }

    fn normalize(&mut self) {
        let mut out: Vec<(Ordinal, Height)> = Vec::with_capacity(self.0.len());
        for (s, h) in self.0.drain(..) {
            if out.last().map(|l| l.1) != Some(h) {
                out.push((s, h));
            }
        }
        if out.len() == 1 && out[0].1 == Height::Dead {
            out.clear();
        }
        self.0 = out;
    }

    fn breakpoints<'a>(fs: &[&'a Steps]) -> Vec<Ordinal> {
        let mut b: Vec<Ordinal> = vec![Ordinal::zero()];
        for f in fs {
            b.extend(f.0.iter().map(|p| p.0.clone()));
        }
        b.sort();
        b.dedup();
        b
    }

    fn max(&self, other: &Steps) -> Steps {
        let b = Self::breakpoints(&[self, other]);
        let mut s = Steps(b.into_iter().map(|x| {
            let h = self.at(&x).max(other.at(&x));
            (x, h)
        }).collect());
        s.normalize();
        s
    }

    fn map(&self, f: impl Fn(Height) -> Height) -> Steps {
        let mut s = Steps(self.0.iter().map(|(a, h)| (a.clone(), f(*h))).collect());
        s.normalize();
        s
    }

    /// `γ ↦ f(α + γ)`
    fn shift(&self, alpha: &Ordinal) -> Steps {
        let mut v = vec![(Ordinal::zero(), self.at(alpha))];
        for (s, h) in &self.0 {
            if s > alpha {
                v.push((s.left_sub(alpha).expect("s > alpha"), *h));
            }
        }
        let mut s = Steps(v);
        s.normalize();
        s
    }

    /// Dead from `end` on.
    fn cut(&self, end: &Ordinal) -> Steps {
        let mut v: Vec<(Ordinal, Height)> = self.0.iter().filter(|p| &p.0 < end).cloned().collect();
        v.push((end.clone(), Height::Dead));
        let mut s = Steps(v);
        s.normalize();
        s
    }
}

/// Rank and (for `D_iie`) the height function `α ↦ sup{|t| : t ∈ D^α(T)}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Profile {
    pub rank: Rk,
    pub heights: Steps,
}

impl Profile {
    fn dead() -> Profile {
        Profile { rank: Rk::Dead, heights: Steps::dead() }
    }

    fn point() -> Profile {
        Profile { rank: Rk::Ord(Ordinal::zero()), heights: Steps::until(Height::Fin(0), &Ordinal::one()) }
    }

    fn graft(&self, k: u64) -> Profile {
        Profile { rank: self.rank.clone(), heights: self.heights.map(|h| h.plus(k)) }
    }

    /// Profile of `D^α(T)` from that of `T`.
    pub fn shift(&self, kind: Kind, alpha: &Ordinal) -> Profile {
        let rank = match &self.rank {
            Rk::Dead => Rk::Dead,
            Rk::Inf => Rk::Inf,
            Rk::Ord(r) => match r.left_sub(alpha) {
                Some(x) => Rk::Ord(x),
                None => Rk::Dead,
            },
        };
        if rank == Rk::Dead {
            return Profile::dead();
        }
        let heights = if kind == Kind::Iie { self.heights.shift(alpha) } else { Steps::dead() };
        Profile { rank, heights }
    }
}

/// What a parent needs to know about its family of children.
#[derive(Clone, Debug)]
struct Agg {
    sup: Rk,
    attained: bool,
    attained_inf: bool,
    /// infinitely many children of rank `sup` with unbounded heights at `sup`
    uh: bool,
    heights: Steps,
}

impl Agg {
    fn none() -> Agg {
        Agg { sup: Rk::Dead, attained: false, attained_inf: false, uh: false, heights: Steps::dead() }
    }

    fn single(p: &Profile) -> Agg {
        if p.rank == Rk::Dead {
            return Agg::none();
        }
        Agg { sup: p.rank.clone(), attained: true, attained_inf: false, uh: false, heights: p.heights.clone() }
    }

    fn repeated(p: &Profile) -> Agg {
        if p.rank == Rk::Dead {
            return Agg::none();
        }
        let uh = match &p.rank {
            Rk::Ord(r) => p.heights.at(r) == Height::Inf,
            _ => false,
        };
        Agg { sup: p.rank.clone(), attained: true, attained_inf: true, uh, heights: p.heights.clone() }
    }

    fn combine(self, b: Agg) -> Agg {
        let sup = self.sup.clone().max(b.sup.clone());
        let (x, y) = (self.sup == sup, b.sup == sup);
        Agg {
            attained: (x && self.attained) || (y && b.attained),
            attained_inf: (x && self.attained_inf) || (y && b.attained_inf),
            uh: (x && self.uh) || (y && b.uh),
            heights: self.heights.max(&b.heights),
            sup,
        }
    }

    fn parent(&self, kind: Kind) -> Profile {
        let rank = match &self.sup {
            Rk::Dead => return Profile::point(),
            Rk::Inf => Rk::Inf,
            Rk::Ord(m) => {
                let up = match kind {
                    Kind::L => self.attained,
                    Kind::I => self.attained_inf,
                    Kind::Iie => self.uh,
                };
                Rk::Ord(if up { m.succ() } else { m.clone() })
            }
        };
        if kind != Kind::Iie {
            return Profile { rank, heights: Steps::dead() };
        }
        let mut h = self.heights.map(|h| match h {
            Height::Dead => Height::Dead,
            h => h.plus(1),
        });
        // where the children are dead but the root survives the height is 0
        let mut pts: Vec<(Ordinal, Height)> = Vec::new();
        let b = Steps::breakpoints(&[&h]);
        for x in b {
            let v = match h.at(&x) {
                Height::Dead => Height::Fin(0),
                v => v,
            };
            pts.push((x, v));
        }
        h = Steps(pts);
        h.normalize();
        if let Rk::Ord(r) = &rank {
            h = h.cut(&r.succ());
        }
        Profile { rank, heights: h }
    }
}

thread_local! {
    static MEMO: RefCell<HashMap<(Kind, TreeExpr), Profile>> = RefCell::new(HashMap::new());
}

/// The profile of `t` for the derivative `kind` (heights only for `iie`).
pub fn profile(kind: Kind, t: &TreeExpr) -> TreeResult<Profile> {
    let mut p = profile_raw(kind, t)?;
    if kind != Kind::Iie {
        p.heights = Steps::dead();
    }
    Ok(p)
}

fn profile_raw(kind: Kind, t: &TreeExpr) -> TreeResult<Profile> {
    Ok(match t {
        TreeExpr::Empty => Profile::dead(),
        TreeExpr::Point => Profile::point(),
        TreeExpr::Full => Profile { rank: Rk::Inf, heights: Steps::constant(Height::Inf) },
        TreeExpr::Ray { .. } => match kind {
            Kind::L | Kind::I => Profile { rank: Rk::Inf, heights: Steps::dead() },
            Kind::Iie => Profile {
                rank: Rk::Ord(Ordinal::zero()),
                heights: Steps::until(Height::Inf, &Ordinal::one()),
            },
        },
        TreeExpr::Explicit { nodes } => explicit_profile(kind, nodes),
        TreeExpr::Graft { handle, sub } => {
            let p = profile(kind, sub)?;
            if kind == Kind::L {
                if let Rk::Ord(r) = &p.rank {
                    return Ok(Profile { rank: Rk::Ord(r.plus_nat(handle.len() as u64)), heights: Steps::dead() });
                }
            }
            p.graft(handle.len() as u64)
        }
        TreeExpr::JoinFinite { branches } => {
            let mut agg = Agg::none();
            for b in branches {
                let child = TreeExpr::graft(b.head.suffix(1), b.sub.clone());
                agg = agg.combine(Agg::single(&profile(kind, &child)?));
            }
            agg.parent(kind)
        }
        TreeExpr::JoinOmega { family } => {
            let key = (kind, t.clone());
            if let Some(p) = MEMO.with(|m| m.borrow().get(&key).cloned()) {
                return Ok(p);
            }
            let p = family_agg(kind, family)?.parent(kind);
            MEMO.with(|m| m.borrow_mut().insert(key, p.clone()));
            p
        }
    })
}

fn explicit_profile(kind: Kind, t: &FiniteTree) -> Profile {
    let Some(h) = t.height() else {
        return Profile::dead();
    };
    match kind {
        Kind::L => Profile { rank: Rk::Ord(Ordinal::nat(h as u64)), heights: Steps::dead() },
        Kind::I => Profile { rank: Rk::Ord(Ordinal::zero()), heights: Steps::dead() },
        Kind::Iie => Profile {
            rank: Rk::Ord(Ordinal::zero()),
            heights: Steps::until(Height::Fin(h as u64), &Ordinal::one()),
        },
    }
}

fn family_agg(kind: Kind, f: &TreeFamily) -> TreeResult<Agg> {
    match f {
        TreeFamily::Constant { sub } => Ok(Agg::repeated(&profile(kind, sub)?)),
        TreeFamily::PrefixThenConstant { prefix, tail } => {
            let mut agg = Agg::repeated(&profile(kind, tail)?);
            for p in prefix {
                agg = agg.combine(Agg::single(&profile(kind, p)?));
            }
            Ok(agg)
        }
        TreeFamily::CanonicalSeq { .. } | TreeFamily::BroomSeq { .. } => ladder_agg(kind, f, &Ordinal::zero()),
        TreeFamily::Derived { derivative, alpha, inner } => {
            let g = derived_family(*derivative, alpha, inner)?;
            match &g {
                TreeFamily::Derived { derivative, alpha, inner } => {
                    if *derivative != kind {
                        return Err(TreeError::Unsupported(format!(
                            "{kind:?}-rank of a {derivative:?}-derived ladder"
                        )));
                    }
                    match &**inner {
                        TreeFamily::CanonicalSeq { .. } | TreeFamily::BroomSeq { .. } => {
                            ladder_agg(kind, inner, alpha)
                        }
                        _ => Err(TreeError::Unsupported("nested derived families".into())),
                    }
                }
                g => family_agg(kind, g),
            }
        }
    }
}

/// The ordinal `b` such that the members of a ladder have the `D_iie`
/// profiles of `T_β`, `β` ranging cofinally in `[0, b)` (and containing all
/// of `[ω, b)`).
fn ladder_bound(f: &TreeFamily) -> Ordinal {
    match f {
        TreeFamily::CanonicalSeq { lambda, .. } => lambda.clone(),
        TreeFamily::BroomSeq { lambda, ext: None, .. } => lambda.clone(),
        TreeFamily::BroomSeq { lambda, ext: Some(_), .. } => Ordinal::omega().add(lambda),
        _ => unreachable!("not a ladder"),
    }
}

/// Closed form aggregate of `n ↦ D^shift(member(n))` over a ladder.
fn ladder_agg(kind: Kind, f: &TreeFamily, shift: &Ordinal) -> TreeResult<Agg> {
    let lambda = match f {
        TreeFamily::CanonicalSeq { lambda, .. } | TreeFamily::BroomSeq { lambda, .. } => lambda,
        _ => unreachable!("not a ladder"),
    };
    if !lambda.is_limit() {
        return Err(TreeError::Malformed(format!("ladder over non-limit {lambda}")));
    }
    let extended = matches!(f, TreeFamily::BroomSeq { ext: Some(_), .. });
    match kind {
        Kind::L | Kind::I => {
            if extended {
                return Ok(Agg {
                    sup: Rk::Inf,
                    attained: true,
                    attained_inf: true,
                    uh: false,
                    heights: Steps::dead(),
                });
            }
            // member ranks are cofinal in λ without reaching it
            match lambda.left_sub(shift) {
                Some(m) if shift < lambda => Ok(Agg {
                    sup: Rk::Ord(m),
                    attained: false,
                    attained_inf: false,
                    uh: false,
                    heights: Steps::dead(),
                }),
                _ => Ok(Agg::none()),
            }
        }
        Kind::Iie => {
            // r_iie(T_{ω·q+m}) = q, with heights ∞ below q and m at q
            let qb = ladder_bound(f).div_omega();
            if shift >= &qb {
                return Ok(Agg::none());
            }
            if let Some(top) = qb.pred() {
                let m = top.left_sub(shift).expect("shift < qb");
                Ok(Agg {
                    heights: Steps::until(Height::Inf, &m.succ()),
                    sup: Rk::Ord(m),
                    attained: true,
                    attained_inf: true,
                    uh: true,
                })
            } else {
                let m = qb.left_sub(shift).expect("shift < qb");
                Ok(Agg {
                    heights: Steps::until(Height::Inf, &m),
                    sup: Rk::Ord(m),
                    attained: false,
                    attained_inf: false,
                    uh: false,
                })
            }
        }
    }
}

/// The profile the closed forms assign to member `n` of a ladder family.
/// Used to audit the closed forms against the recursive computation.
pub fn ladder_member_profile(kind: Kind, f: &TreeFamily, n: u64) -> TreeResult<Profile> {
    use crate::ordinal::LimitEnumeration;
    let (beta, head, extended) = match f {
        TreeFamily::CanonicalSeq { lambda, enumeration } => {
            (LimitEnumeration::new(lambda, *enumeration)?.at(n), 0, false)
        }
        TreeFamily::BroomSeq { lambda, head, offset, ext, enumeration } => {
            if n < *offset {
                return Ok(Profile::dead());
            }
            (LimitEnumeration::new(lambda, *enumeration)?.at(n - offset), head.len() as u64, ext.is_some())
        }
        _ => return Err(TreeError::Malformed("not a ladder".into())),
    };
    let broom = matches!(f, TreeFamily::BroomSeq { .. });
    Ok(match kind {
        Kind::L | Kind::I if extended => Profile { rank: Rk::Inf, heights: Steps::dead() },
        Kind::L => Profile { rank: Rk::Ord(beta.plus_nat(head)), heights: Steps::dead() },
        Kind::I => {
            let r = if broom { beta.alpha_prime() } else { beta };
            Profile { rank: Rk::Ord(r), heights: Steps::dead() }
        }
        Kind::Iie => {
            let b = if extended { Ordinal::omega().add(&beta) } else { beta };
            let q = b.div_omega();
            let m = b.finite_part();
            let mut heights = Steps::until(Height::Inf, &q).max(&Steps(vec![(q.clone(), Height::Fin(m))]));
            heights = heights.cut(&q.succ()).map(|h| h.plus(head));
            Profile { rank: Rk::Ord(q), heights }
        }
    })
}

/// `n ↦ D^α(f(n))`, normalized: constant-like families are mapped member by
/// member, iterates of one derivative are merged, extended broom ladders are
/// rewritten.
pub fn derived_family(kind: Kind, alpha: &Ordinal, f: &TreeFamily) -> TreeResult<TreeFamily> {
    if alpha.is_zero() {
        return Ok(f.clone());
    }
    Ok(match f {
        TreeFamily::Constant { sub } => TreeFamily::Constant { sub: iterate(kind, sub, alpha)? },
        TreeFamily::PrefixThenConstant { prefix, tail } => TreeFamily::PrefixThenConstant {
            prefix: prefix.iter().map(|p| iterate(kind, p, alpha)).collect::<TreeResult<_>>()?,
            tail: iterate(kind, tail, alpha)?,
        },
        TreeFamily::Derived { derivative, alpha: a1, inner } if *derivative == kind => {
            return derived_family(kind, &a1.add(alpha), inner);
        }
        TreeFamily::BroomSeq { ext: Some(_), .. } if kind != Kind::Iie => {
            // no leaves and every node has infinitely many extensions
            f.clone()
        }
        TreeFamily::BroomSeq { lambda, head, offset, ext: Some(_), enumeration } => {
            // one D_iie step turns every fork of rays into a point
            let plain = TreeFamily::BroomSeq {
                lambda: lambda.clone(),
                head: head.clone(),
                offset: *offset,
                ext: None,
                enumeration: *enumeration,
            };
            return derived_family(kind, &alpha.left_sub(&Ordinal::one()).expect("alpha >= 1"), &plain);
        }
        _ => TreeFamily::Derived { derivative: kind, alpha: alpha.clone(), inner: Box::new(f.clone()) },
    })
}

pub(crate) fn family_has_alive(f: &TreeFamily) -> TreeResult<bool> {
    let kind = match f {
        TreeFamily::Derived { derivative, .. } => *derivative,
        _ => Kind::L,
    };
    Ok(family_agg(kind, f)?.sup != Rk::Dead)
}

/// `r(T)`; ill-founded trees (for `l`, `i`) and trees whose iterates never
/// empty (for `iie`) are errors.
pub fn rank(kind: Kind, t: &TreeExpr) -> TreeResult<Rank> {
    match profile(kind, t)?.rank {
        Rk::Dead => Ok(Rank::Empty),
        Rk::Ord(a) => Ok(Rank::Ord(a)),
        Rk::Inf => Err(if kind == Kind::Iie { TreeError::Unbounded } else { TreeError::IllFounded }),
    }
}

/// Leaf rank from `r_l(T) = sup{ r_l(T^{(n)}) + 1 }` over the children,
/// evaluated directly on finitely branching trees and through the family
/// aggregate otherwise.
pub fn leaf_rank_formula(t: &TreeExpr) -> TreeResult<Rank> {
    if t.is_empty() {
        return Ok(Rank::Empty);
    }
    match t.root_children()? {
        Children::NotANode => Ok(Rank::Empty),
        Children::Finite(v) => {
            let mut r = Ordinal::zero();
            for n in v {
                let c = t.child_tree(n)?.expect("listed child");
                if let Rank::Ord(x) = leaf_rank_formula(&c)? {
                    r = Ordinal::max(&r, &x.succ());
                }
            }
            Ok(Rank::Ord(r))
        }
        Children::Infinite => rank(Kind::L, t),
    }
}

/// `D(T)`
pub fn derive(kind: Kind, t: &TreeExpr) -> TreeResult<TreeExpr> {
    iterate(kind, t, &Ordinal::one())
}

/// `D^α(T) = { t ∈ T : r(T^t) >= α }`.
pub fn iterate(kind: Kind, t: &TreeExpr, alpha: &Ordinal) -> TreeResult<TreeExpr> {
    if alpha.is_zero() {
        return Ok(t.clone());
    }
    if !profile(kind, t)?.rank.at_least(alpha) {
        return Ok(TreeExpr::Empty);
    }
    Ok(match t {
        TreeExpr::Empty | TreeExpr::Point | TreeExpr::Full | TreeExpr::Ray { .. } => t.clone(),
        TreeExpr::Explicit { nodes } => {
            // only D_l reaches here: the other ranks of finite trees are 0
            let k = alpha.as_finite().expect("finite rank") as usize;
            let keep = nodes
                .nodes()
                .iter()
                .filter(|s| nodes.subtree(s).height().unwrap_or(0) >= k)
                .cloned()
                .collect();
            TreeExpr::explicit(FiniteTree::new(keep)?)
        }
        TreeExpr::Graft { handle, sub } => {
            let d = iterate(kind, sub, alpha)?;
            if !d.is_empty() {
                TreeExpr::graft(handle.clone(), d)
            } else {
                // D_l only: α = r(S) + d with 0 < d <= |h|
                let Rk::Ord(r) = profile(kind, sub)?.rank else {
                    return Err(TreeError::Malformed("graft over an empty tree".into()));
                };
                let d = alpha.left_sub(&r).and_then(|x| x.as_finite()).expect("root survives");
                TreeExpr::graft(handle.prefix(handle.len() - d as usize), TreeExpr::Point)
            }
        }
        TreeExpr::JoinFinite { branches } => {
            let mut out = Vec::new();
            for b in branches {
                let child = TreeExpr::graft(b.head.suffix(1), b.sub.clone());
                out.push((b.head.prefix(1), iterate(kind, &child, alpha)?));
            }
            TreeExpr::join_finite(out)
        }
        TreeExpr::JoinOmega { family } => TreeExpr::join_omega(derived_family(kind, alpha, family)?),
    })
}

/// Whether two expressions denote the same tree. Families are compared
/// member by member when they are constant from some index on; ladders must
/// agree syntactically after normalization.
pub fn tree_eq(a: &TreeExpr, b: &TreeExpr) -> TreeResult<bool> {
    let mut seen = HashSet::new();
    eq_rec(a, b, &mut seen)
}

fn eq_rec(a: &TreeExpr, b: &TreeExpr, seen: &mut HashSet<(TreeExpr, TreeExpr)>) -> TreeResult<bool> {
    if a == b {
        return Ok(true);
    }
    let key = (a.clone(), b.clone());
    if seen.contains(&key) {
        return Ok(true);
    }
    seen.insert(key);
    match (a.root_children()?, b.root_children()?) {
        (Children::NotANode, Children::NotANode) => Ok(true),
        (Children::Finite(x), Children::Finite(y)) => {
            if x != y {
                return Ok(false);
            }
            for n in x {
                let ca = a.child_tree(n)?.expect("listed child");
                let cb = b.child_tree(n)?.expect("listed child");
                if !eq_rec(&ca, &cb, seen)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        (Children::Infinite, Children::Infinite) => {
            let fa = family_view(a)?;
            let fb = family_view(b)?;
            family_eq(&fa, &fb, seen)
        }
        _ => Ok(false),
    }
}

fn family_view(t: &TreeExpr) -> TreeResult<TreeFamily> {
    Ok(match t {
        TreeExpr::Full => TreeFamily::Constant { sub: TreeExpr::Full },
        TreeExpr::Graft { handle, sub } if handle.is_empty() => family_view(sub)?,
        TreeExpr::JoinOmega { family } => normalize_family(family)?,
        _ => return Err(TreeError::Malformed("no family view".into())),
    })
}

fn normalize_family(f: &TreeFamily) -> TreeResult<TreeFamily> {
    match f {
        TreeFamily::Derived { derivative, alpha, inner } => {
            let g = derived_family(*derivative, alpha, &normalize_family(inner)?)?;
            if matches!(g, TreeFamily::Derived { .. }) {
                Ok(g)
            } else {
                normalize_family(&g)
            }
        }
        _ => Ok(f.clone()),
    }
}

fn family_eq(a: &TreeFamily, b: &TreeFamily, seen: &mut HashSet<(TreeExpr, TreeExpr)>) -> TreeResult<bool> {
    if a == b {
        return Ok(true);
    }
    let split = |f: &TreeFamily| -> Option<(Vec<TreeExpr>, TreeExpr)> {
        match f {
            TreeFamily::Constant { sub } => Some((vec![], sub.clone())),
            TreeFamily::PrefixThenConstant { prefix, tail } => Some((prefix.clone(), tail.clone())),
            _ => None,
        }
    };
    match (split(a), split(b)) {
        (Some((pa, ta)), Some((pb, tb))) => {
            let l = pa.len().max(pb.len());
            for i in 0..l {
                let x = pa.get(i).unwrap_or(&ta);
                let y = pb.get(i).unwrap_or(&tb);
                if !eq_rec(x, y, seen)? {
                    return Ok(false);
                }
            }
            eq_rec(&ta, &tb, seen)
        }
        (None, None) => Err(TreeError::Unsupported("comparison of distinct ladder families".into())),
        // a ladder has members of unbounded rank, an eventually constant
        // family does not
        _ => {
            let (ladder, other) = if split(a).is_none() { (a, b) } else { (b, a) };
            let k = match ladder {
                TreeFamily::Derived { derivative, .. } => *derivative,
                _ => Kind::L,
            };
            let pl = family_agg(k, ladder)?;
            let po = family_agg(k, other)?;
            if pl.sup != po.sup || pl.attained != po.attained {
                Ok(false)
            } else {
                Err(TreeError::Unsupported("comparison of a ladder with a constant family".into()))
            }
        }
    }
}

/// Naive derivative of a finite tree, by scanning.
pub fn finite_derive(kind: Kind, t: &FiniteTree) -> FiniteTree {
    match kind {
        Kind::L => {
            let keep = t.nodes().iter().filter(|s| !t.is_leaf(s)).cloned().collect();
            FiniteTree::new(keep).expect("removing leaves keeps prefix closure")
        }
        Kind::I | Kind::Iie => FiniteTree::empty(),
    }
}

/// Whether `t ∈ D(T)` is witnessed inside a finite truncation `T'` of `T`:
/// `l` and `i` by an extension resp. at least `width - 1` extensions, `iie` by
/// `width - 1` pairwise incomparable extensions of distinct lengths. A node
/// in `D(T)` whose witnesses are visible at this scale must pass.
pub fn semi_decide(kind: Kind, t: &FiniteTree, s: &Seq, need: usize) -> bool {
    let sub = t.subtree(s);
    match kind {
        Kind::L => sub.len() > 1,
        Kind::I => sub.len() > need,
        Kind::Iie => {
            // greedy: one node per child subtree, distinct lengths
            let mut chosen_lens = HashSet::new();
            let mut kids: Vec<(u64, usize)> = sub
                .children(&Seq::empty())
                .into_iter()
                .map(|n| (n, sub.subtree(&Seq(vec![n])).height().unwrap_or(0) + 1))
                .collect();
            kids.sort_by_key(|k| k.1);
            for (_, h) in kids {
                if let Some(l) = (1..=h).find(|l| !chosen_lens.contains(l)) {
                    chosen_lens.insert(l);
                }
            }
            chosen_lens.len() >= need
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqtree::{canonical_tree, cl_tr};

    fn o(s: &str) -> Ordinal {
        s.parse().unwrap()
    }

    fn seq(v: &[u64]) -> Seq {
        Seq(v.to_vec())
    }

    #[test]
    fn canonical_leaf_ranks() {
        for a in ["0", "1", "2", "3", "w", "w+1", "w*2", "w^2"] {
            let t = canonical_tree(&o(a));
            assert_eq!(rank(Kind::L, &t).unwrap(), Rank::Ord(o(a)), "{a}");
            assert_eq!(rank(Kind::I, &t).unwrap(), Rank::Ord(o(a)), "{a}");
        }
    }

    #[test]
    fn iie_ranks_of_canonical_trees() {
        assert_eq!(rank(Kind::Iie, &canonical_tree(&o("5"))).unwrap(), Rank::Ord(o("0")));
        assert_eq!(rank(Kind::Iie, &canonical_tree(&o("w"))).unwrap(), Rank::Ord(o("1")));
        assert_eq!(rank(Kind::Iie, &canonical_tree(&o("w*3+2"))).unwrap(), Rank::Ord(o("3")));
        assert_eq!(rank(Kind::Iie, &canonical_tree(&o("w^2"))).unwrap(), Rank::Ord(o("w")));
        let d = iterate(Kind::Iie, &canonical_tree(&o("w")), &o("1")).unwrap();
        assert!(tree_eq(&d, &TreeExpr::Point).unwrap());
        assert!(iterate(Kind::Iie, &canonical_tree(&o("w")), &o("2")).unwrap().is_empty());
    }

    #[test]
    fn small_examples() {
        let t = TreeExpr::explicit(cl_tr([seq(&[0, 1])]));
        let d = derive(Kind::L, &t).unwrap();
        assert_eq!(d.to_finite().unwrap().unwrap(), cl_tr([seq(&[0])]));
        assert!(derive(Kind::I, &t).unwrap().is_empty());
        let t = TreeExpr::explicit(cl_tr([seq(&[0, 1]), seq(&[0, 2])]));
        assert_eq!(rank(Kind::Iie, &t).unwrap(), Rank::Ord(o("0")));
        assert_eq!(rank(Kind::L, &TreeExpr::Empty).unwrap(), Rank::Empty);
        assert_eq!(rank(Kind::L, &TreeExpr::Point).unwrap(), Rank::Ord(o("0")));
        let p = iterate(Kind::L, &canonical_tree(&o("3")), &o("3")).unwrap();
        assert!(tree_eq(&p, &TreeExpr::Point).unwrap());
    }

    #[test]
    fn ill_founded_is_reported() {
        let t = TreeExpr::graft(seq(&[1]), TreeExpr::Ray { c: 0 });
        assert_eq!(rank(Kind::L, &t), Err(TreeError::IllFounded));
        assert_eq!(rank(Kind::Iie, &t).unwrap(), Rank::Ord(o("0")));
        assert_eq!(rank(Kind::Iie, &TreeExpr::Full), Err(TreeError::Unbounded));
    }

    #[test]
    fn handle_is_cut() {
        let t = TreeExpr::graft(seq(&[4, 4, 4]), canonical_tree(&o("w")));
        assert_eq!(rank(Kind::L, &t).unwrap(), Rank::Ord(o("w+3")));
        let d = iterate(Kind::L, &t, &o("w+2")).unwrap();
        assert_eq!(d.to_finite().unwrap().unwrap(), cl_tr([seq(&[4])]));
    }

    #[test]
    fn step_shift() {
        let s = Steps(vec![(o("0"), Height::Inf), (o("w"), Height::Fin(3)), (o("w+1"), Height::Dead)]);
        let t = s.shift(&o("2"));
        assert_eq!(t.at(&o("5")), Height::Inf);
        assert_eq!(t.at(&o("w")), Height::Fin(3));
        let t = s.shift(&o("w"));
        assert_eq!(t.at(&o("0")), Height::Fin(3));
        assert_eq!(t.at(&o("1")), Height::Dead);
    }
}
