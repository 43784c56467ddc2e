//! Finite sequences on ω, finite trees, and a symbolic language for the
//! infinite trees built from canonical trees, cones and ω-joins.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::derive;
use crate::ordinal::{Enumeration, LimitEnumeration, Ordinal, OrdinalError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("{0} is not a node of the tree")]
    NotANode(Seq),
    #[error("not a prefix-closed set: {0} is present but its parent is not")]
    NotPrefixClosed(Seq),
    #[error("malformed tree expression: {0}")]
    Malformed(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("the tree is ill-founded")]
    IllFounded,
    #[error("rank is not reached below ω^ω")]
    Unbounded,
    #[error(transparent)]
    Ordinal(#[from] OrdinalError),
}

pub type TreeResult<T> = Result<T, TreeError>;

/// A finite sequence of naturals.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seq(pub Vec<u64>);

impl Seq {
    pub fn empty() -> Self {
        Seq(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self ⊑ other`
    pub fn is_prefix_of(&self, other: &Seq) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn comparable(&self, other: &Seq) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    pub fn concat(&self, other: &Seq) -> Seq {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Seq(v)
    }

    pub fn child(&self, n: u64) -> Seq {
        let mut v = self.0.clone();
        v.push(n);
        Seq(v)
    }

    pub fn prefix(&self, k: usize) -> Seq {
        Seq(self.0[..k.min(self.0.len())].to_vec())
    }

    pub fn suffix(&self, k: usize) -> Seq {
        Seq(self.0[k.min(self.0.len())..].to_vec())
    }

    pub fn parent(&self) -> Option<Seq> {
        if self.0.is_empty() {
            None
        } else {
            Some(self.prefix(self.0.len() - 1))
        }
    }

    pub fn sum(&self) -> u64 {
        self.0.iter().sum()
    }
}

impl From<Vec<u64>> for Seq {
    fn from(v: Vec<u64>) -> Self {
        Seq(v)
    }
}

impl From<&[u64]> for Seq {
    fn from(v: &[u64]) -> Self {
        Seq(v.to_vec())
    }
}

impl fmt::Display for Seq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for Seq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A finite prefix-closed set of sequences.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct FiniteTree {
    nodes: BTreeSet<Seq>,
}

impl<'de> Deserialize<'de> for FiniteTree {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let nodes = BTreeSet::<Seq>::deserialize(d)?;
        FiniteTree::new(nodes).map_err(serde::de::Error::custom)
    }
}

impl fmt::Debug for FiniteTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(&self.nodes).finish()
    }
}

impl FiniteTree {
    pub fn new(nodes: BTreeSet<Seq>) -> TreeResult<Self> {
        for s in &nodes {
            if let Some(p) = s.parent() {
                if !nodes.contains(&p) {
                    return Err(TreeError::NotPrefixClosed(s.clone()));
                }
            }
        }
        Ok(FiniteTree { nodes })
    }

    pub fn empty() -> Self {
        FiniteTree::default()
    }

    pub fn point() -> Self {
        cl_tr([Seq::empty()])
    }

    pub fn nodes(&self) -> &BTreeSet<Seq> {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, s: &Seq) -> bool {
        self.nodes.contains(s)
    }

    pub fn children(&self, s: &Seq) -> Vec<u64> {
        let lo = s.child(0);
        self.nodes
            .range(lo..)
            .take_while(|t| s.is_prefix_of(t))
            .filter(|t| t.len() == s.len() + 1)
            .map(|t| t.0[s.len()])
            .collect()
    }

    pub fn is_leaf(&self, s: &Seq) -> bool {
        self.contains(s) && self.children(s).is_empty()
    }

    pub fn leaves(&self) -> Vec<Seq> {
        self.nodes.iter().filter(|s| self.is_leaf(s)).cloned().collect()
    }

    /// Length of the longest node, `None` for the empty tree.
    pub fn height(&self) -> Option<usize> {
        self.nodes.iter().map(Seq::len).max()
    }

    pub fn max_entry(&self) -> u64 {
        self.nodes.iter().flat_map(|s| s.0.iter().copied()).max().unwrap_or(0)
    }

    /// `T^s = { t : s⌢t ∈ T }`
    pub fn subtree(&self, s: &Seq) -> FiniteTree {
        let nodes = self
            .nodes
            .range(s.clone()..)
            .take_while(|t| s.is_prefix_of(t))
            .map(|t| t.suffix(s.len()))
            .collect();
        FiniteTree { nodes }
    }

    pub fn is_subset(&self, other: &FiniteTree) -> bool {
        self.nodes.is_subset(&other.nodes)
    }

    pub fn to_dot(&self, name: &str) -> String {
        let mut out = format!("digraph \"{name}\" {{\n  node [shape=point];\n");
        for s in &self.nodes {
            out.push_str(&format!("  \"{s}\";\n"));
            if let Some(p) = s.parent() {
                out.push_str(&format!("  \"{p}\" -> \"{s}\" [label=\"{}\"];\n", s.0.last().unwrap()));
            }
        }
        out.push_str("}\n");
        out
    }
}

/// `cl_Tr(S)`: every prefix of every member of `S`.
pub fn cl_tr<I: IntoIterator<Item = Seq>>(s: I) -> FiniteTree {
    let mut nodes = BTreeSet::new();
    for t in s {
        for k in 0..=t.len() {
            nodes.insert(t.prefix(k));
        }
    }
    FiniteTree { nodes }
}

/// Which tree derivative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Derivative {
    /// keep nodes with a proper extension
    L,
    /// keep nodes with infinitely many extensions
    I,
    /// keep nodes with infinitely many pairwise incomparable extensions of
    /// pairwise distinct lengths
    Iie,
}

/// The fork of rays `{ (offset+n)⌢word⌢tail⌢cycle^ω : n ∈ ω }` (as the tree of
/// its finite prefixes). Used to extend broom leaves.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RayFork {
    pub offset: u64,
    #[serde(default)]
    pub word: Seq,
    #[serde(default)]
    pub tail: Seq,
    #[serde(default)]
    pub cycle: u64,
}

impl Default for RayFork {
    fn default() -> Self {
        RayFork { offset: 0, word: Seq::empty(), tail: Seq::empty(), cycle: 0 }
    }
}

impl RayFork {
    pub fn tree(&self) -> TreeExpr {
        let ray = TreeExpr::graft(self.word.concat(&self.tail), TreeExpr::Ray { c: self.cycle });
        TreeExpr::JoinOmega {
            family: Box::new(TreeFamily::PrefixThenConstant {
                prefix: vec![TreeExpr::Empty; self.offset as usize],
                tail: ray,
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Branch {
    pub head: Seq,
    pub sub: TreeExpr,
}

/// A tree on ω.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeExpr {
    Empty,
    /// `{∅}`
    Point,
    /// `ω^{<ω}`
    Full,
    /// the single branch `c, c, c, …`
    Ray { c: u64 },
    /// `{u ⊑ handle} ∪ handle⌢sub`, empty when `sub` is
    Graft { handle: Seq, sub: Box<TreeExpr> },
    Explicit { nodes: FiniteTree },
    /// `{∅} ∪ ⋃_n (n)⌢family(n)`; empty members mean no child `n`
    JoinOmega { family: Box<TreeFamily> },
    /// `{∅} ∪ ⋃ cl(head)⌢sub`, heads nonempty with distinct first entries
    JoinFinite { branches: Vec<Branch> },
}

/// Finite descriptions of ω-indexed families of trees.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TreeFamily {
    Constant { sub: TreeExpr },
    PrefixThenConstant { prefix: Vec<TreeExpr>, tail: TreeExpr },
    /// `n ↦ T_{π_λ(n)}`
    CanonicalSeq {
        lambda: Ordinal,
        #[serde(default)]
        enumeration: Enumeration,
    },
    /// `n ↦ ∅` for `n < offset`, else `head⌢K_{π_λ(n-offset)}` where `K_δ`
    /// is the closure of the canonical broom of rank `δ` (leaves replaced by
    /// `ext` when present).
    BroomSeq {
        lambda: Ordinal,
        #[serde(default)]
        head: Seq,
        #[serde(default)]
        offset: u64,
        #[serde(default)]
        ext: Option<RayFork>,
        #[serde(default)]
        enumeration: Enumeration,
    },
    /// `n ↦ D^alpha(inner(n))`
    Derived { derivative: Derivative, alpha: Ordinal, inner: Box<TreeFamily> },
}

/// Children of a node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Children {
    NotANode,
    Finite(Vec<u64>),
    Infinite,
}

impl TreeExpr {
    pub fn graft(handle: Seq, sub: TreeExpr) -> TreeExpr {
        if sub.is_empty() {
            return TreeExpr::Empty;
        }
        if handle.is_empty() {
            return sub;
        }
        match sub {
            TreeExpr::Graft { handle: h2, sub: s2 } => {
                TreeExpr::Graft { handle: handle.concat(&h2), sub: s2 }
            }
            sub => TreeExpr::Graft { handle, sub: Box::new(sub) },
        }
    }

    pub fn join_omega(family: TreeFamily) -> TreeExpr {
        TreeExpr::JoinOmega { family: Box::new(family) }
    }

    pub fn constant_join(sub: TreeExpr) -> TreeExpr {
        Self::join_omega(TreeFamily::Constant { sub })
    }

    pub fn join_finite(branches: Vec<(Seq, TreeExpr)>) -> TreeExpr {
        let branches: Vec<Branch> = branches
            .into_iter()
            .filter(|(_, s)| !s.is_empty())
            .map(|(head, sub)| Branch { head, sub })
            .collect();
        if branches.is_empty() {
            TreeExpr::Point
        } else {
            TreeExpr::JoinFinite { branches }
        }
    }

    pub fn explicit(t: FiniteTree) -> TreeExpr {
        if t.is_empty() {
            TreeExpr::Empty
        } else {
            TreeExpr::Explicit { nodes: t }
        }
    }

    /// Checks the structural invariants (JoinFinite heads, limit ordinals in
    /// ladders).
    pub fn validate(&self) -> TreeResult<()> {
        match self {
            TreeExpr::Graft { sub, .. } => sub.validate(),
            TreeExpr::JoinFinite { branches } => {
                let mut firsts = BTreeSet::new();
                for b in branches {
                    let Some(&f) = b.head.0.first() else {
                        return Err(TreeError::Malformed("empty branch head".into()));
                    };
                    if !firsts.insert(f) {
                        return Err(TreeError::Malformed(format!("two branches start with {f}")));
                    }
                    b.sub.validate()?;
                }
                Ok(())
            }
            TreeExpr::JoinOmega { family } => family.validate(),
            _ => Ok(()),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            TreeExpr::Empty => true,
            TreeExpr::Graft { sub, .. } => sub.is_empty(),
            TreeExpr::Explicit { nodes } => nodes.is_empty(),
            _ => false,
        }
    }

    /// The subtree at the child `(n)` of the root, if that child exists.
    pub fn child_tree(&self, n: u64) -> TreeResult<Option<TreeExpr>> {
        Ok(match self {
            TreeExpr::Empty | TreeExpr::Point => None,
            TreeExpr::Full => Some(TreeExpr::Full),
            TreeExpr::Ray { c } => (*c == n).then_some(TreeExpr::Ray { c: *c }),
            TreeExpr::Graft { handle, sub } => {
                if sub.is_empty() {
                    None
                } else if handle.is_empty() {
                    sub.child_tree(n)?
                } else if handle.0[0] == n {
                    Some(TreeExpr::graft(handle.suffix(1), (**sub).clone()))
                } else {
                    None
                }
            }
            TreeExpr::Explicit { nodes } => {
                let c = Seq(vec![n]);
                nodes.contains(&c).then(|| TreeExpr::Explicit { nodes: nodes.subtree(&c) })
            }
            TreeExpr::JoinOmega { family } => {
                let m = family.member(n)?;
                (!m.is_empty()).then_some(m)
            }
            TreeExpr::JoinFinite { branches } => branches
                .iter()
                .find(|b| b.head.0[0] == n)
                .map(|b| TreeExpr::graft(b.head.suffix(1), b.sub.clone()))
                .filter(|t| !t.is_empty()),
        })
    }

    pub fn member(&self, s: &Seq) -> TreeResult<bool> {
        Ok(self.subtree_opt(s)?.is_some())
    }

    fn subtree_opt(&self, s: &Seq) -> TreeResult<Option<TreeExpr>> {
        if self.is_empty() {
            return Ok(None);
        }
        // fast paths for the self-similar cases
        match self {
            TreeExpr::Full => return Ok(Some(TreeExpr::Full)),
            TreeExpr::Ray { c } => {
                return Ok(s.0.iter().all(|x| x == c).then_some(self.clone()));
            }
            TreeExpr::Explicit { nodes } => {
                return Ok(nodes.contains(s).then(|| TreeExpr::Explicit { nodes: nodes.subtree(s) }));
            }
            _ => {}
        }
        let mut cur = self.clone();
        for &x in &s.0 {
            match cur.child_tree(x)? {
                Some(t) => cur = t,
                None => return Ok(None),
            }
        }
        Ok(Some(cur))
    }

    /// `T^s`
    pub fn subtree_at(&self, s: &Seq) -> TreeResult<TreeExpr> {
        self.subtree_opt(s)?.ok_or_else(|| TreeError::NotANode(s.clone()))
    }

    /// Children of the root.
    pub fn root_children(&self) -> TreeResult<Children> {
        Ok(match self {
            TreeExpr::Empty => Children::NotANode,
            TreeExpr::Point => Children::Finite(vec![]),
            TreeExpr::Full => Children::Infinite,
            TreeExpr::Ray { c } => Children::Finite(vec![*c]),
            TreeExpr::Graft { handle, sub } => {
                if sub.is_empty() {
                    Children::NotANode
                } else if handle.is_empty() {
                    sub.root_children()?
                } else {
                    Children::Finite(vec![handle.0[0]])
                }
            }
            TreeExpr::Explicit { nodes } => {
                if nodes.is_empty() {
                    Children::NotANode
                } else {
                    Children::Finite(nodes.children(&Seq::empty()))
                }
            }
            TreeExpr::JoinFinite { branches } => {
                let mut v: Vec<u64> = branches
                    .iter()
                    .filter(|b| !b.sub.is_empty())
                    .map(|b| b.head.0[0])
                    .collect();
                v.sort_unstable();
                Children::Finite(v)
            }
            TreeExpr::JoinOmega { family } => family.children()?,
        })
    }

    pub fn children_profile(&self, s: &Seq) -> TreeResult<Children> {
        match self.subtree_opt(s)? {
            None => Ok(Children::NotANode),
            Some(t) => t.root_children(),
        }
    }

    /// Does the root have a child `n >= bound`?
    pub fn has_child_at_least(&self, bound: u64) -> TreeResult<bool> {
        Ok(match self.root_children()? {
            Children::NotANode => false,
            Children::Finite(v) => v.iter().any(|&n| n >= bound),
            Children::Infinite => true,
        })
    }

    /// `{ s ∈ T : |s| <= depth, all entries < width }`
    pub fn truncate(&self, depth: usize, width: u64) -> TreeResult<FiniteTree> {
        let mut nodes = BTreeSet::new();
        if self.is_empty() {
            return Ok(FiniteTree { nodes });
        }
        let mut stack = vec![(Seq::empty(), self.clone())];
        while let Some((s, t)) = stack.pop() {
            if s.len() < depth {
                let kids: Vec<u64> = match t.root_children()? {
                    Children::NotANode => vec![],
                    Children::Finite(v) => v.into_iter().filter(|&n| n < width).collect(),
                    Children::Infinite => (0..width).collect(),
                };
                for n in kids {
                    if let Some(c) = t.child_tree(n)? {
                        stack.push((s.child(n), c));
                    }
                }
            }
            nodes.insert(s);
        }
        Ok(FiniteTree { nodes })
    }

    /// Whether the denotation is finite.
    pub fn is_finite(&self) -> TreeResult<bool> {
        Ok(match self {
            TreeExpr::Empty | TreeExpr::Point | TreeExpr::Explicit { .. } => true,
            TreeExpr::Full | TreeExpr::Ray { .. } => false,
            TreeExpr::Graft { sub, .. } => sub.is_finite()?,
            TreeExpr::JoinFinite { branches } => {
                let mut all = true;
                for b in branches {
                    all &= b.sub.is_finite()?;
                }
                all
            }
            TreeExpr::JoinOmega { family } => match family.children()? {
                Children::Infinite => false,
                Children::NotANode => true,
                Children::Finite(v) => {
                    let mut all = true;
                    for n in v {
                        all &= family.member(n)?.is_finite()?;
                    }
                    all
                }
            },
        })
    }

    /// The whole tree as a finite tree, when it is finite.
    pub fn to_finite(&self) -> TreeResult<Option<FiniteTree>> {
        if !self.is_finite()? {
            return Ok(None);
        }
        let mut nodes = BTreeSet::new();
        if self.is_empty() {
            return Ok(Some(FiniteTree { nodes }));
        }
        let mut stack = vec![(Seq::empty(), self.clone())];
        while let Some((s, t)) = stack.pop() {
            if let Children::Finite(v) = t.root_children()? {
                for n in v {
                    if let Some(c) = t.child_tree(n)? {
                        stack.push((s.child(n), c));
                    }
                }
            }
            nodes.insert(s);
        }
        Ok(Some(FiniteTree { nodes }))
    }
}

impl TreeFamily {
    pub fn validate(&self) -> TreeResult<()> {
        match self {
            TreeFamily::Constant { sub } => sub.validate(),
            TreeFamily::PrefixThenConstant { prefix, tail } => {
                for p in prefix {
                    p.validate()?;
                }
                tail.validate()
            }
            TreeFamily::CanonicalSeq { lambda, .. } | TreeFamily::BroomSeq { lambda, .. } => {
                if lambda.is_limit() {
                    Ok(())
                } else {
                    Err(TreeError::Malformed(format!("ladder over non-limit {lambda}")))
                }
            }
            TreeFamily::Derived { inner, .. } => inner.validate(),
        }
    }

    pub fn member(&self, n: u64) -> TreeResult<TreeExpr> {
        Ok(match self {
            TreeFamily::Constant { sub } => sub.clone(),
            TreeFamily::PrefixThenConstant { prefix, tail } => {
                prefix.get(n as usize).unwrap_or(tail).clone()
            }
            TreeFamily::CanonicalSeq { lambda, enumeration } => {
                let e = LimitEnumeration::new(lambda, *enumeration)?;
                canonical_tree_with(&e.at(n), *enumeration)
            }
            TreeFamily::BroomSeq { lambda, head, offset, ext, enumeration } => {
                if n < *offset {
                    TreeExpr::Empty
                } else {
                    let e = LimitEnumeration::new(lambda, *enumeration)?;
                    let k = canonical_broom_closure(&e.at(n - offset), ext.as_ref(), *enumeration);
                    TreeExpr::graft(head.clone(), k)
                }
            }
            TreeFamily::Derived { derivative, alpha, inner } => {
                derive::iterate(*derivative, &inner.member(n)?, alpha)?
            }
        })
    }

    /// The set of indices with a nonempty member.
    pub fn children(&self) -> TreeResult<Children> {
        Ok(match self {
            TreeFamily::Constant { sub } => {
                if sub.is_empty() {
                    Children::Finite(vec![])
                } else {
                    Children::Infinite
                }
            }
            TreeFamily::PrefixThenConstant { prefix, tail } => {
                if tail.is_empty() {
                    Children::Finite(
                        prefix
                            .iter()
                            .enumerate()
                            .filter(|(_, t)| !t.is_empty())
                            .map(|(i, _)| i as u64)
                            .collect(),
                    )
                } else {
                    Children::Infinite
                }
            }
            TreeFamily::CanonicalSeq { .. } | TreeFamily::BroomSeq { .. } => Children::Infinite,
            TreeFamily::Derived { .. } => {
                if derive::family_has_alive(self)? {
                    Children::Infinite
                } else {
                    Children::Finite(vec![])
                }
            }
        })
    }
}

/// `T_α` with the canonical enumerations.
pub fn canonical_tree(alpha: &Ordinal) -> TreeExpr {
    canonical_tree_with(alpha, Enumeration::Canonical)
}

/// `T_0 = {∅}`, `T_{α+1} = {∅} ∪ ⋃_n n⌢T_α`, `T_λ = {∅} ∪ ⋃_n n⌢T_{π_λ(n)}`.
pub fn canonical_tree_with(alpha: &Ordinal, enumeration: Enumeration) -> TreeExpr {
    if alpha.is_zero() {
        TreeExpr::Point
    } else if let Some(p) = alpha.pred() {
        TreeExpr::constant_join(canonical_tree_with(&p, enumeration))
    } else {
        TreeExpr::join_omega(TreeFamily::CanonicalSeq { lambda: alpha.clone(), enumeration })
    }
}

/// `T^c_α` (`n = None`) or `T^c_{α,n}`. Even α: `T_{α′}`; odd α:
/// `{∅} ∪ n⌢T_{α′}` with `n = 1` by default.
pub fn canonical_tree_c(alpha: &Ordinal, n: Option<u64>) -> TreeResult<TreeExpr> {
    let ap = alpha.alpha_prime();
    if alpha.is_even() {
        if n.is_some() {
            return Err(TreeError::Malformed(format!("index given for even {alpha}")));
        }
        Ok(canonical_tree(&ap))
    } else {
        let n = n.unwrap_or(1);
        Ok(TreeExpr::join_finite(vec![(Seq(vec![n]), canonical_tree(&ap))]))
    }
}

/// Closure of the canonical broom of rank δ: `K_0 = {∅}`, odd
/// `K_δ = (0)⌢K_{δ-1}`, even successor `K_δ = ⋃_n (n)⌢K_{δ-1}`, limit
/// `K_λ = ⋃_n (n)⌢K_{π_λ(n)}`. With `ext`, every leaf carries the ray fork.
pub fn canonical_broom_closure(delta: &Ordinal, ext: Option<&RayFork>, enumeration: Enumeration) -> TreeExpr {
    if delta.is_zero() {
        return match ext {
            Some(rf) => rf.tree(),
            None => TreeExpr::Point,
        };
    }
    if let Some(p) = delta.pred() {
        let sub = canonical_broom_closure(&p, ext, enumeration);
        if delta.is_even() {
            TreeExpr::constant_join(sub)
        } else {
            TreeExpr::graft(Seq(vec![0]), sub)
        }
    } else {
        TreeExpr::join_omega(TreeFamily::BroomSeq {
            lambda: delta.clone(),
            head: Seq::empty(),
            offset: 0,
            ext: ext.cloned(),
            enumeration,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[u64]) -> Seq {
        Seq(v.to_vec())
    }

    #[test]
    fn cl_tr_examples() {
        let t = cl_tr([s(&[2, 5])]);
        assert_eq!(t.len(), 3);
        assert!(t.contains(&s(&[2])));
        assert!(cl_tr(Vec::<Seq>::new()).is_empty());
        let t = cl_tr([s(&[0, 1]), s(&[0, 2])]);
        let want: BTreeSet<Seq> = [s(&[]), s(&[0]), s(&[0, 1]), s(&[0, 2])].into_iter().collect();
        assert_eq!(t.nodes(), &want);
    }

    #[test]
    fn canonical_trees() {
        assert_eq!(canonical_tree(&Ordinal::zero()), TreeExpr::Point);
        let t2 = canonical_tree(&Ordinal::nat(2));
        assert!(t2.member(&s(&[9, 9])).unwrap());
        assert!(!t2.member(&s(&[7, 7, 7])).unwrap());
        let tw = canonical_tree(&Ordinal::omega());
        assert_eq!(tw.children_profile(&s(&[0])).unwrap(), Children::Finite(vec![]));
        assert!(tw.member(&s(&[3, 1, 1, 1])).unwrap());
        assert!(!tw.member(&s(&[3, 1, 1, 1, 1])).unwrap());
        let trunc = t2.truncate(2, 2).unwrap();
        assert_eq!(trunc.len(), 7);
    }

    #[test]
    fn canonical_c_trees() {
        let t = canonical_tree_c(&Ordinal::nat(1), Some(4)).unwrap();
        assert_eq!(t.to_finite().unwrap().unwrap(), cl_tr([s(&[4])]));
        let t3 = canonical_tree_c(&Ordinal::nat(3), None).unwrap();
        assert!(t3.member(&s(&[1, 8])).unwrap());
        assert!(!t3.member(&s(&[0])).unwrap());
        assert!(canonical_tree_c(&Ordinal::nat(2), Some(1)).is_err());
    }

    #[test]
    fn graft_and_rays() {
        let g = TreeExpr::graft(s(&[1, 2]), TreeExpr::Ray { c: 3 });
        assert!(g.member(&s(&[1])).unwrap());
        assert!(g.member(&s(&[1, 2, 3, 3, 3])).unwrap());
        assert!(!g.member(&s(&[1, 2, 4])).unwrap());
        assert!(!g.is_finite().unwrap());
        assert_eq!(TreeExpr::graft(s(&[1]), TreeExpr::Empty), TreeExpr::Empty);
    }

    #[test]
    fn json_round_trip() {
        let t = canonical_tree(&"w+1".parse().unwrap());
        let j = serde_json::to_string(&t).unwrap();
        let back: TreeExpr = serde_json::from_str(&j).unwrap();
        assert_eq!(t, back);
        assert!(serde_json::from_str::<FiniteTree>("[[1,2]]").is_err());
    }
}
