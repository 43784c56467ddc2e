//! Leaf-schemes over a finite universe, set expressions, and the compiler
//! from set expressions to schemes on truncated canonical trees.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ordinal::Ordinal;
use crate::seqtree::{canonical_tree, FiniteTree, Seq, TreeError};
use crate::sets::{AtomSet, SetError, Universe};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemeError {
    #[error("the two schemes live on different trees")]
    TreeMismatch,
    #[error("the schemes live on different universes")]
    UniverseMismatch,
    #[error("values must be given exactly on the leaves; offending node {0}")]
    NotLeaves(Seq),
    #[error("empty tree")]
    EmptyTree,
    #[error("expression of class {class} does not fit rank {alpha}")]
    ClassTooHigh { class: u64, alpha: Ordinal },
    #[error("width {width} too small at node {node}")]
    WidthTooSmall { width: u64, node: Seq },
    #[error("scheme is not monotone at {0}")]
    NotMonotone(Seq),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// `σ/δ` expressions over closed (here: arbitrary) subsets.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum SetExpr {
    Base { set: AtomSet },
    Union { of: Vec<SetExpr> },
    Inter { of: Vec<SetExpr> },
}

impl SetExpr {
    pub fn base(set: AtomSet) -> SetExpr {
        SetExpr::Base { set }
    }

    pub fn union(of: Vec<SetExpr>) -> SetExpr {
        SetExpr::Union { of }
    }

    pub fn inter(of: Vec<SetExpr>) -> SetExpr {
        SetExpr::Inter { of }
    }

    pub fn eval(&self, u: Universe) -> AtomSet {
        match self {
            SetExpr::Base { set } => *set,
            SetExpr::Union { of } => of.iter().fold(AtomSet::EMPTY, |a, e| a.union(e.eval(u))),
            SetExpr::Inter { of } => of.iter().fold(u.full(), |a, e| a.inter(e.eval(u))),
        }
    }

    /// Nested unions (intersections) merged, singletons unwrapped, empty
    /// lists replaced by their value.
    pub fn flatten(&self, u: Universe) -> SetExpr {
        match self {
            SetExpr::Base { .. } => self.clone(),
            SetExpr::Union { of } | SetExpr::Inter { of } => {
                let is_union = matches!(self, SetExpr::Union { .. });
                let mut out = Vec::new();
                for e in of {
                    match e.flatten(u) {
                        SetExpr::Union { of } if is_union => out.extend(of),
                        SetExpr::Inter { of } if !is_union => out.extend(of),
                        f => out.push(f),
                    }
                }
                match out.len() {
                    0 => SetExpr::base(self.eval(u)),
                    1 => out.pop().unwrap(),
                    _ if is_union => SetExpr::Union { of: out },
                    _ => SetExpr::Inter { of: out },
                }
            }
        }
    }

    /// Least `α` with the expression certifying membership in `F_α`: closed
    /// sets are 0, unions go up to the next odd class, intersections to the
    /// next even one (intersections of closed sets stay closed).
    pub fn class(&self, u: Universe) -> u64 {
        fn go(e: &SetExpr) -> u64 {
            match e {
                SetExpr::Base { .. } => 0,
                SetExpr::Union { of } => {
                    let m = of.iter().map(go).max().unwrap_or(0);
                    if m % 2 == 1 { m } else { m + 1 }
                }
                SetExpr::Inter { of } => {
                    let m = of.iter().map(go).max().unwrap_or(0);
                    if m % 2 == 0 { m } else { m + 1 }
                }
            }
        }
        go(&self.flatten(u))
    }

    pub fn members(&self) -> &[SetExpr] {
        match self {
            SetExpr::Base { .. } => std::slice::from_ref(self),
            SetExpr::Union { of } | SetExpr::Inter { of } => of,
        }
    }
}

/// Sets attached to the leaves of a finite tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LeafSchemeJson", into = "LeafSchemeJson")]
pub struct LeafScheme {
    universe: Universe,
    tree: FiniteTree,
    assign: BTreeMap<Seq, AtomSet>,
}

#[derive(Serialize, Deserialize)]
struct LeafValue {
    node: Seq,
    value: AtomSet,
}

#[derive(Serialize, Deserialize)]
struct LeafSchemeJson {
    universe: Universe,
    tree: FiniteTree,
    leaves: Vec<LeafValue>,
}

impl TryFrom<LeafSchemeJson> for LeafScheme {
    type Error = SchemeError;
    fn try_from(j: LeafSchemeJson) -> Result<Self, SchemeError> {
        LeafScheme::new(j.universe, j.tree, j.leaves.into_iter().map(|l| (l.node, l.value)).collect())
    }
}

impl From<LeafScheme> for LeafSchemeJson {
    fn from(h: LeafScheme) -> Self {
        LeafSchemeJson {
            universe: h.universe,
            tree: h.tree,
            leaves: h.assign.into_iter().map(|(node, value)| LeafValue { node, value }).collect(),
        }
    }
}

impl LeafScheme {
    pub fn new(universe: Universe, tree: FiniteTree, assign: BTreeMap<Seq, AtomSet>) -> Result<Self, SchemeError> {
        if tree.is_empty() {
            return Err(SchemeError::EmptyTree);
        }
        for (s, v) in &assign {
            if !tree.is_leaf(s) {
                return Err(SchemeError::NotLeaves(s.clone()));
            }
            universe.check(*v)?;
        }
        if let Some(l) = tree.leaves().into_iter().find(|l| !assign.contains_key(l)) {
            return Err(SchemeError::NotLeaves(l));
        }
        Ok(LeafScheme { universe, tree, assign })
    }

    pub fn universe(&self) -> Universe {
        self.universe
    }

    pub fn tree(&self) -> &FiniteTree {
        &self.tree
    }

    pub fn leaf_values(&self) -> &BTreeMap<Seq, AtomSet> {
        &self.assign
    }

    /// `H(t)` for every node: unions where `r_l(T^t)` is odd, intersections
    /// where it is even and positive.
    pub fn node_values(&self) -> BTreeMap<Seq, AtomSet> {
        let ranks = leaf_ranks(&self.tree);
        let mut vals = BTreeMap::new();
        // longest nodes first so children are ready
        let mut nodes: Vec<&Seq> = self.tree.nodes().iter().collect();
        nodes.sort_by_key(|s| std::cmp::Reverse(s.len()));
        for s in nodes {
            let v = match self.assign.get(s) {
                Some(v) => *v,
                None => {
                    let kids = self.tree.children(s).into_iter().map(|n| vals[&s.child(n)]);
                    if ranks[s] % 2 == 1 {
                        kids.fold(AtomSet::EMPTY, AtomSet::union)
                    } else {
                        kids.fold(self.universe.full(), AtomSet::inter)
                    }
                }
            };
            vals.insert(s.clone(), v);
        }
        vals
    }

    pub fn eval(&self) -> AtomSet {
        self.node_values()[&Seq::empty()]
    }
}

/// `r_l(T^s)` for every node of a finite tree.
pub fn leaf_ranks(t: &FiniteTree) -> HashMap<Seq, u64> {
    let mut r = HashMap::new();
    let mut nodes: Vec<&Seq> = t.nodes().iter().collect();
    nodes.sort_by_key(|s| std::cmp::Reverse(s.len()));
    for s in nodes {
        let v = t.children(s).into_iter().map(|n| r[&s.child(n)] + 1).max().unwrap_or(0);
        r.insert(s.clone(), v);
    }
    r
}

pub fn eval_scheme(h: &LeafScheme) -> AtomSet {
    h.eval()
}

/// `∀ leaves t: H(t) ∩ X ⊆ H′(t) ⊆ H(t)`
pub fn shrink_scheme(h: &LeafScheme, x: AtomSet, h2: &LeafScheme) -> Result<bool, SchemeError> {
    if h.tree != h2.tree {
        return Err(SchemeError::TreeMismatch);
    }
    if h.universe != h2.universe {
        return Err(SchemeError::UniverseMismatch);
    }
    Ok(h.assign.iter().all(|(t, v)| {
        let w = h2.assign[t];
        v.inter(x).is_subset(w) && w.is_subset(*v)
    }))
}

/// A scheme on `{ s ∈ T_α : entries < width }` evaluating to `e`. List
/// positions not used by `e` are padded with `e`'s own value; members are
/// matched greedily to children of large enough rank.
pub fn compile_simple(e: &SetExpr, alpha: &Ordinal, width: u64, u: Universe) -> Result<LeafScheme, SchemeError> {
    let e = e.flatten(u);
    let class = e.class(u);
    if Ordinal::nat(class) > *alpha {
        return Err(SchemeError::ClassTooHigh { class, alpha: alpha.clone() });
    }
    if width == 0 {
        return Err(SchemeError::WidthTooSmall { width, node: Seq::empty() });
    }
    let tree = canonical_tree(alpha).truncate(usize::MAX, width)?;
    let ranks = leaf_ranks(&tree);
    let mut assign = BTreeMap::new();
    place(&e, &Seq::empty(), &tree, &ranks, u, width, &mut assign)?;
    LeafScheme::new(u, tree, assign)
}

fn place(
    e: &SetExpr,
    node: &Seq,
    tree: &FiniteTree,
    ranks: &HashMap<Seq, u64>,
    u: Universe,
    width: u64,
    out: &mut BTreeMap<Seq, AtomSet>,
) -> Result<(), SchemeError> {
    let r = ranks[node];
    if r == 0 {
        if e.class(u) > 0 {
            return Err(SchemeError::WidthTooSmall { width, node: node.clone() });
        }
        out.insert(node.clone(), e.eval(u));
        return Ok(());
    }
    let union_node = r % 2 == 1;
    let members: Vec<SetExpr> = match e {
        SetExpr::Union { of } if union_node => of.clone(),
        SetExpr::Inter { of } if !union_node => of.clone(),
        _ => vec![e.clone()],
    };
    let mut kids: Vec<(u64, u64)> = tree.children(node).into_iter().map(|n| (ranks[&node.child(n)], n)).collect();
    if members.len() > kids.len() {
        return Err(SchemeError::WidthTooSmall { width, node: node.clone() });
    }
    let mut members: Vec<(u64, SetExpr)> = members.into_iter().map(|m| (m.class(u), m)).collect();
    members.sort_by(|a, b| b.0.cmp(&a.0));
    kids.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let pad = SetExpr::base(e.eval(u));
    for (i, &(kr, n)) in kids.iter().enumerate() {
        let m = match members.get(i) {
            Some((c, m)) => {
                if *c > kr {
                    return Err(SchemeError::WidthTooSmall { width, node: node.clone() });
                }
                m
            }
            None => &pad,
        };
        place(m, &node.child(n), tree, ranks, u, width, out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqtree::cl_tr;

    fn b(v: &[u32]) -> SetExpr {
        SetExpr::base(AtomSet::from_atoms(v.iter().copied()))
    }

    #[test]
    fn evaluation_by_parity() {
        let u = Universe::new(3).unwrap();
        let t = cl_tr([Seq(vec![0]), Seq(vec![1])]);
        let mut a = BTreeMap::new();
        a.insert(Seq(vec![0]), AtomSet::singleton(0));
        a.insert(Seq(vec![1]), AtomSet::singleton(1));
        let h = LeafScheme::new(u, t, a).unwrap();
        assert_eq!(h.eval(), AtomSet::from_atoms([0, 1]));
        let t = cl_tr([Seq(vec![0, 0]), Seq(vec![0, 1]), Seq(vec![1, 0])]);
        let mut a = BTreeMap::new();
        a.insert(Seq(vec![0, 0]), AtomSet::singleton(0));
        a.insert(Seq(vec![0, 1]), AtomSet::singleton(1));
        a.insert(Seq(vec![1, 0]), AtomSet::from_atoms([1, 2]));
        let h = LeafScheme::new(u, t, a).unwrap();
        assert_eq!(h.eval(), AtomSet::singleton(1));
    }

    #[test]
    fn classes() {
        let u = Universe::new(4).unwrap();
        assert_eq!(b(&[1]).class(u), 0);
        assert_eq!(SetExpr::union(vec![b(&[1]), b(&[2])]).class(u), 1);
        assert_eq!(SetExpr::inter(vec![SetExpr::union(vec![b(&[1]), b(&[2])]), b(&[3])]).class(u), 2);
        assert_eq!(SetExpr::union(vec![SetExpr::union(vec![b(&[1])])]).class(u), 0);
    }

    #[test]
    fn compile_examples() {
        let u = Universe::new(4).unwrap();
        let e = SetExpr::union(vec![b(&[0]), b(&[1])]);
        let h = compile_simple(&e, &Ordinal::one(), 3, u).unwrap();
        assert_eq!(h.leaf_values()[&Seq(vec![2])], AtomSet::from_atoms([0, 1]));
        assert_eq!(h.eval(), AtomSet::from_atoms([0, 1]));
        let e = SetExpr::inter(vec![e, b(&[1, 2])]);
        let h = compile_simple(&e, &Ordinal::nat(2), 2, u).unwrap();
        assert_eq!(h.eval(), AtomSet::singleton(1));
        assert!(matches!(
            compile_simple(&e, &Ordinal::one(), 2, u),
            Err(SchemeError::ClassTooHigh { .. })
        ));
        let h = compile_simple(&e, &Ordinal::omega(), 4, u).unwrap();
        assert_eq!(h.eval(), AtomSet::singleton(1));
    }
}
