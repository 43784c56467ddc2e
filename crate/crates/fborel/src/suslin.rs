//! Suslin schemes on a finite universe, admissible mappings and the
//! `R_T`-sets, the `S_C(y)` trees, and the re-indexing machinery that builds
//! regular representations.
//!
//! A scheme is given on a finite prefix-closed domain. Outside the domain,
//! `C(s)` is the value of the domain leaf that `s` extends, or `∅` when `s`
//! leaves the domain below an internal node.

use std::collections::{BTreeMap, HashMap};

use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::coding::{decode_tuple, encode_tuple, pair, unpair};
use crate::derive::{self, Height, Kind};
use crate::leafscheme::SetExpr;
use crate::ordinal::Ordinal;
use crate::seqtree::{canonical_tree_c, Children, FiniteTree, Seq, TreeError, TreeExpr};
use crate::sets::{AtomSet, ClosureOperator, SetError, Universe};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SuslinError {
    #[error("domain must contain the empty sequence")]
    EmptyDomain,
    #[error("no value given for domain node {0}")]
    MissingValue(Seq),
    #[error("value given outside the domain at {0}")]
    ExtraValue(Seq),
    #[error("scheme is not monotone at {0}")]
    NotMonotone(Seq),
    #[error("atom {0} is outside the universe")]
    OutsideUniverse(u32),
    #[error("the schemes live on different universes")]
    UniverseMismatch,
    #[error("A(closure of C) = {got}, expected {want}")]
    SuslinMismatch { got: AtomSet, want: AtomSet },
    #[error("expression of class {class} does not fit {alpha}")]
    ClassTooHigh { class: u64, alpha: Ordinal },
    #[error("a list of length {len} exceeds the width {width}")]
    WidthTooSmall { len: usize, width: u64 },
    #[error("malformed sequence of rows: {0}")]
    MalformedRows(String),
    #[error("code overflow while pairing")]
    Overflow,
    #[error("map is not total on the tree: missing {0}")]
    NotTotal(Seq),
    #[error("map leaves the target tree at {0}")]
    OutOfRange(Seq),
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

pub type SuslinResult<T> = Result<T, SuslinError>;

/// A monotone scheme with finite domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SchemeJson", into = "SchemeJson")]
pub struct SuslinScheme {
    universe: Universe,
    domain: FiniteTree,
    values: BTreeMap<Seq, AtomSet>,
}

#[derive(Serialize, Deserialize)]
struct NodeValue {
    node: Seq,
    value: AtomSet,
}

#[derive(Serialize, Deserialize)]
struct SchemeJson {
    universe: Universe,
    values: Vec<NodeValue>,
}

impl TryFrom<SchemeJson> for SuslinScheme {
    type Error = SuslinError;
    fn try_from(j: SchemeJson) -> SuslinResult<Self> {
        SuslinScheme::new(j.universe, j.values.into_iter().map(|v| (v.node, v.value)).collect())
    }
}

impl From<SuslinScheme> for SchemeJson {
    fn from(c: SuslinScheme) -> Self {
        SchemeJson {
            universe: c.universe,
            values: c.values.into_iter().map(|(node, value)| NodeValue { node, value }).collect(),
        }
    }
}

/// Where a sequence sits relative to the domain.
enum Loc {
    Inside,
    PastLeaf(Seq),
    Off,
}

impl SuslinScheme {
    /// The domain is the key set of `values`.
    pub fn new(universe: Universe, values: BTreeMap<Seq, AtomSet>) -> SuslinResult<Self> {
        if !values.contains_key(&Seq::empty()) {
            return Err(SuslinError::EmptyDomain);
        }
        let domain = FiniteTree::new(values.keys().cloned().collect())?;
        for (s, v) in &values {
            universe.check(*v)?;
            if let Some(p) = s.parent() {
                if !v.is_subset(values[&p]) {
                    return Err(SuslinError::NotMonotone(s.clone()));
                }
            }
        }
        Ok(SuslinScheme { universe, domain, values })
    }

    pub fn constant(universe: Universe, a: AtomSet) -> SuslinResult<Self> {
        Self::new(universe, BTreeMap::from([(Seq::empty(), a)]))
    }

    pub fn universe(&self) -> Universe {
        self.universe
    }

    pub fn domain(&self) -> &FiniteTree {
        &self.domain
    }

    pub fn values(&self) -> &BTreeMap<Seq, AtomSet> {
        &self.values
    }

    pub fn depth(&self) -> usize {
        self.domain.height().unwrap_or(0)
    }

    fn locate(&self, s: &Seq) -> Loc {
        if self.values.contains_key(s) {
            return Loc::Inside;
        }
        let mut k = s.len();
        while !self.values.contains_key(&s.prefix(k)) {
            k -= 1;
        }
        let p = s.prefix(k);
        if self.domain.is_leaf(&p) {
            Loc::PastLeaf(p)
        } else {
            Loc::Off
        }
    }

    /// `C(s)` under the extension convention.
    pub fn value(&self, s: &Seq) -> AtomSet {
        match self.locate(s) {
            Loc::Inside => self.values[s],
            Loc::PastLeaf(l) => self.values[&l],
            Loc::Off => AtomSet::EMPTY,
        }
    }

    pub fn leaf_values(&self) -> impl Iterator<Item = (&Seq, AtomSet)> {
        self.values.iter().filter(|(s, _)| self.domain.is_leaf(s)).map(|(s, v)| (s, *v))
    }

    /// The scheme `s ↦ closure(C(s))`.
    pub fn closed(&self, closure: &ClosureOperator) -> SuslinScheme {
        SuslinScheme {
            universe: self.universe,
            domain: self.domain.clone(),
            values: self.values.iter().map(|(s, v)| (s.clone(), closure.apply(*v))).collect(),
        }
    }

    /// Walks `xi` in zero-support form: past a leaf only zeros are allowed.
    /// Returns the value, whether a leaf has been reached, and the allowed
    /// next entries.
    fn walk(&self, xi: &Seq) -> Option<(AtomSet, bool, Vec<u64>)> {
        let mut node = Seq::empty();
        let mut past = false;
        for &x in &xi.0 {
            if past || self.domain.is_leaf(&node) {
                past = true;
                if x != 0 {
                    return None;
                }
                continue;
            }
            let c = node.child(x);
            if !self.values.contains_key(&c) {
                return None;
            }
            node = c;
        }
        let leaf = self.domain.is_leaf(&node);
        let next = if leaf { vec![0] } else { self.domain.children(&node) };
        Some((self.values[&node], leaf, next))
    }
}

/// `A(C) = ⋃_σ ⋂_n C(σ|n)`, the union of the leaf values.
pub fn suslin_operation(c: &SuslinScheme) -> AtomSet {
    c.leaf_values().fold(AtomSet::EMPTY, |a, (_, v)| a.union(v))
}

/// A map from a finite tree to sequences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdmissibleMap {
    pub map: BTreeMap<Seq, Seq>,
}

impl Serialize for AdmissibleMap {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.map.len()))?;
        for p in &self.map {
            seq.serialize_element(&p)?;
        }
        seq.end()
    }
}

impl AdmissibleMap {
    /// `s ⊑ t ⇒ φ(s) ⊑ φ(t)` and `|φ(t)| = t(0) + … + t(|t|-1)`.
    pub fn is_admissible(&self) -> bool {
        self.map.iter().all(|(t, img)| {
            img.len() as u64 == t.sum()
                && t.parent().map_or(true, |p| self.map.get(&p).map_or(false, |q| q.is_prefix_of(img)))
        })
    }
}

/// All admissible maps on `t` with entries `< bound`, built by choosing
/// `s_m ∈ bound^m` for every child `m` and recursing into `T^{(m)}`.
pub fn enumerate_admissible(t: &FiniteTree, bound: u64) -> Vec<AdmissibleMap> {
    if t.is_empty() {
        return vec![];
    }
    rec_admissible(t, bound).into_iter().map(|map| AdmissibleMap { map }).collect()
}

fn words(len: u64, bound: u64) -> Vec<Seq> {
    let mut out = vec![Seq::empty()];
    for _ in 0..len {
        out = out.into_iter().flat_map(|w| (0..bound).map(move |x| w.child(x))).collect();
    }
    out
}

fn rec_admissible(t: &FiniteTree, bound: u64) -> Vec<BTreeMap<Seq, Seq>> {
    let mut acc = vec![BTreeMap::from([(Seq::empty(), Seq::empty())])];
    for m in t.children(&Seq::empty()) {
        let sub = rec_admissible(&t.subtree(&Seq(vec![m])), bound);
        let ws = words(m, bound);
        let mut next = Vec::new();
        for base in &acc {
            for w in &ws {
                for psi in &sub {
                    let mut phi = base.clone();
                    for (u, img) in psi {
                        phi.insert(Seq(vec![m]).concat(u), w.concat(img));
                    }
                    next.push(phi);
                }
            }
        }
        acc = next;
    }
    acc
}

/// `R^h_T(C)` by the recursive formula. Children `m` with `|h| + m` beyond
/// the domain all give the same union, so only `m` below the bound are
/// expanded. States `(h, T')` may repeat (zero chains in ill-founded trees);
/// the value is the greatest fixpoint of the equations.
pub fn rt_set(c: &SuslinScheme, t: &TreeExpr, h: &Seq) -> SuslinResult<AtomSet> {
    let root = c.value(&Seq::empty());
    if t.is_empty() {
        return Ok(root);
    }
    match c.locate(h) {
        Loc::Off => return Ok(AtomSet::EMPTY),
        Loc::PastLeaf(l) => return Ok(c.values[&l].inter(root)),
        Loc::Inside => {}
    }
    let mut solver = Solver { c, index: HashMap::new(), eqs: Vec::new() };
    let start = solver.state(h, t)?;
    let n = solver.eqs.len();
    let mut vals: Vec<AtomSet> = solver.eqs.iter().map(|e| e.base).collect();
    loop {
        let mut changed = false;
        for i in 0..n {
            let e = &solver.eqs[i];
            let mut v = e.base;
            for term in &e.terms {
                let u = term.deps.iter().fold(term.constant, |a, &j| a.union(vals[j]));
                v = v.inter(u);
            }
            if v != vals[i] {
                vals[i] = v;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(vals[start].inter(root))
}

struct Term {
    deps: Vec<usize>,
    constant: AtomSet,
}

struct Equation {
    base: AtomSet,
    terms: Vec<Term>,
}

struct Solver<'a> {
    c: &'a SuslinScheme,
    index: HashMap<(Seq, TreeExpr), usize>,
    eqs: Vec<Equation>,
}

impl Solver<'_> {
    fn state(&mut self, h: &Seq, t: &TreeExpr) -> SuslinResult<usize> {
        let key = (h.clone(), t.clone());
        if let Some(&i) = self.index.get(&key) {
            return Ok(i);
        }
        let i = self.eqs.len();
        self.index.insert(key, i);
        let base = self.c.values[h];
        self.eqs.push(Equation { base, terms: vec![] });
        if self.c.domain.is_leaf(h) {
            return Ok(i);
        }
        let below: Vec<(Seq, bool)> = self
            .c
            .values
            .range(h.clone()..)
            .take_while(|(s, _)| h.is_prefix_of(s))
            .map(|(s, _)| (s.clone(), self.c.domain.is_leaf(s)))
            .collect();
        let leaves_below = below.iter().filter(|p| p.1).fold(AtomSet::EMPTY, |a, p| a.union(self.c.values[&p.0]));
        let bound = (self.c.depth() + 1 - h.len()) as u64;
        let (small, big): (Vec<u64>, bool) = match t.root_children()? {
            Children::NotANode => (vec![], false),
            Children::Finite(v) => (v.iter().copied().filter(|&m| m < bound).collect(), v.iter().any(|&m| m >= bound)),
            Children::Infinite => ((0..bound).collect(), true),
        };
        let mut terms = Vec::new();
        for m in small {
            let sub = t.child_tree(m)?.expect("listed child");
            let depth = h.len() + m as usize;
            let mut deps = Vec::new();
            let mut constant = AtomSet::EMPTY;
            for (s, leaf) in &below {
                if s.len() == depth {
                    deps.push(self.state(s, &sub)?);
                } else if *leaf && s.len() < depth {
                    constant = constant.union(self.c.values[s]);
                }
            }
            terms.push(Term { deps, constant });
        }
        if big {
            terms.push(Term { deps: vec![], constant: leaves_below });
        }
        self.eqs[i].terms = terms;
        Ok(i)
    }
}

/// `x ∈ R^h_T(C)`
pub fn rt_member(c: &SuslinScheme, t: &TreeExpr, x: u32, h: &Seq) -> SuslinResult<bool> {
    if x >= c.universe.size {
        return Err(SuslinError::OutsideUniverse(x));
    }
    Ok(rt_set(c, t, h)?.contains(x))
}

/// `R_α(C) = R_{T^c_α}(C)`
pub fn r_alpha(c: &SuslinScheme, alpha: &Ordinal) -> SuslinResult<AtomSet> {
    rt_set(c, &canonical_tree_c(alpha, None)?, &Seq::empty())
}

/// `R^h_T(C)` by searching all admissible maps with entries up to one past
/// the largest entry of the domain (larger entries behave the same).
pub fn brute_rt_set(c: &SuslinScheme, t: &FiniteTree, h: &Seq) -> AtomSet {
    let root = c.value(&Seq::empty()).inter(c.value(h));
    if t.is_empty() {
        return c.value(&Seq::empty());
    }
    let alphabet = c.domain.max_entry() + 2;
    let nodes: Vec<Seq> = {
        let mut v: Vec<Seq> = t.nodes().iter().cloned().collect();
        v.sort_by_key(|s| s.len());
        v
    };
    let mut found = AtomSet::EMPTY;
    let mut phi: HashMap<Seq, Seq> = HashMap::from([(Seq::empty(), Seq::empty())]);
    brute_dfs(c, h, &nodes, 1, root, &mut phi, alphabet, &mut found);
    found
}

#[allow(clippy::too_many_arguments)]
fn brute_dfs(
    c: &SuslinScheme,
    h: &Seq,
    nodes: &[Seq],
    i: usize,
    acc: AtomSet,
    phi: &mut HashMap<Seq, Seq>,
    alphabet: u64,
    found: &mut AtomSet,
) {
    if acc.is_subset(*found) {
        return;
    }
    if i == nodes.len() {
        *found = found.union(acc);
        return;
    }
    let t = &nodes[i];
    let parent_img = phi[&t.parent().expect("nonroot")].clone();
    let n = *t.0.last().unwrap();
    for w in words(n, alphabet) {
        let img = parent_img.concat(&w);
        let a = acc.inter(c.value(&h.concat(&img)));
        phi.insert(t.clone(), img);
        brute_dfs(c, h, nodes, i + 1, a, phi, alphabet, found);
    }
    phi.remove(t);
}

/// The two conditions under which `f : T → S` gives `R_S(C) ⊆ R_T(C)`:
/// `f` preserves `⊑`, and the first `|t|` entries of `f(t)` sum to at least
/// `t(0) + … + t(|t|-1)`.
pub fn embed_check(f: &BTreeMap<Seq, Seq>, t: &FiniteTree, s: &FiniteTree) -> SuslinResult<bool> {
    for u in t.nodes() {
        let Some(fu) = f.get(u) else {
            return Err(SuslinError::NotTotal(u.clone()));
        };
        if !s.contains(fu) {
            return Err(SuslinError::OutOfRange(u.clone()));
        }
    }
    for u in t.nodes() {
        let fu = &f[u];
        if let Some(p) = u.parent() {
            if !f[&p].is_prefix_of(fu) {
                return Ok(false);
            }
        }
        let k = u.len().min(fu.len());
        let lhs: u64 = fu.0[..k].iter().sum();
        if lhs < u.sum() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `S_C(y) = { s : y ∈ closure(C(s)) }`: a finite part of the domain with a
/// full cone above each domain leaf it contains.
pub fn s_tree(c: &SuslinScheme, closure: &ClosureOperator, y: u32) -> TreeExpr {
    fn build(c: &SuslinScheme, closure: &ClosureOperator, y: u32, s: &Seq) -> TreeExpr {
        if !closure.apply(c.values[s]).contains(y) {
            return TreeExpr::Empty;
        }
        if c.domain.is_leaf(s) {
            return TreeExpr::Full;
        }
        let branches = c
            .domain
            .children(s)
            .into_iter()
            .map(|n| (Seq(vec![n]), build(c, closure, y, &s.child(n))))
            .collect();
        TreeExpr::join_finite(branches)
    }
    build(c, closure, y, &Seq::empty())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FaPoint {
    pub point: u32,
    /// sup of the lengths in `D_iie^{α′}(S_C(y))`, `None` when it is empty,
    /// `Some(None)` when unbounded
    pub height: Option<Option<u64>>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FaReport {
    pub alpha: Ordinal,
    pub alpha_prime: Ordinal,
    pub points: Vec<FaPoint>,
    /// for odd α: the bound `i` with every derivative inside `ω^{≤i}`
    pub bound: Option<u64>,
    pub pass: bool,
}

/// For each `y ∉ x`, computes `D_iie^{α′}(S_C(y))`. Even α passes when all
/// of them are empty; odd α when all of them have bounded length.
pub fn fa_sufficiency_check(
    c: &SuslinScheme,
    closure: &ClosureOperator,
    x: AtomSet,
    alpha: &Ordinal,
) -> SuslinResult<FaReport> {
    let got = suslin_operation(&c.closed(closure));
    if got != x {
        return Err(SuslinError::SuslinMismatch { got, want: x });
    }
    let ap = alpha.alpha_prime();
    let mut points = Vec::new();
    for y in c.universe.full().minus(x).atoms() {
        let d = derive::iterate(Kind::Iie, &s_tree(c, closure, y), &ap)?;
        let height = if d.is_empty() {
            None
        } else {
            Some(match derive::profile(Kind::Iie, &d)?.heights.at(&Ordinal::zero()) {
                Height::Fin(h) => Some(h),
                _ => None,
            })
        };
        let pass = if alpha.is_even() { height.is_none() } else { !matches!(height, Some(None)) };
        points.push(FaPoint { point: y, height, pass });
    }
    let pass = points.iter().all(|p| p.pass);
    let bound = if !alpha.is_even() && pass {
        Some(points.iter().filter_map(|p| p.height.flatten()).max().unwrap_or(0))
    } else {
        None
    };
    Ok(FaReport { alpha: alpha.clone(), alpha_prime: ap, points, bound, pass })
}

/// `ϱ(s⃗)` with `Δ_k(s⃗)` and `ξ_k(s⃗)` for `k = 0..=m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeltaXi {
    pub rho: Seq,
    pub deltas: Vec<Seq>,
    pub xis: Vec<Seq>,
}

fn check_rows(svec: &[Seq]) -> SuslinResult<()> {
    for (j, s) in svec.iter().enumerate() {
        if s.len() != j + 2 {
            return Err(SuslinError::MalformedRows(format!("row {} has length {}, expected {}", j + 1, s.len(), j + 2)));
        }
    }
    Ok(())
}

/// `ϱ(s⃗) = (π_2(s_1), …, π_{m+1}(s_m))`
pub fn rho(svec: &[Seq]) -> SuslinResult<Seq> {
    check_rows(svec)?;
    svec.iter().map(|s| encode_tuple(&s.0).ok_or(SuslinError::Overflow)).collect::<SuslinResult<Vec<u64>>>().map(Seq)
}

/// `ϱ^{-1}(u)`
pub fn rho_inv(u: &Seq) -> Vec<Seq> {
    u.0.iter().enumerate().map(|(j, &x)| Seq(decode_tuple(x, j + 2))).collect()
}

/// `Δ_k(s⃗) = (s_1^1, …, s_k^k)`
pub fn delta(svec: &[Seq], k: usize) -> Seq {
    Seq((1..=k).map(|j| svec[j - 1].0[j]).collect())
}

/// `ξ_k(s⃗) = (s_{k+1}^k, …, s_m^k)`
pub fn xi(svec: &[Seq], k: usize) -> Seq {
    Seq((k + 1..=svec.len()).map(|j| svec[j - 1].0[k]).collect())
}

pub fn delta_xi(svec: &[Seq]) -> SuslinResult<DeltaXi> {
    let r = rho(svec)?;
    let m = svec.len();
    Ok(DeltaXi { rho: r, deltas: (0..=m).map(|k| delta(svec, k)).collect(), xis: (0..=m).map(|k| xi(svec, k)).collect() })
}

fn max_list(e: &SetExpr) -> usize {
    match e {
        SetExpr::Base { .. } => 0,
        SetExpr::Union { of } | SetExpr::Inter { of } => of.iter().map(max_list).max().unwrap_or(0).max(of.len()),
    }
}

/// A scheme `C` with `R_α(C) = e` that covers `e`.
///
/// Odd α: `C(∅) = e`, `C(i⌢t) = e ∩ C_i(t)` for the members of the union.
/// Even α ≥ 2: `e = ⋂_j ⋃_i P^j_i`, `X_Δ = e ∩ P^0_{Δ(0)} ∩ …`, each `X_Δ`
/// compiled at `α-2` into `C_Δ`, and `C(ϱ(s⃗)) = ⋂_k C_{Δ_k(s⃗)}(ξ_k(s⃗))`.
/// Infinite α is handled at the least even finite level above the class of
/// `e` (plus the odd prefix steps).
pub fn compile_regular(e: &SetExpr, alpha: &Ordinal, width: u64, u: Universe) -> SuslinResult<SuslinScheme> {
    let len = max_list(e);
    if len as u64 > width {
        return Err(SuslinError::WidthTooSmall { len, width });
    }
    let e = e.flatten(u);
    let class = e.class(u);
    if Ordinal::nat(class) > *alpha {
        return Err(SuslinError::ClassTooHigh { class, alpha: alpha.clone() });
    }
    let values = compile_at(&e, alpha, u)?;
    SuslinScheme::new(u, values)
}

fn compile_at(e: &SetExpr, alpha: &Ordinal, u: Universe) -> SuslinResult<BTreeMap<Seq, AtomSet>> {
    if let Some(a) = alpha.as_finite() {
        return compile_finite(e, a, u);
    }
    if !alpha.is_even() {
        return compile_odd(e, u, |m| compile_at(m, &alpha.pred().expect("odd"), u));
    }
    let c = e.class(u);
    compile_finite(e, c + c % 2, u)
}

fn compile_finite(e: &SetExpr, a: u64, u: Universe) -> SuslinResult<BTreeMap<Seq, AtomSet>> {
    if a == 0 {
        return Ok(BTreeMap::from([(Seq::empty(), e.eval(u))]));
    }
    if a % 2 == 1 {
        return compile_odd(e, u, |m| compile_finite(m, a - 1, u));
    }
    Reindexer::new(e, a, u).run().map(renumber)
}

/// Children of every node renamed `0, 1, …` in increasing order. Row codes
/// built from the labels of inner columns stay small this way.
fn renumber(values: BTreeMap<Seq, AtomSet>) -> BTreeMap<Seq, AtomSet> {
    let mut nodes: Vec<&Seq> = values.keys().collect();
    nodes.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    let mut name: HashMap<&Seq, Seq> = HashMap::new();
    let mut count: HashMap<Seq, u64> = HashMap::new();
    let mut out = BTreeMap::new();
    for s in nodes {
        let new = match s.parent() {
            None => Seq::empty(),
            Some(p) => {
                let np = name[&p].clone();
                let k = count.entry(np.clone()).or_insert(0);
                *k += 1;
                np.child(*k - 1)
            }
        };
        out.insert(new.clone(), values[s]);
        name.insert(s, new);
    }
    out
}

fn compile_odd(
    e: &SetExpr,
    u: Universe,
    inner: impl Fn(&SetExpr) -> SuslinResult<BTreeMap<Seq, AtomSet>>,
) -> SuslinResult<BTreeMap<Seq, AtomSet>> {
    let z = e.eval(u);
    let members: Vec<SetExpr> = match e {
        SetExpr::Union { of } => of.clone(),
        _ => vec![e.clone()],
    };
    let mut out = BTreeMap::from([(Seq::empty(), z)]);
    for (i, m) in members.iter().enumerate() {
        for (t, v) in inner(m)? {
            out.insert(Seq(vec![i as u64]).concat(&t), z.inter(v));
        }
    }
    Ok(out)
}

struct Column {
    scheme: SuslinScheme,
}

struct Reindexer {
    u: Universe,
    a: u64,
    z: AtomSet,
    /// `P^j`, the members of the j-th union
    families: Vec<Vec<SetExpr>>,
    cache: HashMap<Seq, std::rc::Rc<Column>>,
    out: BTreeMap<Seq, AtomSet>,
}

impl Reindexer {
    fn new(e: &SetExpr, a: u64, u: Universe) -> Reindexer {
        let inters: Vec<SetExpr> = match e {
            SetExpr::Inter { of } => of.clone(),
            _ => vec![e.clone()],
        };
        let families = inters
            .iter()
            .map(|m| match m {
                SetExpr::Union { of } => of.clone(),
                _ => vec![m.clone()],
            })
            .collect();
        Reindexer { u, a, z: e.eval(u), families, cache: HashMap::new(), out: BTreeMap::new() }
    }

    fn len(&self) -> usize {
        self.families.len()
    }

    /// `C_Δ`, compiled at `a-2`; for `|Δ|` past the families it is the
    /// constant scheme of `X_{Δ|L}`.
    fn column(&mut self, d: &Seq) -> SuslinResult<std::rc::Rc<Column>> {
        if let Some(c) = self.cache.get(d) {
            return Ok(c.clone());
        }
        let l = self.len();
        let mut parts = vec![SetExpr::base(self.z)];
        for (j, &i) in d.0.iter().take(l).enumerate() {
            parts.push(self.families[j][i as usize].clone());
        }
        let x = SetExpr::inter(parts).flatten(self.u);
        let values = if d.len() <= l {
            compile_finite(&x, self.a - 2, self.u)?
        } else {
            BTreeMap::from([(Seq::empty(), x.eval(self.u))])
        };
        let col = std::rc::Rc::new(Column { scheme: SuslinScheme::new(self.u, values)? });
        self.cache.insert(d.clone(), col.clone());
        Ok(col)
    }

    fn run(mut self) -> SuslinResult<BTreeMap<Seq, AtomSet>> {
        let col0 = self.column(&Seq::empty())?;
        let (v, _, _) = col0.scheme.walk(&Seq::empty()).expect("root");
        self.node(Seq::empty(), Seq::empty(), vec![Seq::empty()], v)?;
        Ok(self.out)
    }

    /// A node `ϱ(s⃗_m)` given by its label, `Δ_m`, and the columns `ξ_k`.
    fn node(&mut self, label: Seq, d: Seq, xis: Vec<Seq>, value: AtomSet) -> SuslinResult<()> {
        self.out.insert(label.clone(), value);
        let m = d.len();
        let mut cols = Vec::with_capacity(m + 1);
        let mut all_leaf = true;
        for (k, x) in xis.iter().enumerate() {
            let col = self.column(&d.prefix(k))?;
            let (_, leaf, next) = col.scheme.walk(x).expect("valid column");
            all_leaf &= leaf;
            cols.push((col, next));
        }
        if m >= self.len() && all_leaf {
            return Ok(());
        }
        let diag: Vec<u64> = if m < self.len() { (0..self.families[m].len() as u64).collect() } else { vec![0] };
        let mut children = Vec::new();
        let mut entries = Vec::with_capacity(m + 2);
        self.extend(&cols, 0, &mut entries, value, &diag, &d, &xis, &mut children)?;
        if children.is_empty() {
            self.out.insert(label.child(0), AtomSet::EMPTY);
        }
        for (code, nd, nx, v) in children {
            self.node(label.child(code), nd, nx, v)?;
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments, clippy::type_complexity)]
    fn extend(
        &mut self,
        cols: &[(std::rc::Rc<Column>, Vec<u64>)],
        k: usize,
        entries: &mut Vec<u64>,
        acc: AtomSet,
        diag: &[u64],
        d: &Seq,
        xis: &[Seq],
        out: &mut Vec<(u64, Seq, Vec<Seq>, AtomSet)>,
    ) -> SuslinResult<()> {
        if acc.is_empty() {
            return Ok(());
        }
        if k < cols.len() {
            let (col, next) = &cols[k];
            for &x in next {
                let (v, _, _) = col.scheme.walk(&xis[k].child(x)).expect("allowed entry");
                entries.push(x);
                self.extend(cols, k + 1, entries, acc.inter(v), diag, d, xis, out)?;
                entries.pop();
            }
            return Ok(());
        }
        for &g in diag {
            let nd = d.child(g);
            let col = self.column(&nd)?;
            let (v, _, _) = col.scheme.walk(&Seq::empty()).expect("root");
            let value = acc.inter(v);
            if value.is_empty() {
                continue;
            }
            entries.push(g);
            let code = encode_tuple(entries).ok_or(SuslinError::Overflow)?;
            entries.pop();
            let mut nx: Vec<Seq> = xis.iter().zip(entries.iter()).map(|(x, &e)| x.child(e)).collect();
            nx.push(Seq::empty());
            out.push((code, nd, nx, value));
        }
        Ok(())
    }
}

/// `P(ϱ(s,t)) = C(s) ∩ R(t)`, entries of `u` decoded as pairs. The domain
/// is walked in zero-support form.
pub fn pair_refine(c: &SuslinScheme, r: &SuslinScheme) -> SuslinResult<SuslinScheme> {
    if c.universe != r.universe {
        return Err(SuslinError::UniverseMismatch);
    }
    let mut out = BTreeMap::new();
    let mut stack = vec![(Seq::empty(), Seq::empty(), Seq::empty())];
    while let Some((label, s, t)) = stack.pop() {
        let (cv, cl, cn) = c.walk(&s).expect("valid");
        let (rv, rl, rn) = r.walk(&t).expect("valid");
        out.insert(label.clone(), cv.inter(rv));
        if cl && rl {
            continue;
        }
        for &a in &cn {
            for &b in &rn {
                let code = pair(a, b).ok_or(SuslinError::Overflow)?;
                stack.push((label.child(code), s.child(a), t.child(b)));
            }
        }
    }
    SuslinScheme::new(c.universe, out)
}

/// The two coordinates of a paired sequence.
pub fn unpair_seq(u: &Seq) -> (Seq, Seq) {
    let (a, b): (Vec<u64>, Vec<u64>) = u.0.iter().map(|&x| unpair(x)).unzip();
    (Seq(a), Seq(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqtree::{canonical_tree, cl_tr};

    fn two_point(root: AtomSet) -> SuslinScheme {
        let u = Universe::new(3).unwrap();
        SuslinScheme::new(
            u,
            BTreeMap::from([
                (Seq::empty(), root),
                (Seq(vec![0]), AtomSet::singleton(0)),
                (Seq(vec![1]), AtomSet::singleton(1)),
            ]),
        )
        .unwrap()
    }

    #[test]
    fn two_point_scheme() {
        let c = two_point(AtomSet::from_atoms([0, 1]));
        let t1 = canonical_tree(&Ordinal::one());
        assert!(rt_member(&c, &t1, 0, &Seq::empty()).unwrap());
        assert!(rt_member(&c, &t1, 1, &Seq::empty()).unwrap());
        assert_eq!(r_alpha(&c, &Ordinal::nat(2)).unwrap(), AtomSet::from_atoms([0, 1]));
        let c = two_point(AtomSet::from_atoms([0, 1, 2]));
        assert!(!rt_member(&c, &t1, 2, &Seq::empty()).unwrap());
        assert_eq!(r_alpha(&c, &Ordinal::zero()).unwrap(), AtomSet::from_atoms([0, 1, 2]));
        assert_eq!(suslin_operation(&c), AtomSet::from_atoms([0, 1]));
        assert_eq!(rt_set(&c, &TreeExpr::Full, &Seq::empty()).unwrap(), AtomSet::from_atoms([0, 1]));
        assert!(rt_member(&c, &t1, 7, &Seq::empty()).is_err());
    }

    #[test]
    fn admissible_enumeration() {
        assert_eq!(enumerate_admissible(&FiniteTree::point(), 3).len(), 1);
        let t = cl_tr([Seq(vec![2])]);
        let maps = enumerate_admissible(&t, 2);
        assert_eq!(maps.len(), 4);
        assert!(maps.iter().all(AdmissibleMap::is_admissible));
        let t = cl_tr([Seq(vec![0])]);
        let maps = enumerate_admissible(&t, 5);
        assert_eq!(maps.len(), 1);
        assert_eq!(maps[0].map[&Seq(vec![0])], Seq::empty());
    }

    #[test]
    fn figure_rows() {
        let (a, b, c, d, e, f, g, h, i) = (1, 2, 3, 4, 5, 6, 7, 8, 9);
        let s = vec![Seq(vec![a, b]), Seq(vec![c, d, e]), Seq(vec![f, g, h, i])];
        let dx = delta_xi(&s).unwrap();
        assert_eq!(dx.deltas[0], Seq::empty());
        assert_eq!(dx.xis[0], Seq(vec![a, c, f]));
        assert_eq!(dx.deltas[2], Seq(vec![b, e]));
        assert_eq!(dx.xis[2], Seq(vec![h]));
        assert_eq!(dx.deltas[3], Seq(vec![b, e, i]));
        assert_eq!(dx.xis[3], Seq::empty());
        for k in 0..=3 {
            assert_eq!(dx.deltas[k].len() + dx.xis[k].len(), 3);
        }
        assert_eq!(rho_inv(&dx.rho), s);
        assert!(rho(&[Seq(vec![1])]).is_err());
    }

    #[test]
    fn s_tree_and_sufficiency() {
        let c = two_point(AtomSet::from_atoms([0, 1, 2]));
        let id = ClosureOperator::Identity;
        assert!(s_tree(&c, &id, 2).to_finite().unwrap().unwrap() == FiniteTree::point());
        let sa = s_tree(&c, &id, 0);
        assert!(sa.member(&Seq(vec![0, 5, 5])).unwrap());
        assert!(!sa.member(&Seq(vec![1])).unwrap());
        let rep = fa_sufficiency_check(&c, &id, AtomSet::from_atoms([0, 1]), &Ordinal::nat(2)).unwrap();
        assert!(rep.pass);
        assert!(fa_sufficiency_check(&c, &id, AtomSet::singleton(0), &Ordinal::nat(2)).is_err());
    }

    #[test]
    fn compile_small() {
        let u = Universe::new(4).unwrap();
        let b = |v: &[u32]| SetExpr::base(AtomSet::from_atoms(v.iter().copied()));
        let e = SetExpr::inter(vec![SetExpr::union(vec![b(&[0, 1]), b(&[2])]), SetExpr::union(vec![b(&[1, 2]), b(&[3])])]);
        let want = e.eval(u);
        for a in 0..=4u64 {
            if a < e.class(u) {
                continue;
            }
            let c = compile_regular(&e, &Ordinal::nat(a), 3, u).unwrap();
            assert_eq!(r_alpha(&c, &Ordinal::nat(a)).unwrap(), want, "alpha {a}");
            assert!(want.is_subset(suslin_operation(&c)));
        }
    }
}
