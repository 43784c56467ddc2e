//! Finite topological spaces: zoom spaces, the largest open set with a given
//! trace, amalgamations and the (A1)–(A4) conditions, and the handle sets of
//! broom extensions.
//!
//! A finite topology is determined by the minimal neighbourhoods `U_x`;
//! points are `0..n` and subsets are [`AtomSet`]s.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::broom::{self, BroomError, InfBroomExpr};
use crate::ordinal::Ordinal;
use crate::seqtree::Seq;
use crate::sets::AtomSet;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopError {
    #[error("a finite space has at most 64 points, got {0}")]
    TooLarge(u32),
    #[error("{0} is not a subset of the points")]
    NotASubset(AtomSet),
    #[error("not a preorder: {0}")]
    NotAPreorder(String),
    #[error("{0} is not open in the subspace {1}")]
    NotRelativelyOpen(AtomSet, AtomSet),
    #[error("point {0} is not isolated")]
    NotIsolated(u32),
    #[error("the space attached at {0} is empty")]
    EmptyFactor(u32),
    #[error("precondition fails: {0}")]
    Precondition(String),
    #[error("postcondition fails: {0}")]
    Postcondition(String),
    #[error(transparent)]
    Broom(#[from] BroomError),
}

pub type TopResult<T> = Result<T, TopError>;

/// A topology on `{0, …, n-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SpaceJson", into = "SpaceJson")]
pub struct FinSpace {
    n: u32,
    /// `U_x`, the least open set containing `x`
    nbhd: Vec<AtomSet>,
}

/// `{"points": n, "opens": [...]}` (the opens generate the topology) or
/// `{"points": n, "preorder": [[x, y], ...]}` meaning `y ∈ U_x`.
#[derive(Serialize, Deserialize)]
struct SpaceJson {
    points: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    opens: Option<Vec<AtomSet>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    preorder: Option<Vec<(u32, u32)>>,
}

impl TryFrom<SpaceJson> for FinSpace {
    type Error = TopError;
    fn try_from(j: SpaceJson) -> TopResult<Self> {
        match (j.opens, j.preorder) {
            (Some(o), None) => FinSpace::from_subbasis(j.points, &o),
            (None, Some(p)) => FinSpace::from_preorder(j.points, &p),
            (None, None) => FinSpace::from_subbasis(j.points, &[]),
            (Some(_), Some(_)) => Err(TopError::NotAPreorder("give either opens or a preorder".into())),
        }
    }
}

impl From<FinSpace> for SpaceJson {
    fn from(s: FinSpace) -> Self {
        let opens = if s.n <= 12 { s.opens() } else { s.nbhd.clone() };
        SpaceJson { points: s.n, opens: Some(opens), preorder: None }
    }
}

impl FinSpace {
    /// The topology generated by `sets`.
    pub fn from_subbasis(n: u32, sets: &[AtomSet]) -> TopResult<FinSpace> {
        if n > 64 {
            return Err(TopError::TooLarge(n));
        }
        let all = AtomSet::full(n);
        for &s in sets {
            if !s.is_subset(all) {
                return Err(TopError::NotASubset(s));
            }
        }
        let nbhd = (0..n).map(|x| sets.iter().filter(|s| s.contains(x)).fold(all, |a, s| a.inter(*s))).collect();
        Ok(FinSpace { n, nbhd })
    }

    /// `pairs` lists `(x, y)` with `y ∈ U_x`; the reflexive transitive
    /// closure is taken.
    pub fn from_preorder(n: u32, pairs: &[(u32, u32)]) -> TopResult<FinSpace> {
        if n > 64 {
            return Err(TopError::TooLarge(n));
        }
        let mut nbhd: Vec<AtomSet> = (0..n).map(AtomSet::singleton).collect();
        for &(x, y) in pairs {
            if x >= n || y >= n {
                return Err(TopError::NotAPreorder(format!("pair ({x}, {y}) out of range")));
            }
            nbhd[x as usize] = nbhd[x as usize].union(AtomSet::singleton(y));
        }
        loop {
            let mut changed = false;
            for x in 0..n as usize {
                let u = nbhd[x].atoms().fold(nbhd[x], |a, y| a.union(nbhd[y as usize]));
                if u != nbhd[x] {
                    nbhd[x] = u;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        Ok(FinSpace { n, nbhd })
    }

    pub fn discrete(n: u32) -> FinSpace {
        FinSpace { n, nbhd: (0..n).map(AtomSet::singleton).collect() }
    }

    pub fn indiscrete(n: u32) -> FinSpace {
        FinSpace { n, nbhd: vec![AtomSet::full(n); n as usize] }
    }

    pub fn len(&self) -> u32 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn points(&self) -> AtomSet {
        AtomSet::full(self.n)
    }

    pub fn nbhd(&self, x: u32) -> AtomSet {
        self.nbhd[x as usize]
    }

    pub fn check(&self, a: AtomSet) -> TopResult<()> {
        if a.is_subset(self.points()) {
            Ok(())
        } else {
            Err(TopError::NotASubset(a))
        }
    }

    pub fn is_open(&self, a: AtomSet) -> bool {
        a.atoms().all(|x| self.nbhd(x).is_subset(a))
    }

    pub fn is_closed(&self, a: AtomSet) -> bool {
        self.is_open(self.points().minus(a))
    }

    pub fn interior(&self, a: AtomSet) -> AtomSet {
        AtomSet::from_atoms(a.atoms().filter(|&x| self.nbhd(x).is_subset(a)))
    }

    pub fn closure(&self, a: AtomSet) -> AtomSet {
        AtomSet::from_atoms((0..self.n).filter(|&x| !self.nbhd(x).inter(a).is_empty()))
    }

    pub fn isolated(&self) -> AtomSet {
        AtomSet::from_atoms((0..self.n).filter(|&x| self.nbhd(x) == AtomSet::singleton(x)))
    }

    /// All open sets, for spaces of at most 20 points.
    pub fn opens(&self) -> Vec<AtomSet> {
        assert!(self.n <= 20, "too many subsets");
        (0..1u64 << self.n).map(AtomSet).filter(|&a| self.is_open(a)).collect()
    }

    /// `g` is open in the subspace `p`.
    pub fn is_relatively_open(&self, p: AtomSet, g: AtomSet) -> bool {
        g.is_subset(p) && g.atoms().all(|x| self.nbhd(x).inter(p).is_subset(g))
    }

    /// The subspace on `p`, points renumbered in increasing order.
    pub fn subspace(&self, p: AtomSet) -> FinSpace {
        let pts: Vec<u32> = p.atoms().collect();
        let index: BTreeMap<u32, u32> = pts.iter().enumerate().map(|(i, &x)| (x, i as u32)).collect();
        let nbhd = pts
            .iter()
            .map(|&x| AtomSet::from_atoms(self.nbhd(x).inter(p).atoms().map(|y| index[&y])))
            .collect();
        FinSpace { n: pts.len() as u32, nbhd }
    }

    /// The minimal neighbourhoods moved along an injective relabelling.
    fn relabel(&self, labels: &[u32]) -> Vec<AtomSet> {
        (0..self.n).map(|x| image(labels, self.nbhd(x))).collect()
    }
}

/// The open family generated by `sets`: closing `{∅, X} ∪ sets` under
/// binary unions and intersections until nothing changes.
pub fn brute_topology(n: u32, sets: &[AtomSet]) -> BTreeSet<AtomSet> {
    let mut fam: BTreeSet<AtomSet> = sets.iter().copied().collect();
    fam.insert(AtomSet::EMPTY);
    fam.insert(AtomSet::full(n));
    loop {
        let v: Vec<AtomSet> = fam.iter().copied().collect();
        let before = fam.len();
        for &a in &v {
            for &b in &v {
                fam.insert(a.union(b));
                fam.insert(a.inter(b));
            }
        }
        if fam.len() == before {
            return fam;
        }
    }
}

/// `f[a]`
fn image(f: &[u32], a: AtomSet) -> AtomSet {
    AtomSet::from_atoms(a.atoms().map(|x| f[x as usize]))
}

fn preimage(f: &[u32], a: AtomSet) -> AtomSet {
    AtomSet::from_atoms((0..f.len() as u32).filter(|&x| a.contains(f[x as usize])))
}

/// A zoom space with its quotient map and the blocks of the attached
/// spaces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Zoom {
    pub space: FinSpace,
    /// `q(z)`
    pub quotient: Vec<u32>,
    /// the block replacing each isolated point with an attached space
    pub blocks: BTreeMap<u32, AtomSet>,
}

impl Zoom {
    /// `V_U = q^{-1}(U)`
    pub fn v(&self, u: AtomSet) -> AtomSet {
        preimage(&self.quotient, u)
    }
}

/// `Z(Y, X)`: each key (an isolated point of `y`) is replaced by its space.
pub fn zoom_space(y: &FinSpace, xs: &BTreeMap<u32, FinSpace>) -> TopResult<Zoom> {
    let iso = y.isolated();
    for (&i, x) in xs {
        if i >= y.n || !iso.contains(i) {
            return Err(TopError::NotIsolated(i));
        }
        if x.is_empty() {
            return Err(TopError::EmptyFactor(i));
        }
    }
    let mut quotient = Vec::new();
    let mut blocks = BTreeMap::new();
    let mut sets = Vec::new();
    for p in 0..y.n {
        let start = quotient.len() as u32;
        match xs.get(&p) {
            Some(x) => {
                quotient.extend(std::iter::repeat(p).take(x.n as usize));
                let labels: Vec<u32> = (start..start + x.n).collect();
                sets.extend(x.relabel(&labels));
                blocks.insert(p, AtomSet::from_atoms(labels));
            }
            None => quotient.push(p),
        }
    }
    let n = quotient.len() as u32;
    if n > 64 {
        return Err(TopError::TooLarge(n));
    }
    for u in (0..y.n).map(|p| y.nbhd(p)) {
        sets.push(preimage(&quotient, u));
    }
    let z = Zoom { space: FinSpace::from_subbasis(n, &sets)?, quotient, blocks };
    check_zoom(y, xs, &z)?;
    Ok(z)
}

/// The postconditions: `q` continuous, open and onto; each block open and
/// homeomorphic to its space; `Y_s ≅ Y` for the first selectors.
fn check_zoom(y: &FinSpace, xs: &BTreeMap<u32, FinSpace>, z: &Zoom) -> TopResult<()> {
    let fail = |m: String| Err(TopError::Postcondition(m));
    let q = &z.quotient;
    if image(q, z.space.points()) != y.points() {
        return fail("quotient map is not onto".into());
    }
    for p in 0..y.n {
        if !z.space.is_open(preimage(q, y.nbhd(p))) {
            return fail(format!("preimage of U_{p} is not open"));
        }
    }
    for x in 0..z.space.n {
        if !y.is_open(image(q, z.space.nbhd(x))) {
            return fail(format!("image of U_{x} is not open"));
        }
    }
    for (i, b) in &z.blocks {
        // closed exactly when {i} is closed in Y, which Hausdorff Y guarantees
        if !z.space.is_open(*b) || z.space.is_closed(*b) != y.is_closed(AtomSet::singleton(*i)) {
            return fail(format!("block of {i} is not open, or closed only on one side"));
        }
        if z.space.subspace(*b) != xs[i] {
            return fail(format!("block of {i} has the wrong topology"));
        }
    }
    // selectors: choose one point per block (their closedness needs T1 spaces)
    let blocks: Vec<Vec<u32>> = z.blocks.values().map(|b| b.atoms().collect()).collect();
    let plain = AtomSet::from_atoms((0..z.space.n).filter(|x| !z.blocks.values().any(|b| b.contains(*x))));
    let mut choice = vec![0usize; blocks.len()];
    for _ in 0..64 {
        let sel = blocks.iter().zip(&choice).fold(plain, |a, (b, &c)| a.union(AtomSet::singleton(b[c])));
        let sub = z.space.subspace(sel);
        let pts: Vec<u32> = sel.atoms().collect();
        let f: Vec<u32> = pts.iter().map(|&x| q[x as usize]).collect();
        let relabeled: Vec<AtomSet> = (0..sub.n).map(|a| image(&f, sub.nbhd(a))).collect();
        if (0..sub.n).any(|a| relabeled[a as usize] != y.nbhd(f[a as usize])) {
            return fail(format!("selector set {sel} is not a copy of Y"));
        }
        // next choice
        let mut k = 0;
        loop {
            if k == choice.len() {
                return Ok(());
            }
            choice[k] += 1;
            if choice[k] < blocks[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
    Ok(())
}

/// `W^Q_P(G)`, the largest open `W ⊆ Q` with `W ∩ P = G`; it is
/// `{ x : U_x ∩ P ⊆ G }`.
pub fn w_operator(q: &FinSpace, p: AtomSet, g: AtomSet) -> TopResult<AtomSet> {
    q.check(p)?;
    if !q.is_relatively_open(p, g) {
        return Err(TopError::NotRelativelyOpen(g, p));
    }
    Ok(AtomSet::from_atoms((0..q.n).filter(|&x| q.nbhd(x).inter(p).is_subset(g))))
}

/// `W^Q_P(G)` as the union of all open `W` with the right trace.
pub fn brute_w(q: &FinSpace, p: AtomSet, g: AtomSet) -> AtomSet {
    q.opens().into_iter().filter(|w| w.inter(p) == g).fold(AtomSet::EMPTY, |a, w| a.union(w))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct WLawReport {
    pub checked: usize,
    pub failures: Vec<String>,
}

/// Monotonicity, intersections, `W(G) ⊆ Int cl G` for dense `P`, and
/// `W(P \ C) = Q \ C` for `C ⊆ P` closed in `Q` (finite sets are compact;
/// closedness is what the argument uses).
pub fn check_w_laws(q: &FinSpace, p: AtomSet) -> TopResult<WLawReport> {
    let gs: Vec<AtomSet> = q.opens().into_iter().map(|o| o.inter(p)).collect::<BTreeSet<_>>().into_iter().collect();
    let ws: Vec<AtomSet> = gs.iter().map(|&g| w_operator(q, p, g)).collect::<TopResult<_>>()?;
    let index: BTreeMap<AtomSet, usize> = gs.iter().enumerate().map(|(i, &g)| (g, i)).collect();
    let mut rep = WLawReport::default();
    let dense = q.closure(p) == q.points();
    for (i, &g) in gs.iter().enumerate() {
        let w = ws[i];
        rep.checked += 1;
        if !q.is_open(w) || w.inter(p) != g {
            rep.failures.push(format!("W({g}) = {w} is not an open set with trace {g}"));
        }
        if dense && !w.is_subset(q.interior(q.closure(g))) {
            rep.failures.push(format!("W({g}) = {w} is not inside Int cl {g}"));
        }
        for (j, &h) in gs.iter().enumerate() {
            if g.is_subset(h) && !w.is_subset(ws[j]) {
                rep.failures.push(format!("W({g}) ⊄ W({h})"));
            }
            let k = index[&g.inter(h)];
            if ws[k] != w.inter(ws[j]) {
                rep.failures.push(format!("W({g} ∩ {h}) ≠ W({g}) ∩ W({h})"));
            }
        }
    }
    if q.n <= 12 {
        for c in (0..1u64 << q.n).map(AtomSet).filter(|c| c.is_subset(p) && q.is_closed(*c)) {
            rep.checked += 1;
            if w_operator(q, p, p.minus(c))? != q.points().minus(c) {
                rep.failures.push(format!("W(P \\ {c}) ≠ Q \\ {c}"));
            }
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub a1: bool,
    pub a1_failures: Vec<AtomSet>,
    /// compactness is automatic for finite sets
    pub a2: bool,
    pub a3: bool,
    pub a4: bool,
    /// the cover by minimal neighbourhoods of `K` that defeats (A4)
    pub a4_witness: Option<Vec<AtomSet>>,
    pub note: String,
}

impl AxiomReport {
    pub fn pass(&self) -> bool {
        self.a1 && self.a2 && self.a3 && self.a4
    }
}

/// (A1)–(A4) for `family` in `x`. For a finite family (A4) always holds with
/// `A' = A`; `escape_bound` caps `|A'|` to give the check some teeth. Only
/// the cover `{U_x : x ∈ K}` needs checking: every cover of `K` has, for
/// each `x ∈ K`, a member containing `U_x`.
pub fn check_axioms_a(x: &FinSpace, family: &[AtomSet], escape_bound: Option<usize>) -> TopResult<AxiomReport> {
    for &a in family {
        x.check(a)?;
    }
    let a1_failures: Vec<AtomSet> = family.iter().copied().filter(|&a| !(x.is_open(a) && x.is_closed(a))).collect();
    let k = family.iter().fold(x.points(), |acc, a| acc.minus(*a));
    let cover: Vec<AtomSet> = k.atoms().map(|p| x.nbhd(p)).collect();
    let bound = escape_bound.unwrap_or(family.len()).min(family.len());
    let a4 = escape_ok(family, &cover, bound);
    Ok(AxiomReport {
        a1: a1_failures.is_empty(),
        a1_failures,
        a2: true,
        a3: true,
        a4,
        a4_witness: (!a4).then_some(cover),
        note: "finite sets are compact, so (A2) and (A3) hold automatically".into(),
    })
}

/// Some `A' ⊆ family` with `|A'| ≤ bound` such that every other `A` lies in
/// `U ∪ ⋃A'` for a member `U` of the cover.
fn escape_ok(family: &[AtomSet], cover: &[AtomSet], bound: usize) -> bool {
    let m = family.len();
    if m > 20 {
        return true;
    }
    (0..1u32 << m).filter(|s| s.count_ones() as usize <= bound).any(|s| {
        let chosen = (0..m).filter(|i| s >> i & 1 == 1).fold(AtomSet::EMPTY, |a, i| a.union(family[i]));
        (0..m).filter(|i| s >> i & 1 == 0).all(|i| cover.iter().any(|u| family[i].is_subset(u.union(chosen))))
    })
}

/// An extension `E(A)`: a space whose point `i` is the global point
/// `labels[i]`; labels below the size of `X` must be exactly `A`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extension {
    pub space: FinSpace,
    pub labels: Vec<u32>,
}

impl Extension {
    /// `E(A) = A` with the subspace topology.
    pub fn trivial(x: &FinSpace, a: AtomSet) -> Extension {
        Extension { space: x.subspace(a), labels: a.atoms().collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Amalgamation {
    pub space: FinSpace,
    /// `E(A)` as subsets of the amalgamation
    pub parts: Vec<AtomSet>,
    /// the basis: opens of each `E(A)` and the sets `V_U`
    pub basis: Vec<AtomSet>,
}

/// `Amg(X, E)`. New points are renumbered after those of `X` in the order
/// of their labels.
pub fn amalgamate(x: &FinSpace, family: &[AtomSet], exts: &[Extension]) -> TopResult<Amalgamation> {
    let pre = |m: String| Err(TopError::Precondition(m));
    if family.len() != exts.len() {
        return pre("one extension per member".into());
    }
    let ax = check_axioms_a(x, family, None)?;
    if !ax.a1 {
        return pre(format!("(A1) fails for {:?}", ax.a1_failures));
    }
    let mut fresh = BTreeSet::new();
    for (a, e) in family.iter().zip(exts) {
        if e.labels.len() != e.space.n as usize || e.labels.iter().collect::<BTreeSet<_>>().len() != e.labels.len() {
            return pre("labels must be distinct, one per point".into());
        }
        let old = AtomSet::from_atoms(e.labels.iter().copied().filter(|&l| l < x.n));
        if old != *a {
            return pre(format!("X ∩ E(A) = {old}, expected {a}"));
        }
        fresh.extend(e.labels.iter().copied().filter(|&l| l >= x.n));
    }
    for i in 0..exts.len() {
        for j in i + 1..exts.len() {
            if family[i] == family[j] {
                return pre(format!("member {} is repeated", family[i]));
            }
            let shared: BTreeSet<u32> = exts[i].labels.iter().copied().filter(|l| exts[j].labels.contains(l)).collect();
            let want: BTreeSet<u32> = family[i].inter(family[j]).atoms().collect();
            if shared != want {
                return pre(format!("E({}) ∩ E({}) ≠ {} ∩ {}", family[i], family[j], family[i], family[j]));
            }
        }
    }
    let total = x.n + fresh.len() as u32;
    if total > 64 {
        return Err(TopError::TooLarge(total));
    }
    let renum: BTreeMap<u32, u32> = fresh.iter().enumerate().map(|(i, &l)| (l, x.n + i as u32)).collect();
    let glob = |l: u32| if l < x.n { l } else { renum[&l] };
    let mut parts = Vec::new();
    let mut ext_maps = Vec::new();
    for (a, e) in family.iter().zip(exts) {
        let f: Vec<u32> = e.labels.iter().map(|&l| glob(l)).collect();
        let local_a = preimage(&f, *a);
        if e.space.closure(local_a) != e.space.points() {
            return pre(format!("{a} is not dense in its extension"));
        }
        let sub = e.space.subspace(local_a);
        if sub != x.subspace(*a) {
            return pre(format!("{a} carries a different topology in its extension"));
        }
        // compact sets are closed in Hausdorff spaces; here it must be asked
        for b in family.iter().filter(|b| *b != a) {
            if !e.space.is_closed(preimage(&f, a.inter(*b))) {
                return pre(format!("{} ∩ {b} is not closed in the extension of {a}", a));
            }
        }
        parts.push(image(&f, e.space.points()));
        ext_maps.push((f, local_a));
    }
    let mut basis = BTreeSet::new();
    for (e, (f, _)) in exts.iter().zip(&ext_maps) {
        for p in 0..e.space.n {
            basis.insert(image(f, e.space.nbhd(p)));
        }
    }
    let v_u = |u: AtomSet| -> TopResult<AtomSet> {
        let mut v = u;
        for (e, (f, local_a)) in exts.iter().zip(&ext_maps) {
            let trace = preimage(f, u).inter(*local_a);
            v = v.union(image(f, w_operator(&e.space, *local_a, trace)?));
        }
        Ok(v)
    };
    let x_opens: Vec<AtomSet> = if x.n <= 16 { x.opens() } else { (0..x.n).map(|p| x.nbhd(p)).collect() };
    let mut vs = BTreeMap::new();
    for &u in &x_opens {
        let v = v_u(u)?;
        vs.insert(u, v);
        basis.insert(v);
    }
    let basis: Vec<AtomSet> = basis.into_iter().collect();
    let space = FinSpace::from_subbasis(total, &basis)?;
    let amg = Amalgamation { space, parts, basis };
    check_amalgamation(x, &amg, &vs)?;
    Ok(amg)
}

/// Basis closed under intersections (up to open sets of a single `E(A)`,
/// which are unions of basis sets), `V_{U∩U'} = V_U ∩ V_{U'}`, each `E(A)`
/// clopen, and `X` and `E(A)` keep their topologies.
fn check_amalgamation(x: &FinSpace, amg: &Amalgamation, vs: &BTreeMap<AtomSet, AtomSet>) -> TopResult<()> {
    let fail = |m: String| Err(TopError::Postcondition(m));
    let s = &amg.space;
    for (i, &b) in amg.basis.iter().enumerate() {
        for &c in &amg.basis[i..] {
            let d = b.inter(c);
            let in_part = amg.parts.iter().any(|p| d.is_subset(*p) && s.is_open(d));
            if !(d.is_empty() || amg.basis.contains(&d) || in_part) {
                return fail(format!("basis sets {b} and {c} meet in {d}"));
            }
        }
    }
    for (&u, &v) in vs {
        for (&u2, &v2) in vs {
            if vs.get(&u.inter(u2)) != Some(&v.inter(v2)) {
                return fail(format!("V fails to commute with ∩ at {u}, {u2}"));
            }
        }
        if v.inter(x.points()) != u {
            return fail(format!("V_{u} ∩ X ≠ {u}"));
        }
    }
    for &p in &amg.parts {
        if !s.is_open(p) || !s.is_closed(p) {
            return fail(format!("E(A) = {p} is not clopen"));
        }
    }
    if s.subspace(x.points()) != *x {
        return fail("X changed its topology".into());
    }
    let ax = check_axioms_a(s, &amg.parts, None)?;
    if !ax.pass() {
        return fail("(A1)-(A4) fail for the extensions".into());
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HandleReport {
    pub gamma: Ordinal,
    pub handles: Vec<Seq>,
    /// every truncated element of `B` lies above exactly one handle and
    /// distinct handles are incomparable
    pub partition: bool,
    /// every sampled `h₀` with `A(h₀)` below γ extends a handle
    pub prefix_property: bool,
}

/// `H_{<γ}(A)` on the elements of the base reachable with fork indices
/// below `width`: `{ s|n_s }` with `n_s` least such that `A(s|n_s)` has
/// class below γ.
pub fn gamma_handles(a: &InfBroomExpr, gamma: &Ordinal, width: u64) -> TopResult<HandleReport> {
    if *gamma < Ordinal::nat(2) {
        return Err(TopError::Precondition("γ must be at least 2".into()));
    }
    a.validate()?;
    let elems = broom::truncation(&a.base, width)?;
    let below = |h: &Seq| -> TopResult<bool> {
        Ok(match broom::cone(&a.base, h)? {
            Some(c) => broom::classify(&c)? < *gamma,
            None => false,
        })
    };
    let mut handles = BTreeSet::new();
    for s in &elems {
        for n in 0..=s.len() {
            let h = s.prefix(n);
            if below(&h)? {
                handles.insert(h);
                break;
            }
        }
    }
    let hs: Vec<Seq> = handles.into_iter().collect();
    let incomparable = hs.iter().enumerate().all(|(i, g)| hs[i + 1..].iter().all(|h| !g.comparable(h)));
    let covered = elems.iter().all(|s| hs.iter().filter(|h| h.is_prefix_of(s)).count() == 1);
    let mut prefix_property = true;
    let nodes: BTreeSet<Seq> = elems.iter().flat_map(|s| (0..=s.len()).map(move |k| s.prefix(k))).collect();
    for h0 in &nodes {
        if below(h0)? && !hs.iter().any(|h| h.is_prefix_of(h0)) {
            prefix_property = false;
        }
    }
    Ok(HandleReport { gamma: gamma.clone(), handles: hs, partition: incomparable && covered, prefix_property })
}

/// A random space on `n` points from a few random generating sets.
pub fn random_space<R: Rng>(n: u32, rng: &mut R) -> FinSpace {
    let k = rng.gen_range(0..=n + 1);
    let sets: Vec<AtomSet> = (0..k).map(|_| AtomSet(rng.gen::<u64>() & AtomSet::full(n).0)).collect();
    FinSpace::from_subbasis(n, &sets).expect("subsets of the points")
}

/// Every topology on `n ≤ 5` points, as the preorders on `n` points.
pub fn all_spaces(n: u32) -> Vec<FinSpace> {
    assert!(n <= 5, "too many topologies");
    let pairs: Vec<(u32, u32)> = (0..n).flat_map(|x| (0..n).filter(move |&y| y != x).map(move |y| (x, y))).collect();
    let mut out = Vec::new();
    for mask in 0..1u64 << pairs.len() {
        let mut nbhd: Vec<AtomSet> = (0..n).map(AtomSet::singleton).collect();
        for (i, &(x, y)) in pairs.iter().enumerate() {
            if mask >> i & 1 == 1 {
                nbhd[x as usize] = nbhd[x as usize].union(AtomSet::singleton(y));
            }
        }
        let transitive = (0..n as usize).all(|x| nbhd[x].atoms().all(|y| nbhd[y as usize].is_subset(nbhd[x])));
        if transitive {
            out.push(FinSpace { n, nbhd });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[u32]) -> AtomSet {
        AtomSet::from_atoms(v.iter().copied())
    }

    #[test]
    fn topology_counts() {
        let counts: Vec<usize> = (0..=4).map(|n| all_spaces(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 4, 29, 355]);
    }

    #[test]
    fn degenerate_zoom() {
        let y = FinSpace::discrete(2);
        let xs = BTreeMap::from([(0, FinSpace::discrete(1)), (1, FinSpace::discrete(1))]);
        let z = zoom_space(&y, &xs).unwrap();
        assert_eq!(z.space, y);
    }

    #[test]
    fn sierpinski_zoom() {
        // 0 isolated, 1 has only the whole space as neighbourhood
        let y = FinSpace::from_subbasis(2, &[set(&[0])]).unwrap();
        let xs = BTreeMap::from([(0, FinSpace::discrete(2))]);
        let z = zoom_space(&y, &xs).unwrap();
        assert_eq!(z.space.len(), 3);
        assert_eq!(z.space.nbhd(0), set(&[0]));
        assert_eq!(z.space.nbhd(1), set(&[1]));
        assert_eq!(z.space.nbhd(2), set(&[0, 1, 2]));
        let bad = BTreeMap::from([(1, FinSpace::discrete(2))]);
        assert_eq!(zoom_space(&y, &bad), Err(TopError::NotIsolated(1)));
        let empty = BTreeMap::from([(0, FinSpace::discrete(0))]);
        assert_eq!(zoom_space(&y, &empty), Err(TopError::EmptyFactor(0)));
    }

    #[test]
    fn w_examples() {
        let q = FinSpace::from_subbasis(3, &[set(&[0]), set(&[0, 1])]).unwrap();
        let p = set(&[0]);
        assert_eq!(q.closure(p), q.points());
        assert_eq!(w_operator(&q, p, p).unwrap(), q.points());
        assert_eq!(w_operator(&q, p, AtomSet::EMPTY).unwrap(), AtomSet::EMPTY);
        assert!(check_w_laws(&q, p).unwrap().failures.is_empty());
        let q2 = FinSpace::discrete(3);
        assert_eq!(w_operator(&q2, set(&[0, 1]), AtomSet::EMPTY).unwrap(), set(&[2]));
        let q3 = FinSpace::from_subbasis(2, &[set(&[0])]).unwrap();
        assert!(w_operator(&q3, set(&[0, 1]), set(&[1])).is_err());
    }

    #[test]
    fn axioms() {
        let x = FinSpace::from_subbasis(3, &[set(&[0]), set(&[1])]).unwrap();
        // {0} and {1} are open; {2} is closed with neighbourhood everything
        let rep = check_axioms_a(&x, &[set(&[0]), set(&[1])], None).unwrap();
        assert!(!rep.a1);
        let x = FinSpace::discrete(3);
        let rep = check_axioms_a(&x, &[set(&[0]), set(&[1])], None).unwrap();
        assert!(rep.pass());
        let rep = check_axioms_a(&x, &[set(&[0]), set(&[1])], Some(0)).unwrap();
        assert!(!rep.a4);
        assert_eq!(rep.a4_witness, Some(vec![set(&[2])]));
    }

    #[test]
    fn amalgamation_examples() {
        let x = FinSpace::discrete(3);
        let fam = [set(&[0]), set(&[1])];
        let exts: Vec<Extension> = fam.iter().map(|&a| Extension::trivial(&x, a)).collect();
        assert_eq!(amalgamate(&x, &fam, &exts).unwrap().space, x);
        // add a point 3 next to 0 whose only neighbourhood is {0, 3}
        let e0 = Extension { space: FinSpace::from_subbasis(2, &[set(&[0])]).unwrap(), labels: vec![0, 7] };
        let amg = amalgamate(&x, &fam, &[e0.clone(), exts[1].clone()]).unwrap();
        assert_eq!(amg.space.len(), 4);
        assert_eq!(amg.parts[0], set(&[0, 3]));
        let e1 = Extension { space: FinSpace::from_subbasis(2, &[set(&[0])]).unwrap(), labels: vec![1, 7] };
        assert!(matches!(amalgamate(&x, &fam, &[e0, e1]), Err(TopError::Precondition(_))));
    }
}
