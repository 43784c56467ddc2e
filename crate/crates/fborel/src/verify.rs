//! Seeded property suites. Each suite draws its instances from a ChaCha
//! generator, compares against an oracle and keeps the first few
//! counterexamples as JSON.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::broom::{self, random_broom, random_extension};
use crate::derive::{self, Kind, Rank};
use crate::fintop::{self, Extension, FinSpace};
use crate::leafscheme::{compile_simple, eval_scheme, shrink_scheme, LeafScheme, SetExpr};
use crate::seqtree::{canonical_tree, cl_tr, FiniteTree, Seq, TreeExpr};
use crate::sets::{AtomSet, Universe};
use crate::suslin::{self, SuslinScheme};
use crate::Ordinal;

/// Counterexamples kept per report.
const KEEP: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    CanonicalRanks,
    RtOracle,
    CompileRegular,
    Reindex,
    BroomRank,
    BroomTilde,
    CompileSimple,
    Fintop,
    Antitone,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::CanonicalRanks,
        Suite::RtOracle,
        Suite::CompileRegular,
        Suite::Reindex,
        Suite::BroomRank,
        Suite::BroomTilde,
        Suite::CompileSimple,
        Suite::Fintop,
        Suite::Antitone,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::CanonicalRanks => "canonical-ranks",
            Suite::RtOracle => "rt-oracle",
            Suite::CompileRegular => "compile-regular",
            Suite::Reindex => "reindex",
            Suite::BroomRank => "broom-rank",
            Suite::BroomTilde => "broom-tilde",
            Suite::CompileSimple => "compile-simple",
            Suite::Fintop => "fintop",
            Suite::Antitone => "antitone",
        }
    }

    /// The case count used when none is given.
    pub fn default_cases(self) -> usize {
        match self {
            Suite::CanonicalRanks => 1,
            Suite::RtOracle => 1000,
            Suite::CompileRegular => 200,
            Suite::Reindex => 1000,
            Suite::BroomRank => 100,
            Suite::BroomTilde => 20,
            Suite::CompileSimple => 500,
            Suite::Fintop => 200,
            Suite::Antitone => 500,
        }
    }

    pub fn run(self, seed: u64, cases: usize) -> SuiteReport {
        let mut c = Checker::new(self, seed, cases);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            Suite::CanonicalRanks => canonical_ranks(&mut c),
            Suite::RtOracle => rt_oracle(&mut c, &mut rng),
            Suite::CompileRegular => compile_regular(&mut c, &mut rng),
            Suite::Reindex => reindex(&mut c, &mut rng),
            Suite::BroomRank => broom_rank(&mut c, &mut rng),
            Suite::BroomTilde => broom_tilde(&mut c, &mut rng),
            Suite::CompileSimple => compile_simple_suite(&mut c, &mut rng),
            Suite::Fintop => fintop_suite(&mut c, &mut rng),
            Suite::Antitone => antitone(&mut c, &mut rng),
        }
        c.finish()
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Suite::ALL.iter().map(|x| x.name()).collect();
            format!("unknown suite {s}; expected one of {}", names.join(", "))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub cases: usize,
    pub checks: usize,
    pub failures: usize,
    pub counterexamples: Vec<Value>,
    pub pass: bool,
}

struct Checker {
    report: SuiteReport,
}

impl Checker {
    fn new(suite: Suite, seed: u64, cases: usize) -> Self {
        Checker {
            report: SuiteReport {
                suite: suite.name().into(),
                seed,
                cases,
                checks: 0,
                failures: 0,
                counterexamples: Vec::new(),
                pass: true,
            },
        }
    }

    fn check(&mut self, ok: bool, witness: impl FnOnce() -> Value) {
        self.report.checks += 1;
        if !ok {
            self.report.failures += 1;
            if self.report.counterexamples.len() < KEEP {
                self.report.counterexamples.push(witness());
            }
        }
    }

    /// An error from the library counts as a failure.
    fn ok<T, E: fmt::Display>(&mut self, r: Result<T, E>, witness: impl FnOnce() -> Value) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                let mut w = witness();
                w["error"] = json!(e.to_string());
                self.check(false, || w);
                None
            }
        }
    }

    fn finish(mut self) -> SuiteReport {
        self.report.pass = self.report.failures == 0;
        self.report
    }
}

/// The ordinals whose canonical trees are checked.
pub fn canonical_rank_targets() -> Vec<Ordinal> {
    ["0", "1", "2", "3", "5", "w", "w+1", "w*2", "w^2", "w^2+w+3"].iter().map(|s| s.parse().expect("literal")).collect()
}

fn canonical_ranks(c: &mut Checker) {
    for a in canonical_rank_targets() {
        let t = canonical_tree(&a);
        for kind in [Kind::L, Kind::I] {
            let w = || json!({"alpha": a, "kind": format!("{kind:?}")});
            if let Some(r) = c.ok(derive::rank(kind, &t), w) {
                c.check(r == Rank::Ord(a.clone()), || json!({"alpha": a, "kind": format!("{kind:?}"), "got": r}));
            }
        }
        if let Some(r) = c.ok(derive::leaf_rank_formula(&t), || json!({"alpha": a, "formula": true})) {
            c.check(r == Rank::Ord(a.clone()), || json!({"alpha": a, "formula": r}));
        }
    }
}

pub fn random_universe<R: Rng>(rng: &mut R, max: usize) -> Universe {
    Universe::new(rng.gen_range(1..=max)).expect("size in range")
}

pub fn random_set<R: Rng>(rng: &mut R, u: Universe) -> AtomSet {
    AtomSet(rng.gen::<u64>() & u.full().0)
}

/// A tree grown to between half of `max_nodes` and `max_nodes` nodes by adding children
/// (entries up to `max_entry`) below random nodes shorter than `max_len`.
pub fn random_tree<R: Rng>(rng: &mut R, max_len: usize, max_entry: u64, max_nodes: usize) -> FiniteTree {
    let max_nodes = max_nodes.max(1);
    let target = rng.gen_range(max_nodes.div_ceil(2)..=max_nodes);
    let mut nodes = vec![Seq::empty()];
    for _ in 0..8 * target {
        if nodes.len() >= target {
            break;
        }
        let p = &nodes[rng.gen_range(0..nodes.len())];
        if p.len() >= max_len {
            continue;
        }
        let s = p.child(rng.gen_range(0..=max_entry));
        if !nodes.contains(&s) {
            nodes.push(s);
        }
    }
    cl_tr(nodes)
}

/// A monotone scheme on a random finite domain.
pub fn random_scheme<R: Rng>(rng: &mut R, u: Universe, depth: usize, max_entry: u64) -> SuslinScheme {
    let dom = random_tree(rng, depth, max_entry, 12);
    let mut values = BTreeMap::new();
    let mut nodes: Vec<Seq> = dom.nodes().iter().cloned().collect();
    nodes.sort_by_key(|s| s.len());
    for s in nodes {
        // dense near the root, sparse below, so R_T sits strictly between A(C) and C(∅)
        let own = if s.len() <= 1 { random_set(rng, u).union(random_set(rng, u)) } else { random_set(rng, u) };
        let v = match s.parent() {
            Some(p) => own.inter(values[&p]),
            None => own,
        };
        values.insert(s, v);
    }
    SuslinScheme::new(u, values).expect("monotone by construction")
}

/// A random expression with lists of 2 to `width` members, unions and
/// intersections alternating, so flattening leaves it unchanged.
pub fn random_expr<R: Rng>(rng: &mut R, u: Universe, depth: u32, width: usize) -> SetExpr {
    let top = rng.gen_bool(0.5);
    expr_below(rng, u, depth, width, top)
}

fn expr_below<R: Rng>(rng: &mut R, u: Universe, depth: u32, width: usize, union: bool) -> SetExpr {
    if depth == 0 || width < 2 || rng.gen_bool(0.25) {
        return SetExpr::base(random_set(rng, u));
    }
    let of: Vec<SetExpr> = (0..rng.gen_range(2..=width)).map(|_| expr_below(rng, u, depth - 1, width, !union)).collect();
    if union {
        SetExpr::union(of)
    } else {
        SetExpr::inter(of)
    }
}

/// A random expression of class at most `alpha`.
pub fn random_expr_below<R: Rng>(rng: &mut R, u: Universe, alpha: u64, width: usize) -> SetExpr {
    loop {
        let e = random_expr(rng, u, alpha as u32 + 1, width);
        if e.class(u) <= alpha {
            return e;
        }
    }
}

fn rt_oracle<R: Rng>(c: &mut Checker, rng: &mut R) {
    for _ in 0..c.report.cases {
        let u = random_universe(rng, 8);
        let sc = random_scheme(rng, u, 3, 2);
        let t = random_tree(rng, 3, 3, 6);
        let h = if rng.gen_bool(0.7) { Seq::empty() } else { Seq(vec![rng.gen_range(0..3)]) };
        let w = || json!({"scheme": sc, "tree": t, "h": h});
        let Some(fast) = c.ok(suslin::rt_set(&sc, &TreeExpr::explicit(t.clone()), &h), w) else { continue };
        let brute = suslin::brute_rt_set(&sc, &t, &h);
        c.check(fast == brute, || json!({"scheme": sc, "tree": t, "h": h, "recursive": fast, "brute": brute}));
        let x = rng.gen_range(0..u.size as u32);
        let m = suslin::rt_member(&sc, &TreeExpr::explicit(t.clone()), x, &h);
        c.check(m.as_ref().ok() == Some(&brute.contains(x)), || json!({"scheme": sc, "tree": t, "h": h, "point": x}));
    }
}

fn compile_regular<R: Rng>(c: &mut Checker, rng: &mut R) {
    for a in 0..=4u64 {
        for _ in 0..c.report.cases {
            let u = random_universe(rng, 12);
            let e = random_expr_below(rng, u, a, 3);
            let alpha = Ordinal::nat(a);
            let w = || json!({"expr": e, "alpha": a, "universe": u.size});
            let Some(sc) = c.ok(suslin::compile_regular(&e, &alpha, 3, u), w) else { continue };
            let got = c.ok(suslin::r_alpha(&sc, &alpha), || json!({"expr": e, "alpha": a, "universe": u.size}));
            let want = e.eval(u);
            c.check(got == Some(want), || json!({"expr": e, "alpha": a, "universe": u.size, "got": got, "want": want}));
        }
    }
}

fn is_prefix_rows(a: &[Seq], b: &[Seq]) -> bool {
    a.len() <= b.len() && a.iter().zip(b).all(|(x, y)| x == y)
}

fn random_rows<R: Rng>(rng: &mut R, m: usize) -> Vec<Seq> {
    (0..m).map(|j| Seq((0..j + 2).map(|_| rng.gen_range(0..=5)).collect())).collect()
}

fn reindex<R: Rng>(c: &mut Checker, rng: &mut R) {
    for _ in 0..c.report.cases {
        let m = rng.gen_range(0..=6);
        let s = random_rows(rng, m);
        let Some(dx) = c.ok(suslin::delta_xi(&s), || json!({"rows": s})) else { continue };
        // (a)
        let lens_ok = (0..=m).all(|k| dx.deltas[k].len() + dx.xis[k].len() == m) && dx.rho.len() == m;
        c.check(lens_ok, || json!({"law": "a", "rows": s}));
        // (b) both directions
        c.check(suslin::rho_inv(&dx.rho) == s, || json!({"law": "b", "rows": s}));
        let u = Seq((0..rng.gen_range(0..=6)).map(|_| rng.gen_range(0..200)).collect());
        let back = suslin::rho(&suslin::rho_inv(&u));
        c.check(back.as_ref() == Ok(&u), || json!({"law": "b", "code": u}));
        // (c) and (d): extend by more rows
        let more = m + rng.gen_range(0..=2);
        let extra = random_rows(rng, more);
        let t: Vec<Seq> = s.iter().cloned().chain(extra[m..].iter().cloned()).collect();
        let Some(rt) = c.ok(suslin::rho(&t), || json!({"rows": t})) else { continue };
        c.check(dx.rho.is_prefix_of(&rt), || json!({"law": "c", "rows": s, "longer": t}));
        let d_ok = (0..=m).all(|k| suslin::delta(&t, k) == dx.deltas[k] && dx.xis[k].is_prefix_of(&suslin::xi(&t, k)));
        c.check(d_ok, || json!({"law": "d", "rows": s, "longer": t}));
        // (c) backwards, on an unrelated pair
        let k = rng.gen_range(0..=6);
        let other = random_rows(rng, k);
        if let Ok(ro) = suslin::rho(&other) {
            let same = dx.rho.is_prefix_of(&ro) == is_prefix_rows(&s, &other);
            c.check(same, || json!({"law": "c", "rows": s, "other": other}));
        }
    }
}

pub fn broom_ranks() -> Vec<Ordinal> {
    ["0", "1", "2", "3", "4", "5", "6", "w", "w+2"].iter().map(|s| s.parse().expect("literal")).collect()
}

fn broom_rank<R: Rng>(c: &mut Checker, rng: &mut R) {
    let ranks = broom_ranks();
    for i in 0..c.report.cases {
        let a = &ranks[i % ranks.len()];
        let b = random_broom(a, rng);
        let got = broom::classify(&b);
        c.check(got.as_ref() == Ok(a), || json!({"broom": b, "alpha": a}));
        if let Some(r) = c.ok(broom::rank_lemma_check(&b), || json!({"broom": b})) {
            c.check(r.pass, || json!({"broom": b, "report": r}));
        }
        let ext = random_extension(&b, rng);
        if let Some(r) = c.ok(broom::rank_lemma_check_inf(&ext), || json!({"extension": ext})) {
            c.check(r.pass, || json!({"extension": ext, "report": r}));
        }
        let d = ext.closure_tree().and_then(|t| derive::derive(Kind::Iie, &t).map_err(Into::into));
        let base = broom::closure_tree(&b);
        let diie = broom::broom_diie(&ext);
        let same = match (d, base, diie) {
            (Ok(d), Ok(base), Ok(diie)) => {
                derive::tree_eq(&d, &base).unwrap_or(false) && derive::tree_eq(&d, &diie).unwrap_or(false)
            }
            _ => false,
        };
        c.check(same, || json!({"law": "D_iie(A) = cl(B)", "extension": ext}));
    }
}

fn broom_tilde<R: Rng>(c: &mut Checker, rng: &mut R) {
    let ranks: Vec<Ordinal> = ["0", "1", "2", "3", "w"].iter().map(|s| s.parse().expect("literal")).collect();
    for _ in 0..c.report.cases {
        for a in &ranks {
            let b = random_broom(a, rng);
            let ext = random_extension(&b, rng);
            let w = || json!({"extension": ext});
            let Some(t) = c.ok(ext.tilde(), w) else { continue };
            let got = broom::classify(&t);
            let want = broom::classify(&b).map(|r| Ordinal::nat(2).add(&r));
            c.check(got.is_ok() && got == want, || json!({"extension": ext, "tilde": t}));
        }
    }
}

fn compile_simple_suite<R: Rng>(c: &mut Checker, rng: &mut R) {
    for _ in 0..c.report.cases {
        let u = random_universe(rng, 12);
        let width = [2u64, 3, 5][rng.gen_range(0..3)];
        let e = random_expr(rng, u, 4, width as usize);
        let class = e.class(u);
        let alpha = Ordinal::nat(class + rng.gen_range(0..=2));
        let w = || json!({"expr": e, "alpha": alpha, "width": width, "universe": u.size});
        let Some(h) = c.ok(compile_simple(&e, &alpha, width, u), w) else { continue };
        let x = e.eval(u);
        c.check(eval_scheme(&h) == x, || json!({"expr": e, "alpha": alpha, "width": width, "universe": u.size}));
        let shrunk: BTreeMap<Seq, AtomSet> =
            h.leaf_values().iter().map(|(s, v)| (s.clone(), v.inter(x).union(random_set(rng, u).inter(*v)))).collect();
        let h2 = LeafScheme::new(u, h.tree().clone(), shrunk).expect("same leaves");
        let holds = shrink_scheme(&h, x, &h2).unwrap_or(false);
        c.check(holds && eval_scheme(&h2) == x, || json!({"law": "shrink", "scheme": h, "shrunk": h2, "x": x}));
    }
}

/// A family of nonempty clopen sets of `x` and extensions satisfying the
/// amalgamation preconditions: fresh points see nonempty open parts of
/// their member avoiding all other members.
pub fn random_amalgamation_input<R: Rng>(x: &FinSpace, rng: &mut R) -> (Vec<AtomSet>, Vec<Extension>) {
    let family: Vec<AtomSet> =
        x.opens().into_iter().filter(|&a| !a.is_empty() && x.is_closed(a) && rng.gen_bool(0.5)).collect();
    let mut next = 1000;
    let mut exts = Vec::new();
    for &a in &family {
        let others = family.iter().filter(|&&b| b != a).fold(AtomSet::EMPTY, |acc, b| acc.union(*b));
        let sub = x.subspace(a);
        let mut labels: Vec<u32> = a.atoms().collect();
        let k = labels.len() as u32;
        let shared = AtomSet::from_atoms((0..k).filter(|&i| others.contains(labels[i as usize])));
        let opens: Vec<AtomSet> = sub.opens().into_iter().filter(|o| !o.is_empty() && o.inter(shared).is_empty()).collect();
        let mut gens: Vec<AtomSet> = (0..k).map(|p| sub.nbhd(p)).collect();
        if !opens.is_empty() {
            for i in 0..rng.gen_range(0..3u32) {
                gens.push(opens[rng.gen_range(0..opens.len())].union(AtomSet::singleton(k + i)));
                labels.push(next);
                next += 1;
            }
        }
        let space = FinSpace::from_subbasis(labels.len() as u32, &gens).expect("small");
        exts.push(Extension { space, labels });
    }
    (family, exts)
}

fn fintop_space<R: Rng>(c: &mut Checker, rng: &mut R, x: &FinSpace) {
    let n = x.len();
    // W laws over every subspace
    for p in (0..1u64 << n).map(AtomSet) {
        if let Some(r) = c.ok(fintop::check_w_laws(x, p), || json!({"space": x, "p": p})) {
            c.check(r.failures.is_empty(), || json!({"space": x, "p": p, "failures": r.failures}));
        }
    }
    // zoom at a random choice of isolated points
    let mut xs = BTreeMap::new();
    for i in x.isolated().atoms() {
        if rng.gen_bool(0.6) {
            let m = rng.gen_range(1..=3);
            xs.insert(i, fintop::random_space(m, rng));
        }
    }
    if let Some(z) = c.ok(fintop::zoom_space(x, &xs), || json!({"y": x, "xs": xs})) {
        let opens = x.opens();
        let mut ok = z.v(AtomSet::EMPTY).is_empty() && z.v(x.points()) == z.space.points();
        for &u in &opens {
            ok &= z.space.is_open(z.v(u));
            for &u2 in &opens {
                ok &= z.v(u.inter(u2)) == z.v(u).inter(z.v(u2)) && z.v(u.union(u2)) == z.v(u).union(z.v(u2));
            }
        }
        c.check(ok, || json!({"law": "V_U algebra", "y": x, "xs": xs}));
    }
    // amalgamation, with the trivial extensions and with random ones
    let (family, exts) = random_amalgamation_input(x, rng);
    let trivial: Vec<Extension> = family.iter().map(|&a| Extension::trivial(x, a)).collect();
    if let Some(amg) = c.ok(fintop::amalgamate(x, &family, &trivial), || json!({"x": x, "family": family})) {
        c.check(amg.space == *x, || json!({"law": "Amg(X, A) = X", "x": x, "family": family}));
    }
    c.ok(fintop::amalgamate(x, &family, &exts), || json!({"x": x, "family": family, "extensions": exts}));
}

fn fintop_suite<R: Rng>(c: &mut Checker, rng: &mut R) {
    for n in 0..=5 {
        for x in fintop::all_spaces(n) {
            fintop_space(c, rng, &x);
        }
    }
    for _ in 0..c.report.cases {
        let n = rng.gen_range(6..=8);
        let x = fintop::random_space(n, rng);
        fintop_space(c, rng, &x);
    }
}

fn antitone<R: Rng>(c: &mut Checker, rng: &mut R) {
    for _ in 0..c.report.cases {
        let u = random_universe(rng, 8);
        let sc = random_scheme(rng, u, 3, 2);
        let a = suslin::suslin_operation(&sc);
        let rs: Vec<Option<AtomSet>> = (0..=4).map(|k| suslin::r_alpha(&sc, &Ordinal::nat(k)).ok()).collect();
        let ok = rs.iter().all(|r| r.is_some_and(|r| a.is_subset(r)))
            && rs.windows(2).all(|w| matches!((w[0], w[1]), (Some(x), Some(y)) if y.is_subset(x)));
        c.check(ok, || json!({"scheme": sc, "r": rs, "suslin": a}));
    }
}
