use std::collections::BTreeMap;

use fborel::leafscheme::SetExpr;
use fborel::seqtree::cl_tr;
use fborel::sets::{AtomSet, Universe};
use fborel::suslin::*;
use fborel::{FiniteTree, Ordinal, Seq, TreeExpr};
use proptest::prelude::*;

fn seqs(max_len: usize, max_entry: u64) -> impl Strategy<Value = Vec<Seq>> {
    prop::collection::vec(prop::collection::vec(0..=max_entry, 1..=max_len).prop_map(Seq), 0..4)
}

fn tree(max_len: usize, max_entry: u64) -> impl Strategy<Value = FiniteTree> {
    seqs(max_len, max_entry).prop_map(|mut v| { v.push(Seq::empty()); cl_tr(v) }).prop_filter("small", |t| t.len() <= 6)
}

fn scheme() -> impl Strategy<Value = SuslinScheme> {
    (tree(3, 2), prop::collection::vec(0u64..16, 8)).prop_map(|(dom, masks)| {
        let u = Universe::new(4).unwrap();
        let mut values = BTreeMap::new();
        let mut nodes: Vec<Seq> = dom.nodes().iter().cloned().collect();
        nodes.sort_by_key(|s| s.len());
        for (i, s) in nodes.into_iter().enumerate() {
            let own = AtomSet(masks[i % masks.len()]);
            let v = match s.parent() {
                Some(p) => own.inter(values[&p]),
                None => own,
            };
            values.insert(s, v);
        }
        SuslinScheme::new(u, values).unwrap()
    })
}

fn expr(depth: u32) -> BoxedStrategy<SetExpr> {
    let leaf = (0u64..16).prop_map(|m| SetExpr::base(AtomSet(m))).boxed();
    leaf.prop_recursive(depth, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..=3).prop_map(SetExpr::union),
            prop::collection::vec(inner, 1..=3).prop_map(SetExpr::inter),
        ]
    })
    .boxed()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn recursive_rt_matches_brute_force(c in scheme(), t in tree(3, 3), h in prop::collection::vec(0u64..3, 0..2)) {
        let h = Seq(h);
        let fast = rt_set(&c, &TreeExpr::explicit(t.clone()), &h).unwrap();
        prop_assert_eq!(fast, brute_rt_set(&c, &t, &h));
    }

    #[test]
    fn rt_sets_lie_between_a_and_root(c in scheme(), a in 0u64..6) {
        let r = r_alpha(&c, &Ordinal::nat(a)).unwrap();
        prop_assert!(r.is_subset(c.value(&Seq::empty())));
        prop_assert!(suslin_operation(&c).is_subset(r));
    }

    #[test]
    fn admissible_maps_are_admissible(t in tree(2, 2), b in 1u64..3) {
        for m in enumerate_admissible(&t, b) {
            prop_assert!(m.is_admissible());
        }
    }

    #[test]
    fn pair_refine_refines(c in scheme(), r in scheme()) {
        let p = pair_refine(&c, &r).unwrap();
        for (u, v) in p.values() {
            let (s, t) = unpair_seq(u);
            prop_assert!(v.is_subset(c.value(&s)) && v.is_subset(r.value(&t)));
        }
        prop_assert_eq!(suslin_operation(&p), suslin_operation(&c).inter(suslin_operation(&r)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn compiled_schemes_represent(e in expr(3), extra in 0u64..2) {
        let u = Universe::new(4).unwrap();
        let class = e.flatten(u).class(u);
        prop_assume!(class <= 4);
        let a = (class + extra).min(4);
        let c = compile_regular(&e, &Ordinal::nat(a), 3, u).unwrap();
        prop_assert_eq!(r_alpha(&c, &Ordinal::nat(a)).unwrap(), e.eval(u));
    }
}

#[test]
fn rows_round_trip() {
    let s = vec![Seq(vec![3, 0]), Seq(vec![1, 4, 2]), Seq(vec![0, 0, 5, 1])];
    let u = rho(&s).unwrap();
    assert_eq!(rho_inv(&u), s);
    let dx = delta_xi(&s).unwrap();
    for k in 0..=s.len() {
        assert_eq!(dx.deltas[k].len() + dx.xis[k].len(), s.len());
    }
}
