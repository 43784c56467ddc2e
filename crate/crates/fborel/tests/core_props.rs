use fborel::derive::{self, finite_derive, Kind, Rank};
use fborel::leafscheme::{compile_simple, leaf_ranks};
use fborel::ordinal::{Enumeration, LimitEnumeration};
use fborel::seqtree::canonical_tree;
use fborel::verify::{random_expr, random_tree, random_universe};
use fborel::{Ordinal, Seq, TreeExpr};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ordinal(max_exp: u32) -> impl Strategy<Value = Ordinal> {
    prop::collection::vec((0..=max_exp, 0u64..4), 0..4).prop_map(|t| Ordinal::from_terms(&t))
}

fn limit() -> impl Strategy<Value = Ordinal> {
    ordinal(3).prop_map(|a| a.add(&Ordinal::omega())).prop_filter("limit", |a| a.is_limit())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn addition_is_associative(a in ordinal(3), b in ordinal(3), c in ordinal(3)) {
        prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
    }

    #[test]
    fn addition_is_monotone_on_the_right(a in ordinal(3), b in ordinal(3), c in ordinal(3)) {
        prop_assert!(a <= a.add(&b));
        if b < c {
            prop_assert!(a.add(&b) < a.add(&c));
        }
    }

    #[test]
    fn left_sub_inverts_addition(a in ordinal(3), b in ordinal(3)) {
        let s = a.add(&b);
        prop_assert_eq!(s.left_sub(&a), Some(b.clone()));
        let (lo, hi) = if a <= b { (&a, &b) } else { (&b, &a) };
        let g = hi.left_sub(lo).unwrap();
        prop_assert_eq!(&lo.add(&g), hi);
    }

    #[test]
    fn decompose_round_trips(a in ordinal(3)) {
        let (l, n, i) = a.decompose();
        prop_assert!(l.is_zero() || l.is_limit());
        prop_assert_eq!(Ordinal::reassemble(&l, n, i), a.clone());
        prop_assert_eq!(a.is_even(), i == 0);
        prop_assert_eq!(Ordinal::omega_times(&a.div_omega()).plus_nat(a.finite_part()), a);
    }

    #[test]
    fn display_parses_back(a in ordinal(4)) {
        prop_assert_eq!(a.to_string().parse::<Ordinal>().unwrap(), a);
    }

    #[test]
    fn enumerations_stay_below_and_are_injective(l in limit(), swapped in any::<bool>()) {
        let how = if swapped { Enumeration::Swapped } else { Enumeration::Canonical };
        let e = LimitEnumeration::new(&l, how).unwrap();
        let vals: Vec<Ordinal> = (0..60).map(|k| e.at(k)).collect();
        for (i, v) in vals.iter().enumerate() {
            prop_assert!(v < &l);
            prop_assert!(!vals[..i].contains(v));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn finite_tree_ranks(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tree(&mut rng, 5, 3, 20);
        let h = t.height().unwrap() as u64;
        let e = TreeExpr::explicit(t.clone());
        prop_assert_eq!(derive::rank(Kind::L, &e).unwrap(), Rank::Ord(Ordinal::nat(h)));
        prop_assert_eq!(derive::rank(Kind::I, &e).unwrap(), Rank::Ord(Ordinal::zero()));
        prop_assert_eq!(leaf_ranks(&t)[&Seq::empty()], h);
    }

    #[test]
    fn leaf_derivative_iterates_like_removing_leaves(seed in any::<u64>(), k in 0u64..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tree(&mut rng, 5, 3, 20);
        let mut naive = t.clone();
        for _ in 0..k {
            naive = finite_derive(Kind::L, &naive);
        }
        let d = derive::iterate(Kind::L, &TreeExpr::explicit(t), &Ordinal::nat(k)).unwrap();
        let got = d.to_finite().unwrap().unwrap();
        prop_assert_eq!(got, naive);
    }

    #[test]
    fn derivatives_compose(a in ordinal(1), b in ordinal(1), pad in 0u64..3) {
        // D^{a+b} = D^b D^a, on a canonical tree of rank at least a + b
        let t = canonical_tree(&a.add(&b).plus_nat(pad));
        let lhs = derive::iterate(Kind::L, &t, &a.add(&b)).unwrap();
        let rhs = derive::iterate(Kind::L, &derive::iterate(Kind::L, &t, &a).unwrap(), &b).unwrap();
        prop_assert!(derive::tree_eq(&lhs, &rhs).unwrap());
    }

    #[test]
    fn simple_compiler_evaluates_to_the_expression(seed in any::<u64>(), extra in 0u64..2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_universe(&mut rng, 6);
        let e = random_expr(&mut rng, u, 3, 3);
        let alpha = Ordinal::nat(e.class(u) + extra);
        let h = compile_simple(&e, &alpha, 3, u).unwrap();
        prop_assert_eq!(h.eval(), e.eval(u));
    }
}
