use fborel::broom::*;
use fborel::derive::{self, Kind};
use fborel::Ordinal;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ranks() -> Vec<Ordinal> {
    ["0", "1", "2", "3", "4", "5", "6", "w", "w+1", "w+2", "w*2"].iter().map(|s| s.parse().unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn generator_hits_its_rank(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for a in ranks() {
            let b = random_broom(&a, &mut rng);
            prop_assert_eq!(classify(&b).unwrap(), a);
        }
    }

    #[test]
    fn rank_lemma_holds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for a in ranks() {
            let b = random_broom(&a, &mut rng);
            let r = rank_lemma_check(&b).unwrap();
            prop_assert!(r.pass, "{:?} {:?}", b, r);
            let ext = random_extension(&b, &mut rng);
            let r = rank_lemma_check_inf(&ext).unwrap();
            prop_assert!(r.pass, "{:?} {:?}", ext, r);
        }
    }

    #[test]
    fn diie_of_extension_is_base_closure(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for a in ranks() {
            let b = random_broom(&a, &mut rng);
            let ext = random_extension(&b, &mut rng);
            let d = derive::derive(Kind::Iie, &ext.closure_tree().unwrap()).unwrap();
            prop_assert!(derive::tree_eq(&d, &broom_diie(&ext).unwrap()).unwrap());
            prop_assert!(derive::tree_eq(&d, &closure_tree(&b).unwrap()).unwrap());
        }
    }

    #[test]
    fn tilde_adds_two(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for a in ranks() {
            let b = random_broom(&a, &mut rng);
            let ext = random_extension(&b, &mut rng);
            prop_assert_eq!(classify(&ext.tilde().unwrap()).unwrap(), Ordinal::nat(2).add(&a));
        }
    }

    #[test]
    fn brute_force_membership(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for a in 0..=4 {
            let b = random_broom(&Ordinal::nat(a), &mut rng);
            prop_assert_eq!(brute_rank(&truncation(&b, 2).unwrap()), Some(a));
        }
    }

    #[test]
    fn distinct_cycles_are_almost_disjoint(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fam: Vec<InfBroomExpr> = (0..3u64)
            .map(|i| {
                let b = random_broom(&Ordinal::nat(i + 1), &mut rng);
                let mut e = random_extension(&b, &mut rng);
                e.rays.cycle = 10 + i;
                e.overrides.clear();
                e
            })
            .collect();
        prop_assert!(almost_disjoint_check(&fam).unwrap());
    }
}

#[test]
fn json_round_trip() {
    let b = canonical_broom(&"w+3".parse().unwrap(), Default::default(), None);
    let j = serde_json::to_string(&b).unwrap();
    let back: BroomExpr = serde_json::from_str(&j).unwrap();
    assert_eq!(back, b);
}
