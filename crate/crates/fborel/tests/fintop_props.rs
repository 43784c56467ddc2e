use std::collections::BTreeMap;

use fborel::broom::{random_broom, random_extension};
use fborel::fintop::*;
use fborel::sets::AtomSet;
use fborel::Ordinal;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Clopen sets of `x`, found by brute force.
fn clopens(x: &FinSpace) -> Vec<AtomSet> {
    x.opens().into_iter().filter(|&a| x.is_closed(a)).collect()
}

/// `A` plus a few fresh points, each seeing a nonempty open part of `A`
/// that avoids the other members.
fn random_ext<R: Rng>(x: &FinSpace, a: AtomSet, others: AtomSet, next: &mut u32, rng: &mut R) -> Extension {
    let sub = x.subspace(a);
    let mut labels: Vec<u32> = a.atoms().collect();
    let k = labels.len() as u32;
    let shared = AtomSet::from_atoms(labels.iter().enumerate().filter(|(_, &l)| others.contains(l)).map(|(i, _)| i as u32));
    let opens: Vec<AtomSet> = sub.opens().into_iter().filter(|o| !o.is_empty() && o.inter(shared).is_empty()).collect();
    let mut gens: Vec<AtomSet> = (0..k).map(|p| sub.nbhd(p)).collect();
    if !opens.is_empty() {
        for i in 0..rng.gen_range(0..3u32) {
            let o = opens[rng.gen_range(0..opens.len())];
            gens.push(o.union(AtomSet::singleton(k + i)));
            labels.push(*next);
            *next += 1;
        }
    }
    let space = FinSpace::from_subbasis(labels.len() as u32, &gens).unwrap();
    Extension { space, labels }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn generated_topology_is_the_closure(n in 0u32..=8, raw in prop::collection::vec(any::<u64>(), 0..6)) {
        let sets: Vec<AtomSet> = raw.iter().map(|r| AtomSet(r & AtomSet::full(n).0)).collect();
        let x = FinSpace::from_subbasis(n, &sets).unwrap();
        let opens: Vec<AtomSet> = brute_topology(n, &sets).into_iter().collect();
        prop_assert_eq!(x.opens(), opens);
    }

    #[test]
    fn w_matches_brute_force_and_laws(seed in any::<u64>(), n in 1u32..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_space(n, &mut rng);
        for p in (0..1u64 << n).map(AtomSet) {
            for g in q.opens().into_iter().map(|o| o.inter(p)) {
                prop_assert_eq!(w_operator(&q, p, g).unwrap(), brute_w(&q, p, g));
            }
            let rep = check_w_laws(&q, p).unwrap();
            prop_assert!(rep.failures.is_empty(), "{:?}", rep.failures);
        }
    }

    #[test]
    fn zoom_postconditions(seed in any::<u64>(), n in 1u32..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = random_space(n, &mut rng);
        let mut xs = BTreeMap::new();
        for i in y.isolated().atoms() {
            if rng.gen_bool(0.7) {
                let m = rng.gen_range(1..=3);
                xs.insert(i, random_space(m, &mut rng));
            }
        }
        let z = zoom_space(&y, &xs).unwrap();
        for u in y.opens() {
            prop_assert!(z.space.is_open(z.v(u)));
        }
    }

    #[test]
    fn amalgamation_postconditions(seed in any::<u64>(), n in 1u32..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_space(n, &mut rng);
        let family: Vec<AtomSet> = clopens(&x).into_iter().filter(|a| !a.is_empty() && rng.gen_bool(0.5)).collect();
        let trivial: Vec<Extension> = family.iter().map(|&a| Extension::trivial(&x, a)).collect();
        prop_assert_eq!(amalgamate(&x, &family, &trivial).unwrap().space, x.clone());
        let mut next = 100;
        let exts: Vec<Extension> = family
            .iter()
            .map(|&a| {
                let others = family.iter().filter(|&&b| b != a).fold(AtomSet::EMPTY, |u, b| u.union(*b));
                random_ext(&x, a, others, &mut next, &mut rng)
            })
            .collect();
        let amg = amalgamate(&x, &family, &exts).unwrap();
        for (e, part) in exts.iter().zip(&amg.parts) {
            prop_assert_eq!(amg.space.subspace(*part).len(), e.space.len());
        }
    }

    #[test]
    fn handles_partition(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for a in ["2", "3", "4", "w"] {
            let b = random_broom(&a.parse().unwrap(), &mut rng);
            let ext = random_extension(&b, &mut rng);
            for g in ["2", "3", "4", "w", "w+1"] {
                let g: Ordinal = g.parse().unwrap();
                let rep = gamma_handles(&ext, &g, 2).unwrap();
                prop_assert!(rep.partition && rep.prefix_property, "{:?}", rep);
            }
        }
    }

    #[test]
    fn space_json_round_trip(seed in any::<u64>(), n in 0u32..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_space(n, &mut rng);
        let back: FinSpace = serde_json::from_str(&serde_json::to_string(&x).unwrap()).unwrap();
        prop_assert_eq!(back, x);
    }
}

#[test]
fn preorder_and_opens_agree() {
    let x: FinSpace = serde_json::from_str(r#"{"points": 3, "preorder": [[2, 0], [2, 1]]}"#).unwrap();
    let y: FinSpace = serde_json::from_str(r#"{"points": 3, "opens": [[0], [1]]}"#).unwrap();
    assert_eq!(x, y);
}
