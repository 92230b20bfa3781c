mod common;

use napx::{brute_force, brute_force_with, pardi_goldman, Instance, PhyloTree, Taxon};
use proptest::prelude::*;

#[test]
fn brute_force_is_monotone_in_budget() {
    for seed in 0..6 {
        let inst = common::random_instance(seed, (5, 9), (0, 0));
        let total: u64 = inst.taxa().iter().map(|t| t.c).sum();
        let mut prev = f64::NEG_INFINITY;
        for b in 0..=total {
            let s = brute_force(&inst.with_budget(b)).unwrap().score;
            assert!(s >= prev - 1e-12, "seed={seed} b={b}");
            prev = s;
        }
    }
}

#[test]
fn parallel_enumeration_agrees() {
    let inst = common::random_instance(3, (14, 14), (6, 6));
    assert_eq!(brute_force(&inst).unwrap(), brute_force_with(&inst, true).unwrap());
}

/// Same instance with every child list reversed.
fn mirrored(inst: &Instance) -> Instance {
    let mut nodes = inst.tree().nodes().to_vec();
    for n in nodes.iter_mut() {
        n.children.reverse();
    }
    Instance::new(PhyloTree::from_nodes(nodes, inst.tree().root()).unwrap(), inst.taxa().to_vec(), inst.budget()).unwrap()
}

#[test]
fn invariant_under_child_order_and_binarization() {
    for seed in 0..10 {
        let inst = common::random_instance(seed, (4, 9), (2, 8));
        let base = brute_force(&inst).unwrap();
        let flipped = brute_force(&mirrored(&inst)).unwrap();
        assert!((base.score - flipped.score).abs() < 1e-12);
        assert_eq!(base.set.selected, flipped.set.selected);
    }
    // star with four leaves
    let mut nodes = vec![common::inner(vec![1, 2, 3, 4], 1.0)];
    nodes.extend((0..4).map(|i| common::leaf(i, 1.0 + i as f64)));
    let taxa = (0..4).map(|i| Taxon::new(format!("s{i}"), 0.1 * i as f64, 0.9, 1 + i as u64 % 2)).collect();
    let star = Instance::new(PhyloTree::from_nodes(nodes, 0).unwrap(), taxa, 3).unwrap();
    let bin = Instance::new(star.tree().binarized(), star.taxa().to_vec(), 3).unwrap();
    assert!((brute_force(&star).unwrap().score - brute_force(&bin).unwrap().score).abs() < 1e-12);
}

#[test]
fn pardi_goldman_accepts_polytomies() {
    let mut nodes = vec![common::inner(vec![1, 2, 3], 2.0)];
    nodes.extend((0..3).map(|i| common::leaf(i, 1.0 + i as f64)));
    let taxa = (0..3).map(|i| Taxon::new(format!("p{i}"), 0.0, 1.0, 1)).collect();
    let inst = Instance::new(PhyloTree::from_nodes(nodes, 0).unwrap(), taxa, 2).unwrap();
    let pg = pardi_goldman(&inst).unwrap();
    assert!((pg.score - 7.0).abs() < 1e-12);
    assert_eq!(pg.selected, vec![1, 2]);
}

#[test]
fn pardi_goldman_full_budget_takes_everything() {
    for seed in 0..5 {
        let inst = common::random_zero_one(seed, 10);
        let total: u64 = inst.taxa().iter().map(|t| t.c).sum();
        let pg = pardi_goldman(&inst.with_budget(total + 3)).unwrap();
        assert!((pg.score - inst.tree().total_pd()).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pardi_goldman_matches_brute_force(seed in any::<u64>()) {
        let inst = common::random_zero_one(seed, 12);
        let pg = pardi_goldman(&inst).unwrap();
        let bf = brute_force(&inst).unwrap();
        prop_assert!((pg.score - bf.score).abs() < 1e-9);
        prop_assert!(pg.set.total_cost <= inst.budget());
    }
}
