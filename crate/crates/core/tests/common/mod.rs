//! Independent oracles and instance helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use napx::solver::CladeTable;
use napx::{
    combine_prob, generate, AttributeLaw, BudgetRule, Discretization, GenSpec, Instance, Node, PhyloTree, SplitMix64, Taxon,
    Topology,
};

/// Direct evaluation of the combine recurrence: every `(b, i, j, k)`.
pub fn exhaustive_combine(length: f64, left: &CladeTable, right: &CladeTable, d: &Discretization) -> Vec<Vec<f64>> {
    let budget = left.budget().min(right.budget());
    let rows = d.rows();
    let grid = d.grid();
    let mut out = vec![vec![f64::NEG_INFINITY; rows]; budget + 1];
    for (b, row) in out.iter_mut().enumerate() {
        let mut best = vec![f64::NEG_INFINITY; rows];
        for i in 0..=b {
            for j in 0..rows {
                let lv = left.available(i, j);
                if lv == f64::NEG_INFINITY {
                    continue;
                }
                for k in 0..rows {
                    let rv = right.available(b - i, k);
                    if rv == f64::NEG_INFINITY {
                        continue;
                    }
                    let p = d.pi_index(combine_prob(grid[j], grid[k]));
                    best[p] = best[p].max(lv + rv);
                }
            }
        }
        for p in 0..rows {
            if best[p] > f64::NEG_INFINITY {
                row[p] = grid[p] * length + best[p];
            }
        }
    }
    out
}

/// A deliberately local heuristic: every clade keeps only its single best
/// set per budget (scored on the clade alone) and parents combine those.
pub fn local_greedy(instance: &Instance) -> BTreeSet<usize> {
    let tree = instance.tree();
    let budget = instance.budget() as usize;
    let clade = tree.clade_taxa();
    let score_in_clade = |node: usize, set: &BTreeSet<usize>| -> f64 {
        // expected PD of the edges at and below `node`
        let mut total = 0.0;
        let mut stack = vec![node];
        while let Some(id) = stack.pop() {
            let fail: f64 = clade[id]
                .iter()
                .map(|&t| {
                    let taxon = &instance.taxa()[t];
                    1.0 - if set.contains(&t) { taxon.b } else { taxon.a }
                })
                .product();
            total += tree.node(id).length * (1.0 - fail);
            stack.extend(tree.node(id).children.iter().copied());
        }
        total
    };
    let mut best: Vec<Vec<BTreeSet<usize>>> = vec![Vec::new(); tree.len()];
    for id in tree.postorder() {
        let node = tree.node(id);
        let mut row = Vec::with_capacity(budget + 1);
        for b in 0..=budget {
            let cands: Vec<BTreeSet<usize>> = match node.taxon {
                Some(t) if instance.taxa()[t].c as usize <= b => vec![BTreeSet::new(), BTreeSet::from([t])],
                Some(_) => vec![BTreeSet::new()],
                None => {
                    let (l, r) = (node.children[0], node.children[1]);
                    (0..=b).map(|i| best[l][i].union(&best[r][b - i]).copied().collect()).collect()
                }
            };
            let mut pick = BTreeSet::new();
            let mut pick_score = f64::NEG_INFINITY;
            for s in cands {
                let v = score_in_clade(id, &s);
                if v > pick_score {
                    pick_score = v;
                    pick = s;
                }
            }
            row.push(pick);
        }
        best[id] = row;
    }
    best[tree.root()][budget].clone()
}

pub fn leaf(taxon: usize, length: f64) -> Node {
    Node { parent: None, children: vec![], length, taxon: Some(taxon) }
}

pub fn inner(children: Vec<usize>, length: f64) -> Node {
    Node { parent: None, children, length, taxon: None }
}

/// Four taxa where the best set is not built from the best set of each clade:
/// `((w:20,x:1):1,(y:1,z:10):2):100`, budget 3.
pub fn optimal_substructure_instance() -> Instance {
    let nodes = vec![
        inner(vec![1, 4], 100.0),
        inner(vec![2, 3], 1.0),
        leaf(0, 20.0),
        leaf(1, 1.0),
        inner(vec![5, 6], 2.0),
        leaf(2, 1.0),
        leaf(3, 10.0),
    ];
    let tree = PhyloTree::from_nodes(nodes, 0).unwrap();
    let taxa = vec![
        Taxon::new("w", 0.0, 0.5, 2),
        Taxon::new("x", 0.0, 0.0, 1),
        Taxon::new("y", 0.0, 1.0, 1),
        Taxon::new("z", 0.0, 0.5, 1),
    ];
    Instance::new(tree, taxa, 3).unwrap()
}

/// Random instance with `n` in `n_range`, budget in `b_range`; the topology
/// alternates with the seed.
pub fn random_instance(seed: u64, n_range: (usize, usize), b_range: (u64, u64)) -> Instance {
    let mut rng = SplitMix64::new(seed ^ 0x5eed);
    let n = rng.range_inclusive(n_range.0 as u64, n_range.1 as u64) as usize;
    let budget = rng.range_inclusive(b_range.0, b_range.1);
    let topology = if seed % 2 == 0 { Topology::Yule } else { Topology::Caterpillar };
    generate(&GenSpec::new(topology, n, seed).with_budget(BudgetRule::Fixed(budget))).unwrap()
}

/// Random instance where every taxon goes from certain death to certain survival.
pub fn random_zero_one(seed: u64, max_n: usize) -> Instance {
    let mut rng = SplitMix64::new(seed ^ 0x0c1);
    let n = rng.range_inclusive(2, max_n as u64) as usize;
    let topology = if seed % 2 == 0 { Topology::Yule } else { Topology::Caterpillar };
    let spec = GenSpec::new(topology, n, seed)
        .with_attributes(AttributeLaw::zero_one((1, 5)))
        .with_budget(BudgetRule::CeilFraction { num: 2, den: 5 });
    generate(&spec).unwrap()
}

/// Random instance with tiny initial survival probabilities.
pub fn random_small_initial(seed: u64) -> Instance {
    let mut rng = SplitMix64::new(seed ^ 0x1e3);
    let n = rng.range_inclusive(4, 9) as usize;
    let law = AttributeLaw { a_range: (0.0, 0.003), b_range: (0.5, 1.0), cost_range: (1, 4) };
    generate(&GenSpec::new(Topology::Yule, n, seed).with_attributes(law)).unwrap()
}
