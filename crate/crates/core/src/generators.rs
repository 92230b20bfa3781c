//! Seeded instance generators: Yule-Harding and caterpillar topologies with
//! random branch lengths and taxon attributes.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::instance::{Instance, InstanceMeta, Node, NodeId, PhyloTree, Taxon};

/// SplitMix64: a 64-bit counter passed through a fixed mixing function.
/// The stream depends only on the seed, on every platform.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(Self::GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Independent stream seeded from this one.
    pub fn split(&mut self) -> Self {
        Self::new(self.next_u64())
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi]`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return lo;
        }
        (lo + (hi - lo) * self.next_f64()).min(hi)
    }

    /// Uniform integer in `0..n` (rejection sampling, no modulo bias).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        if hi <= lo {
            return lo;
        }
        match (hi - lo).checked_add(1) {
            Some(span) => lo + self.below(span),
            None => self.next_u64(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Yule,
    Caterpillar,
}

impl Topology {
    pub fn as_str(&self) -> &'static str {
        match self {
            Topology::Yule => "yule",
            Topology::Caterpillar => "caterpillar",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Topology {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "yule" => Ok(Topology::Yule),
            "caterpillar" => Ok(Topology::Caterpillar),
            other => Err(GenError::Law(format!("unknown topology '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LengthLaw {
    /// Uniform on `(0, 1]`.
    UnitUniform,
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BudgetRule {
    /// `ceil(sum(c) * num / den)`.
    CeilFraction { num: u64, den: u64 },
    Fixed(u64),
}

/// Ranges for the taxon attributes. `a` is uniform on `a_range`, `b` on
/// `[max(a, b_range.0), b_range.1]`, `c` uniform on the integer range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttributeLaw {
    pub a_range: (f64, f64),
    pub b_range: (f64, f64),
    pub cost_range: (u64, u64),
}

impl Default for AttributeLaw {
    fn default() -> Self {
        Self { a_range: (0.0, 0.3), b_range: (0.5, 1.0), cost_range: (1, 5) }
    }
}

impl AttributeLaw {
    /// Every taxon dies unless conserved and surely survives if conserved.
    pub fn zero_one(cost_range: (u64, u64)) -> Self {
        Self { a_range: (0.0, 0.0), b_range: (1.0, 1.0), cost_range }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub n: usize,
    pub seed: u64,
    pub topology: Topology,
    pub lengths: LengthLaw,
    pub attributes: AttributeLaw,
    pub budget: BudgetRule,
}

impl GenSpec {
    pub fn new(topology: Topology, n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            topology,
            lengths: LengthLaw::UnitUniform,
            attributes: AttributeLaw::default(),
            budget: BudgetRule::CeilFraction { num: 1, den: 3 },
        }
    }

    pub fn with_budget(mut self, budget: BudgetRule) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_attributes(mut self, attributes: AttributeLaw) -> Self {
        self.attributes = attributes;
        self
    }

    pub fn with_lengths(mut self, lengths: LengthLaw) -> Self {
        self.lengths = lengths;
        self
    }

    fn check(&self) -> Result<(), GenError> {
        if self.n < 2 {
            return Err(GenError::TooFewLeaves(self.n));
        }
        let AttributeLaw { a_range, b_range, cost_range } = self.attributes;
        let prob = |x: f64| (0.0..=1.0).contains(&x);
        if !(prob(a_range.0) && prob(a_range.1) && a_range.0 <= a_range.1) {
            return Err(GenError::Law(format!("bad range for a: {a_range:?}")));
        }
        if !(prob(b_range.0) && prob(b_range.1) && b_range.0 <= b_range.1 && a_range.1 <= b_range.1) {
            return Err(GenError::Law(format!("bad range for b: {b_range:?}")));
        }
        if cost_range.0 > cost_range.1 {
            return Err(GenError::Law(format!("bad cost range: {cost_range:?}")));
        }
        if let LengthLaw::Constant(x) = self.lengths {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(GenError::Law(format!("bad branch length {x}")));
            }
        }
        if let BudgetRule::CeilFraction { den: 0, .. } = self.budget {
            return Err(GenError::Law("budget fraction with zero denominator".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("a generated tree needs at least 2 leaves, got {0}")]
    TooFewLeaves(usize),
    #[error("{0}")]
    Law(String),
}

pub fn generate(spec: &GenSpec) -> Result<Instance, GenError> {
    match spec.topology {
        Topology::Yule => gen_yule(spec),
        Topology::Caterpillar => gen_caterpillar(spec),
    }
}

/// Yule-Harding tree: start from a cherry and split a uniformly chosen leaf
/// until there are `n` leaves.
pub fn gen_yule(spec: &GenSpec) -> Result<Instance, GenError> {
    spec.check()?;
    let mut rng = SplitMix64::new(spec.seed);
    let mut topo_rng = rng.split();
    let mut children: Vec<Vec<NodeId>> = vec![vec![1, 2], vec![], vec![]];
    let mut leaves: Vec<NodeId> = vec![1, 2];
    while leaves.len() < spec.n {
        let pick = topo_rng.below(leaves.len() as u64) as usize;
        let parent = leaves[pick];
        let (l, r) = (children.len(), children.len() + 1);
        children.push(vec![]);
        children.push(vec![]);
        children[parent] = vec![l, r];
        leaves[pick] = l;
        leaves.push(r);
    }
    finish(spec, &mut rng, children, "yule")
}

/// Caterpillar: every internal vertex lies on the path from the root, so the
/// tree has height `n`.
pub fn gen_caterpillar(spec: &GenSpec) -> Result<Instance, GenError> {
    spec.check()?;
    let mut rng = SplitMix64::new(spec.seed);
    let _ = rng.split();
    // node 0 is the root; spine vertex i has children [spine i+1, leaf]
    let spine = spec.n - 1;
    let mut children: Vec<Vec<NodeId>> = vec![vec![]; spine];
    for (i, kids) in children.iter_mut().enumerate().take(spine - 1) {
        *kids = vec![i + 1];
    }
    children[spine - 1] = vec![];
    let push_leaf = |children: &mut Vec<Vec<NodeId>>, parent: usize| {
        let id = children.len();
        children.push(vec![]);
        children[parent].push(id);
    };
    push_leaf(&mut children, spine - 1);
    push_leaf(&mut children, spine - 1);
    for i in (0..spine - 1).rev() {
        push_leaf(&mut children, i);
    }
    finish(spec, &mut rng, children, "caterpillar")
}

fn finish(spec: &GenSpec, rng: &mut SplitMix64, children: Vec<Vec<NodeId>>, kind: &str) -> Result<Instance, GenError> {
    let mut len_rng = rng.split();
    let mut attr_rng = rng.split();
    let mut nodes: Vec<Node> = children
        .into_iter()
        .enumerate()
        .map(|(id, kids)| Node {
            parent: None,
            children: kids,
            length: if id == 0 {
                0.0
            } else {
                match spec.lengths {
                    LengthLaw::UnitUniform => 1.0 - len_rng.next_f64(),
                    LengthLaw::Constant(x) => x,
                }
            },
            taxon: None,
        })
        .collect();
    // Taxa are numbered in left-to-right leaf order.
    let provisional = PhyloTree::from_nodes(nodes.clone(), 0).map_err(|e| GenError::Law(e.to_string()))?;
    let leaf_order: Vec<NodeId> = provisional.postorder().into_iter().filter(|&id| provisional.node(id).is_leaf()).collect();
    let width = spec.n.to_string().len().max(2);
    let law = spec.attributes;
    let mut taxa = Vec::with_capacity(spec.n);
    for (i, &leaf) in leaf_order.iter().enumerate() {
        nodes[leaf].taxon = Some(i);
        let a = attr_rng.uniform(law.a_range.0, law.a_range.1);
        let b = attr_rng.uniform(a.max(law.b_range.0), law.b_range.1);
        let c = attr_rng.range_inclusive(law.cost_range.0, law.cost_range.1);
        taxa.push(Taxon::new(format!("t{:0width$}", i + 1), a, b, c));
    }
    let total_cost: u64 = taxa.iter().map(|t| t.c).sum();
    let budget = match spec.budget {
        BudgetRule::CeilFraction { num, den } => (total_cost * num).div_ceil(den),
        BudgetRule::Fixed(b) => b,
    };
    let tree = PhyloTree::from_nodes(nodes, 0).map_err(|e| GenError::Law(e.to_string()))?;
    let meta = InstanceMeta { name: Some(format!("{kind}-n{}-s{}", spec.n, spec.seed)), seed: Some(spec.seed) };
    Instance::new(tree, taxa, budget)
        .map(|inst| inst.with_meta(meta))
        .map_err(|e| GenError::Law(e.to_string()))
}
