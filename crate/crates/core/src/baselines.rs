//! Exact reference solvers: subset enumeration for any instance and the
//! pseudopolynomial DP for instances where every taxon goes from certain
//! extinction to certain survival.

use rayon::prelude::*;
use thiserror::Error;

use crate::instance::{ConservationSet, Instance, NodeId};

/// Largest taxon count accepted by [`brute_force`].
pub const BRUTE_FORCE_MAX_TAXA: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BaselineError {
    #[error("brute force is limited to {limit} taxa, instance has {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("restriction error: taxa not of the form a=0, b=1: {}", .taxa.join(", "))]
    Restriction { taxa: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactMethod {
    SubsetEnumeration,
    PgDp,
}

impl ExactMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExactMethod::SubsetEnumeration => "subset-enumeration",
            ExactMethod::PgDp => "pg-dp",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub set: ConservationSet,
    /// Selected taxon indices, ascending.
    pub selected: Vec<usize>,
    pub score: f64,
    pub method: ExactMethod,
}

/// Expected PD over a fixed postorder with a reusable buffer.
struct FastEval {
    order: Vec<NodeId>,
    children: Vec<Vec<NodeId>>,
    lengths: Vec<f64>,
    leaf_taxon: Vec<Option<usize>>,
    fail: Vec<f64>,
}

impl FastEval {
    fn new(instance: &Instance) -> Self {
        let tree = instance.tree();
        Self {
            order: tree.postorder(),
            children: tree.nodes().iter().map(|n| n.children.clone()).collect(),
            lengths: tree.nodes().iter().map(|n| n.length).collect(),
            leaf_taxon: tree.nodes().iter().map(|n| n.taxon).collect(),
            fail: vec![1.0; tree.len()],
        }
    }

    fn score(&mut self, instance: &Instance, mask: u64) -> f64 {
        let taxa = instance.taxa();
        let mut total = 0.0;
        for &id in &self.order {
            let f = match self.leaf_taxon[id] {
                Some(t) => 1.0 - if mask >> t & 1 == 1 { taxa[t].b } else { taxa[t].a },
                None => self.children[id].iter().map(|&c| self.fail[c]).product(),
            };
            self.fail[id] = f;
            total += self.lengths[id] * (1.0 - f);
        }
        total
    }
}

#[derive(Debug, Clone, Copy)]
struct Best {
    score: f64,
    mask: u64,
}

/// Lexicographic order on the sorted id lists of two masks.
fn ids_less(instance: &Instance, a: u64, b: u64) -> bool {
    let ids = |m: u64| {
        let mut v: Vec<&str> = (0..instance.num_taxa()).filter(|&i| m >> i & 1 == 1).map(|i| instance.taxa()[i].id.as_str()).collect();
        v.sort_unstable();
        v
    };
    ids(a) < ids(b)
}

fn better(instance: &Instance, cand: Best, cur: Option<Best>) -> bool {
    match cur {
        None => true,
        Some(cur) => cand.score > cur.score || (cand.score == cur.score && ids_less(instance, cand.mask, cur.mask)),
    }
}

/// Enumerates the low `bits` taxa in Gray-code order with the high bits
/// fixed to `prefix`.
fn enumerate_chunk(instance: &Instance, prefix: u64, bits: usize) -> Option<Best> {
    let costs: Vec<u64> = instance.taxa().iter().map(|t| t.c).collect();
    let budget = instance.budget();
    let mut eval = FastEval::new(instance);
    let mut mask = prefix;
    let mut cost: u64 = (0..costs.len()).filter(|&i| prefix >> i & 1 == 1).map(|i| costs[i]).sum();
    let mut best = None;
    for step in 0u64..(1u64 << bits) {
        if step > 0 {
            let flip = step.trailing_zeros() as usize;
            mask ^= 1 << flip;
            if mask >> flip & 1 == 1 {
                cost += costs[flip];
            } else {
                cost -= costs[flip];
            }
        }
        if cost <= budget {
            let cand = Best { score: eval.score(instance, mask), mask };
            if better(instance, cand, best) {
                best = Some(cand);
            }
        }
    }
    best
}

fn finish(instance: &Instance, mask: u64, method: ExactMethod) -> ExactSolution {
    let selected: Vec<usize> = (0..instance.num_taxa()).filter(|&i| mask >> i & 1 == 1).collect();
    let set = instance.conservation_set(&selected);
    ExactSolution { score: set.score, set, selected, method }
}

/// Exact optimum by enumerating every affordable subset. Ties go to the
/// lexicographically smallest list of ids.
pub fn brute_force(instance: &Instance) -> Result<ExactSolution, BaselineError> {
    brute_force_with(instance, false)
}

/// [`brute_force`], optionally splitting the subset space across threads.
/// The result does not depend on `parallel`.
pub fn brute_force_with(instance: &Instance, parallel: bool) -> Result<ExactSolution, BaselineError> {
    let n = instance.num_taxa();
    if n > BRUTE_FORCE_MAX_TAXA {
        return Err(BaselineError::TooLarge { n, limit: BRUTE_FORCE_MAX_TAXA });
    }
    let split = if parallel && n > 12 { 6.min(n) } else { 0 };
    let low = n - split;
    let chunk = |hi: u64| enumerate_chunk(instance, hi << low, low);
    let results: Vec<Option<Best>> = if split > 0 {
        (0..1u64 << split).into_par_iter().map(chunk).collect()
    } else {
        vec![chunk(0)]
    };
    let mut best = None;
    for cand in results.into_iter().flatten() {
        if better(instance, cand, best) {
            best = Some(cand);
        }
    }
    // The empty set is always affordable.
    let best = best.expect("empty set is feasible");
    Ok(finish(instance, best.mask, ExactMethod::SubsetEnumeration))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Choice {
    None,
    Leaf,
    Both(usize),
    LeftOnly,
    RightOnly,
}

/// Exact DP for instances with `a = 0` and `b = 1` on every taxon.
///
/// `N_e(b)` is the best PD of the clade below `e` (edge `e` included) over
/// non-empty selections costing at most `b`; an edge contributes its length
/// exactly when some leaf below it is conserved.
pub fn pardi_goldman(instance: &Instance) -> Result<ExactSolution, BaselineError> {
    let offending: Vec<String> = instance
        .taxa()
        .iter()
        .filter(|t| !(t.a == 0.0 && t.b == 1.0))
        .map(|t| t.id.clone())
        .collect();
    if !offending.is_empty() {
        return Err(BaselineError::Restriction { taxa: offending });
    }
    let tree = if instance.tree().is_binary() { instance.tree().clone() } else { instance.tree().binarized() };
    let total_cost: u64 = instance.taxa().iter().map(|t| t.c).sum();
    let budget = instance.budget().min(total_cost) as usize;
    let cols = budget + 1;
    let n_nodes = tree.len();
    let mut value = vec![f64::NEG_INFINITY; n_nodes * cols];
    let mut choice = vec![Choice::None; n_nodes * cols];

    for id in tree.postorder() {
        let node = tree.node(id);
        let base = id * cols;
        match (node.taxon, node.children.as_slice()) {
            (Some(t), _) => {
                let c = instance.taxa()[t].c;
                for b in 0..cols {
                    if b as u64 >= c {
                        value[base + b] = node.length;
                        choice[base + b] = Choice::Leaf;
                    }
                }
            }
            (None, &[l, r]) => {
                let (lb, rb) = (l * cols, r * cols);
                for b in 0..cols {
                    let mut best = f64::NEG_INFINITY;
                    let mut arg = Choice::None;
                    for i in 0..=b {
                        let v = value[lb + i] + value[rb + b - i];
                        if v > best {
                            best = v;
                            arg = Choice::Both(i);
                        }
                    }
                    if value[lb + b] > best {
                        best = value[lb + b];
                        arg = Choice::LeftOnly;
                    }
                    if value[rb + b] > best {
                        best = value[rb + b];
                        arg = Choice::RightOnly;
                    }
                    if best > f64::NEG_INFINITY {
                        value[base + b] = node.length + best;
                        choice[base + b] = arg;
                    }
                }
            }
            _ => unreachable!("binarized tree"),
        }
    }

    let root = tree.root();
    let mut selected = Vec::new();
    if value[root * cols + budget] > 0.0 {
        let mut stack = vec![(root, budget)];
        while let Some((id, b)) = stack.pop() {
            let node = tree.node(id);
            match choice[id * cols + b] {
                Choice::Leaf => selected.push(node.taxon.expect("leaf")),
                Choice::Both(i) => {
                    stack.push((node.children[0], i));
                    stack.push((node.children[1], b - i));
                }
                Choice::LeftOnly => stack.push((node.children[0], b)),
                Choice::RightOnly => stack.push((node.children[1], b)),
                Choice::None => unreachable!("backtrace reached an infeasible entry"),
            }
        }
    }
    selected.sort_unstable();
    let set = instance.conservation_set(&selected);
    Ok(ExactSolution { score: set.score, set, selected, method: ExactMethod::PgDp })
}
