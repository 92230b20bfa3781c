//! Instance model: rooted phylogenetic trees, taxon attributes, the
//! expected-PD evaluator and instance normalization.
//!
//! Trees are stored as an arena of nodes. Every node owns the edge above it,
//! so `NodeId` doubles as an edge handle. The edge above the root node is the
//! root edge; it has length 0 unless the input gave the root an explicit
//! stem length.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

/// Index into the tree's node arena (and of the edge above that node).
pub type NodeId = usize;

/// Absolute tolerance for probability comparisons.
pub const PROB_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Length of the edge above this node.
    pub length: f64,
    /// Index into [`Instance::taxa`] for leaves, `None` for interior nodes.
    pub taxon: Option<usize>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// A rooted tree with branch lengths. Polytomies and unary nodes are
/// representable; [`Instance::normalize`] removes both.
#[derive(Debug, Clone, PartialEq)]
pub struct PhyloTree {
    nodes: Vec<Node>,
    root: NodeId,
}

impl PhyloTree {
    /// Builds a tree from an arena. Parent links are recomputed from the
    /// child lists; structural problems (cycles, shared children, unreachable
    /// nodes) are rejected.
    pub fn from_nodes(mut nodes: Vec<Node>, root: NodeId) -> Result<Self, ValidationError> {
        let mut violations = Vec::new();
        if root >= nodes.len() {
            return Err(ValidationError::single(Violation::Structure(format!(
                "root index {root} out of range ({})",
                nodes.len()
            ))));
        }
        for node in nodes.iter_mut() {
            node.parent = None;
        }
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(id) = stack.pop() {
            let children = nodes[id].children.clone();
            for child in children {
                if child >= nodes.len() {
                    violations.push(Violation::Structure(format!(
                        "node {id} references missing child {child}"
                    )));
                    continue;
                }
                if seen[child] {
                    violations.push(Violation::Structure(format!(
                        "node {child} is reachable twice"
                    )));
                    continue;
                }
                seen[child] = true;
                nodes[child].parent = Some(id);
                stack.push(child);
            }
        }
        if let Some(orphan) = seen.iter().position(|s| !s) {
            violations.push(Violation::Structure(format!("node {orphan} is unreachable from the root")));
        }
        if violations.is_empty() {
            Ok(Self { nodes, root })
        } else {
            Err(ValidationError { violations })
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&id| self.nodes[id].is_leaf())
    }

    /// Children before parents, starting from the leftmost leaf.
    pub fn postorder(&self) -> Vec<NodeId> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded {
                order.push(id);
            } else {
                stack.push((id, true));
                for &child in self.nodes[id].children.iter().rev() {
                    stack.push((child, false));
                }
            }
        }
        order
    }

    /// Edge heights counted in edges: 1 at pendants, `1 + max(children)` above.
    pub fn heights(&self) -> Vec<u32> {
        let mut heights = vec![0u32; self.nodes.len()];
        for id in self.postorder() {
            heights[id] = 1 + self.nodes[id]
                .children
                .iter()
                .map(|&c| heights[c])
                .max()
                .unwrap_or(0);
        }
        heights
    }

    /// Height of the root edge.
    pub fn height(&self) -> u32 {
        self.heights()[self.root]
    }

    pub fn is_binary(&self) -> bool {
        self.nodes.iter().all(|n| n.children.is_empty() || n.children.len() == 2)
    }

    /// Sum of all branch lengths, root edge included.
    pub fn total_pd(&self) -> f64 {
        self.nodes.iter().map(|n| n.length).sum()
    }

    /// Collapses unary nodes (lengths are summed) and splits polytomies into
    /// chains of binary vertices joined by zero-length edges. Leaf taxa and
    /// left-to-right leaf order are preserved.
    pub fn binarized(&self) -> PhyloTree {
        const UNSET: NodeId = NodeId::MAX;
        let mut out: Vec<Node> = Vec::with_capacity(self.nodes.len() * 2);
        // (source node, length inherited from collapsed unary ancestors,
        //  output slot (parent, child position) to fill)
        let mut stack: Vec<(NodeId, f64, Option<(NodeId, usize)>)> = vec![(self.root, 0.0, None)];
        while let Some((src, extra, slot)) = stack.pop() {
            let node = &self.nodes[src];
            if node.children.len() == 1 {
                stack.push((node.children[0], extra + node.length, slot));
                continue;
            }
            let id = out.len();
            let arity = if node.children.is_empty() { 0 } else { 2 };
            out.push(Node { parent: slot.map(|s| s.0), children: vec![UNSET; arity], length: node.length + extra, taxon: node.taxon });
            if let Some((p, pos)) = slot {
                out[p].children[pos] = id;
            }
            let kids = &node.children;
            let mut vertex = id;
            for (pos, &child) in kids.iter().enumerate() {
                let last_pair = pos + 2 >= kids.len();
                if last_pair {
                    let which = if pos + 1 == kids.len() { 1 } else { 0 };
                    stack.push((child, 0.0, Some((vertex, which))));
                } else {
                    stack.push((child, 0.0, Some((vertex, 0))));
                    let link = out.len();
                    out.push(Node { parent: Some(vertex), children: vec![UNSET; 2], length: 0.0, taxon: None });
                    out[vertex].children[1] = link;
                    vertex = link;
                }
            }
        }
        debug_assert!(out.iter().all(|n| n.children.iter().all(|&c| c != UNSET)));
        PhyloTree { nodes: out, root: 0 }
    }

    /// Leaf ids below every node, as sorted taxon-index lists.
    pub fn clade_taxa(&self) -> Vec<Vec<usize>> {
        let mut below: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for id in self.postorder() {
            let mut acc = Vec::new();
            if let Some(t) = self.nodes[id].taxon {
                acc.push(t);
            }
            for &c in &self.nodes[id].children {
                acc.extend_from_slice(&below[c]);
            }
            acc.sort_unstable();
            below[id] = acc;
        }
        below
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Taxon {
    pub id: String,
    /// Survival probability without conservation.
    pub a: f64,
    /// Survival probability when conserved.
    pub b: f64,
    /// Integer cost of conservation.
    pub c: u64,
}

impl Taxon {
    pub fn new(id: impl Into<String>, a: f64, b: f64, c: u64) -> Self {
        Self { id: id.into(), a, b, c }
    }
}

/// Free-form metadata carried through serialization.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InstanceMeta {
    pub name: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Structure(String),
    NegativeLength { node: NodeId, length: f64 },
    ProbabilityRange { taxon: String, field: &'static str, value: f64 },
    InitialExceedsConserved { taxon: String, a: f64, b: f64 },
    NonIntegerCost { taxon: String, value: String },
    DuplicateTaxon(String),
    LeafWithoutTaxon(NodeId),
    InteriorWithTaxon(NodeId),
    TaxonNotInTree(String),
    TaxonOnSeveralLeaves(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Structure(msg) => write!(f, "{msg}"),
            Violation::NegativeLength { node, length } => {
                write!(f, "edge above node {node} has invalid length {length}")
            }
            Violation::ProbabilityRange { taxon, field, value } => {
                write!(f, "taxon '{taxon}': {field}={value} is not a probability")
            }
            Violation::InitialExceedsConserved { taxon, a, b } => {
                write!(f, "taxon '{taxon}': a={a} exceeds b={b}")
            }
            Violation::NonIntegerCost { taxon, value } => {
                write!(f, "taxon '{taxon}': cost {value} is not a non-negative integer")
            }
            Violation::DuplicateTaxon(id) => write!(f, "duplicate taxon '{id}'"),
            Violation::LeafWithoutTaxon(node) => write!(f, "leaf node {node} has no taxon"),
            Violation::InteriorWithTaxon(node) => write!(f, "interior node {node} carries a taxon"),
            Violation::TaxonNotInTree(id) => write!(f, "unknown taxon '{id}' (not a leaf of the tree)"),
            Violation::TaxonOnSeveralLeaves(id) => write!(f, "taxon '{id}' is bound to several leaves"),
        }
    }
}

/// Every problem found while validating an instance.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

impl ValidationError {
    pub fn single(v: Violation) -> Self {
        Self { violations: vec![v] }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid instance: ")?;
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unknown taxon '{0}'")]
    UnknownTaxon(String),
}

/// A NAP instance: tree, per-leaf taxa and an integer budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    tree: PhyloTree,
    taxa: Vec<Taxon>,
    budget: u64,
    pub meta: InstanceMeta,
    index: HashMap<String, usize>,
}

impl Instance {
    /// Validates and assembles an instance. Every leaf must reference a
    /// distinct taxon and every taxon must sit on exactly one leaf.
    pub fn new(tree: PhyloTree, taxa: Vec<Taxon>, budget: u64) -> Result<Self, ValidationError> {
        Self::with_extra_violations(tree, taxa, budget, Vec::new())
    }

    /// As [`Instance::new`], merging violations found earlier by a caller
    /// (e.g. a parser) into a single report.
    pub fn with_extra_violations(
        tree: PhyloTree,
        taxa: Vec<Taxon>,
        budget: u64,
        mut violations: Vec<Violation>,
    ) -> Result<Self, ValidationError> {
        let mut index = HashMap::with_capacity(taxa.len());
        for (i, t) in taxa.iter().enumerate() {
            if index.insert(t.id.clone(), i).is_some() {
                violations.push(Violation::DuplicateTaxon(t.id.clone()));
            }
            for (field, value) in [("a", t.a), ("b", t.b)] {
                if !(0.0..=1.0).contains(&value) {
                    violations.push(Violation::ProbabilityRange { taxon: t.id.clone(), field, value });
                }
            }
            if t.a > t.b {
                violations.push(Violation::InitialExceedsConserved { taxon: t.id.clone(), a: t.a, b: t.b });
            }
        }
        let mut bound = vec![0usize; taxa.len()];
        for (id, node) in tree.nodes.iter().enumerate() {
            if !(node.length >= 0.0 && node.length.is_finite()) {
                violations.push(Violation::NegativeLength { node: id, length: node.length });
            }
            match (node.is_leaf(), node.taxon) {
                (true, None) => violations.push(Violation::LeafWithoutTaxon(id)),
                (false, Some(_)) => violations.push(Violation::InteriorWithTaxon(id)),
                (_, Some(t)) if t >= taxa.len() => {
                    violations.push(Violation::Structure(format!("node {id} references missing taxon {t}")))
                }
                (true, Some(t)) => bound[t] += 1,
                _ => {}
            }
        }
        for (i, count) in bound.iter().enumerate() {
            match count {
                0 => violations.push(Violation::TaxonNotInTree(taxa[i].id.clone())),
                1 => {}
                _ => violations.push(Violation::TaxonOnSeveralLeaves(taxa[i].id.clone())),
            }
        }
        if violations.is_empty() {
            Ok(Self { tree, taxa, budget, meta: InstanceMeta::default(), index })
        } else {
            Err(ValidationError { violations })
        }
    }

    pub fn with_meta(mut self, meta: InstanceMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn tree(&self) -> &PhyloTree {
        &self.tree
    }

    pub fn taxa(&self) -> &[Taxon] {
        &self.taxa
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn num_taxa(&self) -> usize {
        self.taxa.len()
    }

    pub fn taxon_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Leaf node carrying each taxon.
    pub fn leaf_of_taxon(&self) -> Vec<NodeId> {
        let mut leaf = vec![0; self.taxa.len()];
        for id in self.tree.leaves() {
            leaf[self.tree.nodes[id].taxon.expect("validated leaf")] = id;
        }
        leaf
    }

    pub fn total_cost_of(&self, selected: &[usize]) -> u64 {
        selected.iter().map(|&i| self.taxa[i].c).sum()
    }

    /// Resolves taxon ids to a sorted, deduplicated index list.
    pub fn resolve<'a, I>(&self, ids: I) -> Result<Vec<usize>, EvalError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut out = BTreeSet::new();
        for id in ids {
            out.insert(self.taxon_index(id).ok_or_else(|| EvalError::UnknownTaxon(id.to_string()))?);
        }
        Ok(out.into_iter().collect())
    }

    /// Builds the [`ConservationSet`] for a list of taxon indices.
    pub fn conservation_set(&self, selected: &[usize]) -> ConservationSet {
        let ids: BTreeSet<String> = selected.iter().map(|&i| self.taxa[i].id.clone()).collect();
        let mask = self.mask_of(selected);
        ConservationSet {
            selected: ids,
            total_cost: self.total_cost_of(selected),
            score: Evaluator::new(self).expected_pd(&mask),
        }
    }

    fn mask_of(&self, selected: &[usize]) -> Vec<bool> {
        let mut mask = vec![false; self.taxa.len()];
        for &i in selected {
            mask[i] = true;
        }
        mask
    }

    /// Applies the preprocessing assumed by the solvers:
    /// unaffordable taxa (`c > B`) become free no-op taxa with `b = a`;
    /// costs and budget are divided by the gcd of the positive costs
    /// (budget rounded down); unary nodes are collapsed and polytomies
    /// binarized with zero-length edges.
    pub fn normalize(&self) -> Instance {
        let mut taxa = self.taxa.clone();
        for t in taxa.iter_mut() {
            if t.c > self.budget {
                t.c = 0;
                t.b = t.a;
            }
        }
        let g = taxa.iter().filter(|t| t.c > 0).fold(0u64, |g, t| gcd(g, t.c));
        let mut budget = self.budget;
        if g > 1 {
            for t in taxa.iter_mut() {
                t.c /= g;
            }
            budget /= g;
        }
        let tree = if self.tree.is_binary() && self.tree.nodes.iter().all(|n| n.children.len() != 1) {
            self.tree.clone()
        } else {
            self.tree.binarized()
        };
        Instance::new(tree, taxa, budget)
            .expect("normalization preserves validity")
            .with_meta(self.meta.clone())
    }

    /// True when [`Instance::normalize`] would leave the instance unchanged.
    pub fn is_normalized(&self) -> bool {
        self.tree.is_binary()
            && self.taxa.iter().all(|t| t.c <= self.budget)
            && self.taxa.iter().filter(|t| t.c > 0).fold(0u64, |g, t| gcd(g, t.c)) <= 1
    }

    /// Copy of the instance with every initial probability below `cutoff`
    /// set to zero.
    pub fn with_small_initial_zeroed(&self, cutoff: f64) -> Instance {
        let taxa = self
            .taxa
            .iter()
            .map(|t| Taxon { a: if t.a < cutoff { 0.0 } else { t.a }, ..t.clone() })
            .collect();
        Instance::new(self.tree.clone(), taxa, self.budget)
            .expect("lowering a keeps the instance valid")
            .with_meta(self.meta.clone())
    }

    /// Same tree and taxa under a different budget.
    pub fn with_budget(&self, budget: u64) -> Instance {
        let mut out = self.clone();
        out.budget = budget;
        out
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// A selected set of taxa with its cost and expected PD.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservationSet {
    pub selected: BTreeSet<String>,
    pub total_cost: u64,
    pub score: f64,
}

/// Reusable evaluator for `E(PD | S)`. Precomputes a postorder so repeated
/// evaluations (brute force) avoid re-walking the tree structure.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    instance: &'a Instance,
    order: Vec<NodeId>,
}

impl<'a> Evaluator<'a> {
    pub fn new(instance: &'a Instance) -> Self {
        Self { instance, order: instance.tree.postorder() }
    }

    /// Probability that no leaf below each edge survives, i.e. the product
    /// of `(1 - b_i)` over selected and `(1 - a_j)` over unselected leaves.
    pub fn extinction_products(&self, selected: &[bool]) -> Vec<f64> {
        let tree = &self.instance.tree;
        let mut fail = vec![1.0; tree.nodes.len()];
        for &id in &self.order {
            let node = &tree.nodes[id];
            fail[id] = match node.taxon {
                Some(t) => {
                    let taxon = &self.instance.taxa[t];
                    1.0 - if selected[t] { taxon.b } else { taxon.a }
                }
                None => node.children.iter().map(|&c| fail[c]).product(),
            };
        }
        fail
    }

    /// Expected phylogenetic diversity given a selection mask over taxa.
    pub fn expected_pd(&self, selected: &[bool]) -> f64 {
        let fail = self.extinction_products(selected);
        self.instance
            .tree
            .nodes
            .iter()
            .zip(&fail)
            .map(|(node, f)| node.length * (1.0 - f))
            .sum()
    }

    /// Edge survival probabilities via `P_e = P_l + P_r - P_l P_r`, folded
    /// across all children of a vertex.
    pub fn survival_by_recurrence(&self, selected: &[bool]) -> Vec<f64> {
        let tree = &self.instance.tree;
        let mut p = vec![0.0; tree.nodes.len()];
        for &id in &self.order {
            let node = &tree.nodes[id];
            p[id] = match node.taxon {
                Some(t) => {
                    let taxon = &self.instance.taxa[t];
                    if selected[t] {
                        taxon.b
                    } else {
                        taxon.a
                    }
                }
                None => node.children.iter().fold(0.0, |acc, &c| acc + p[c] - acc * p[c]),
            };
        }
        p
    }
}

/// Sum of branch lengths, root edge included.
pub fn total_pd(tree: &PhyloTree) -> f64 {
    tree.total_pd()
}

/// `E(PD | S)` for a set of taxon ids.
pub fn expected_pd<'a, I>(instance: &Instance, selected: I) -> Result<f64, EvalError>
where
    I: IntoIterator<Item = &'a str>,
{
    let idx = instance.resolve(selected)?;
    Ok(Evaluator::new(instance).expected_pd(&instance.mask_of(&idx)))
}

/// Survival probability of the edge above `edge`, computed from the leaf
/// product form.
pub fn edge_survival<'a, I>(instance: &Instance, selected: I, edge: NodeId) -> Result<f64, EvalError>
where
    I: IntoIterator<Item = &'a str>,
{
    let idx = instance.resolve(selected)?;
    let mask = instance.mask_of(&idx);
    let clade = &instance.tree.clade_taxa()[edge];
    let fail: f64 = clade
        .iter()
        .map(|&t| {
            let taxon = &instance.taxa[t];
            1.0 - if mask[t] { taxon.b } else { taxon.a }
        })
        .product();
    Ok(1.0 - fail)
}
