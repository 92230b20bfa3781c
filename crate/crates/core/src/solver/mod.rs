//! The approximation DP: per-clade tables over (budget, rounded survival
//! probability), combined bottom-up and traced back from the root.

mod combine;
mod table;

use rayon::prelude::*;
use thiserror::Error;

use crate::discretization::{derive_k, select_params, Discretization, ParamError};
use crate::instance::{ConservationSet, Instance, NodeId};

pub use combine::{combine_tables, CombinePath};
pub use table::{build_pendant_table, Backpointer, CladeTable, LeafDecision, PendantInfo};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("instance is not normalized (binary tree, costs within budget, coprime costs)")]
    NotNormalized,
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub epsilon: f64,
    /// Use the reduced enumeration when one child is a pendant.
    pub fast_path: bool,
    /// Build the tables of each tree level in parallel.
    pub parallel: bool,
    /// Keep every score matrix after its parent is built.
    pub retain_scores: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { epsilon: 0.1, fast_path: true, parallel: false, retain_scores: false }
    }
}

impl SolveOptions {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self { epsilon, ..Self::default() }
    }
}

/// How many internal edges went through each combine path.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CombineStats {
    pub pendant_path: usize,
    pub general_path: usize,
}

#[derive(Debug, Clone)]
pub struct NapxSolution {
    /// Selected taxa, evaluated exactly on the input instance.
    pub set: ConservationSet,
    /// Selected taxon indices, ascending.
    pub selected: Vec<usize>,
    /// Objective value read from the root table. Never above the exact
    /// expected PD of the selection.
    pub reported_score: f64,
    /// `None` when no taxon can survive and the DP was skipped.
    pub params: Option<Discretization>,
    /// Height of the normalized tree.
    pub height: u32,
    pub stats: CombineStats,
}

impl NapxSolution {
    pub fn score(&self) -> f64 {
        self.set.score
    }
}

/// Runs the approximation on any valid instance. The instance is normalized
/// first; the returned set refers to the input's taxa and is scored with
/// the input's costs.
pub fn solve(instance: &Instance, opts: &SolveOptions) -> Result<NapxSolution, SolveError> {
    if !(opts.epsilon > 0.0 && opts.epsilon < 1.0) {
        return Err(ParamError::Epsilon(opts.epsilon).into());
    }
    let norm = instance.normalize();
    let height = norm.tree().height();
    let k = match derive_k(&norm) {
        Ok(k) => k,
        Err(ParamError::Degenerate) => {
            return Ok(NapxSolution {
                set: instance.conservation_set(&[]),
                selected: Vec::new(),
                reported_score: 0.0,
                params: None,
                height,
                stats: CombineStats::default(),
            })
        }
        Err(e) => return Err(e.into()),
    };
    let d = select_params(norm.num_taxa(), height, opts.epsilon, k)?;
    let tables = build_tables(&norm, &d, opts)?;
    let (selected, reported_score) = tables.best_selection();
    Ok(NapxSolution {
        set: instance.conservation_set(&selected),
        selected,
        reported_score,
        params: Some(d),
        height,
        stats: tables.stats,
    })
}

/// All clade tables of a normalized instance.
#[derive(Debug, Clone)]
pub struct DpTables {
    tables: Vec<CladeTable>,
    /// `(left, right)` in the orientation used by the combine.
    layout: Vec<Option<(NodeId, NodeId)>>,
    root: NodeId,
    budget: usize,
    stats: CombineStats,
}

impl DpTables {
    pub fn table(&self, node: NodeId) -> &CladeTable {
        &self.tables[node]
    }

    pub fn root_table(&self) -> &CladeTable {
        &self.tables[self.root]
    }

    /// Children of an internal node as (left, right) operands of its combine.
    pub fn operands(&self, node: NodeId) -> Option<(NodeId, NodeId)> {
        self.layout[node]
    }

    pub fn stats(&self) -> CombineStats {
        self.stats
    }

    /// Best root row under the full budget; smallest row on ties.
    pub fn best_root_row(&self) -> (usize, f64) {
        let root = self.root_table();
        let mut best = (0, f64::NEG_INFINITY);
        for m in 0..root.rows() {
            let v = root.available(self.budget, m);
            if v > best.1 {
                best = (m, v);
            }
        }
        best
    }

    /// Taxa conserved by the solution ending in root entry `(b, m)`.
    pub fn backtrace(&self, b: usize, m: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![(self.root, b, m)];
        while let Some((node, b, m)) = stack.pop() {
            let table = &self.tables[node];
            if let Some(info) = table.pendant() {
                if table.pendant_decision(b, m) == Some(LeafDecision::Conserve) {
                    out.push(info.taxon);
                }
                continue;
            }
            if let (Backpointer::Split { left_budget, j, k }, Some((l, r))) = (table.backpointer(b, m), self.layout[node]) {
                let i = left_budget as usize;
                stack.push((r, b - i, k as usize));
                stack.push((l, i, j as usize));
            }
        }
        out.sort_unstable();
        out
    }

    /// Selection and table value of the best root entry.
    pub fn best_selection(&self) -> (Vec<usize>, f64) {
        let (m, value) = self.best_root_row();
        if value == f64::NEG_INFINITY {
            return (Vec::new(), 0.0);
        }
        (self.backtrace(self.budget, m), value)
    }
}

/// Builds every clade table bottom-up. The instance must be normalized.
pub fn build_tables(instance: &Instance, d: &Discretization, opts: &SolveOptions) -> Result<DpTables, SolveError> {
    if !instance.is_normalized() {
        return Err(SolveError::NotNormalized);
    }
    let tree = instance.tree();
    let budget = usize::try_from(instance.budget()).map_err(|_| SolveError::Internal("budget overflows usize".into()))?;
    let heights = tree.heights();
    let n_nodes = tree.len();

    let layout: Vec<Option<(NodeId, NodeId)>> = tree
        .nodes()
        .iter()
        .map(|node| match node.children.as_slice() {
            [] => None,
            &[l, r] => {
                // A pendant operand goes left so the reduced enumeration applies.
                if tree.node(r).is_leaf() && !tree.node(l).is_leaf() {
                    Some((r, l))
                } else {
                    Some((l, r))
                }
            }
            _ => unreachable!("normalized trees are binary"),
        })
        .collect();

    let max_height = heights[tree.root()] as usize;
    let mut levels: Vec<Vec<NodeId>> = vec![Vec::new(); max_height + 1];
    for id in 0..n_nodes {
        levels[heights[id] as usize].push(id);
    }

    let mut tables: Vec<Option<CladeTable>> = vec![None; n_nodes];
    let mut stats = CombineStats::default();
    for level in levels.iter().skip(1) {
        let build = |&id: &NodeId| -> (NodeId, CladeTable, Option<CombinePath>) {
            let node = tree.node(id);
            match (node.taxon, layout[id]) {
                (Some(t), _) => (id, build_pendant_table(t, &instance.taxa()[t], node.length, budget, d), None),
                (None, Some((l, r))) => {
                    let left = tables[l].as_ref().expect("child built on a lower level");
                    let right = tables[r].as_ref().expect("child built on a lower level");
                    let (table, path) = combine_tables(node.length, left, right, d, opts.fast_path);
                    (id, table, Some(path))
                }
                (None, None) => unreachable!("interior nodes have two children"),
            }
        };
        let built: Vec<_> = if opts.parallel {
            level.par_iter().map(build).collect()
        } else {
            level.iter().map(build).collect()
        };
        for (id, table, path) in built {
            match path {
                Some(CombinePath::Pendant) => stats.pendant_path += 1,
                Some(CombinePath::General) => stats.general_path += 1,
                None => {}
            }
            if let (false, Some((l, r))) = (opts.retain_scores, layout[id]) {
                for child in [l, r] {
                    if let Some(t) = tables[child].as_mut() {
                        if !t.is_pendant() {
                            t.release_scores();
                        }
                    }
                }
            }
            tables[id] = Some(table);
        }
    }
    let tables = tables
        .into_iter()
        .map(|t| t.ok_or_else(|| SolveError::Internal("unbuilt clade table".into())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DpTables { tables, layout, root: tree.root(), budget, stats })
}
