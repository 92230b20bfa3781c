//! Approximation and exact solvers for the Noah's Ark Problem: choose taxa
//! to conserve under a budget so that the expected phylogenetic diversity
//! of the surviving tree is maximal.
//!
//! [`solve`] runs the `(1 - epsilon)`-approximation; [`brute_force`] and
//! [`pardi_goldman`] are exact references.

pub mod baselines;
pub mod discretization;
pub mod generators;
pub mod instance;
pub mod io;
pub mod rmq;
pub mod solver;

pub use baselines::{brute_force, brute_force_with, pardi_goldman, BaselineError, ExactMethod, ExactSolution, BRUTE_FORCE_MAX_TAXA};
pub use discretization::{combine_prob, derive_k, select_params, Discretization, IndexRange, ParamError};
pub use generators::{gen_caterpillar, gen_yule, generate, AttributeLaw, BudgetRule, GenError, GenSpec, LengthLaw, SplitMix64, Topology};
pub use instance::{
    edge_survival, expected_pd, total_pd, ConservationSet, EvalError, Evaluator, Instance, InstanceMeta, Node, NodeId, PhyloTree,
    Taxon, ValidationError, Violation,
};
pub use io::{parse_instance, parse_solution, same_instance, write_instance, write_solution, Format, ParseError, SolutionDocument, SolverKind};
pub use rmq::RangeMaxIndex;
pub use solver::{build_tables, solve, CombineStats, DpTables, NapxSolution, SolveError, SolveOptions};
