//! Benchmark sweep: generated instances over a grid of sizes, budgets,
//! epsilons and topologies, one CSV row per solver run.

use std::io::Write;
use std::time::Instant;

use clap::Args;
use napx::{brute_force, generate, BudgetRule, GenSpec, Instance, SolveOptions, Topology, BRUTE_FORCE_MAX_TAXA};
use rayon::prelude::*;
use serde::Serialize;

use crate::{CliError, TopologyArg};

/// Bumped whenever the column set or meaning changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Leaf counts.
    #[arg(long, value_delimiter = ',', default_values_t = [10usize, 20, 40])]
    pub n: Vec<usize>,
    /// Budgets.
    #[arg(long, value_delimiter = ',', default_values_t = [5u64, 10])]
    pub budget: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5f64, 0.2])]
    pub epsilon: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [TopologyArg::Yule, TopologyArg::Caterpillar])]
    pub topology: Vec<TopologyArg>,
    /// Instances per grid point.
    #[arg(long, default_value_t = 2)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed_base: u64,
    /// Run brute force on instances with at most this many taxa.
    #[arg(long, default_value_t = 10)]
    pub oracle_max_n: usize,
    /// Add a row with the fast path disabled next to every run.
    #[arg(long)]
    pub paired_general: bool,
    /// Disable the fast path in every run.
    #[arg(long)]
    pub force_general_path: bool,
    /// Solve instances concurrently (timings become noisier).
    #[arg(long)]
    pub parallel: bool,
    /// CSV destination; standard output when omitted.
    #[arg(short, long)]
    pub output: Option<std::path::PathBuf>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BenchRecord {
    pub schema_version: u32,
    pub instance: String,
    pub topology: String,
    pub n: usize,
    pub budget: u64,
    pub h: u32,
    pub epsilon: f64,
    pub t: Option<usize>,
    pub solver: String,
    pub wall_ms: f64,
    pub reported_score: Option<f64>,
    pub evaluated_score: Option<f64>,
    pub oracle_score: Option<f64>,
    pub ratio: Option<f64>,
    pub status: String,
}

struct Job {
    topology: Topology,
    n: usize,
    budget: u64,
    seed: u64,
}

fn jobs(args: &BenchArgs) -> Vec<Job> {
    let mut out = Vec::new();
    for &topo in &args.topology {
        for &n in &args.n {
            for &budget in &args.budget {
                for s in 0..args.seeds {
                    out.push(Job { topology: topo.into(), n, budget, seed: args.seed_base + s });
                }
            }
        }
    }
    out
}

fn run_job(job: &Job, args: &BenchArgs) -> Vec<BenchRecord> {
    let spec = GenSpec::new(job.topology, job.n, job.seed).with_budget(BudgetRule::Fixed(job.budget));
    let base = BenchRecord {
        schema_version: SCHEMA_VERSION,
        instance: format!("{}-n{}-b{}-s{}", job.topology, job.n, job.budget, job.seed),
        topology: job.topology.to_string(),
        n: job.n,
        budget: job.budget,
        h: 0,
        epsilon: f64::NAN,
        t: None,
        solver: String::new(),
        wall_ms: 0.0,
        reported_score: None,
        evaluated_score: None,
        oracle_score: None,
        ratio: None,
        status: "ok".into(),
    };
    let inst = match generate(&spec) {
        Ok(i) => i,
        Err(e) => return vec![BenchRecord { status: format!("error: {e}"), ..base }],
    };
    let base = BenchRecord { h: inst.normalize().tree().height(), ..base };
    let oracle = (inst.num_taxa() <= args.oracle_max_n.min(BRUTE_FORCE_MAX_TAXA)).then(|| brute_force(&inst).map(|s| s.score).ok()).flatten();
    let mut rows = Vec::new();
    for &eps in &args.epsilon {
        let mut variants = vec![!args.force_general_path];
        if args.paired_general && !args.force_general_path {
            variants.push(false);
        }
        for fast_path in variants {
            rows.push(run_napx(&inst, &base, eps, fast_path, oracle));
        }
    }
    rows
}

fn run_napx(inst: &Instance, base: &BenchRecord, eps: f64, fast_path: bool, oracle: Option<f64>) -> BenchRecord {
    let opts = SolveOptions { fast_path, ..SolveOptions::with_epsilon(eps) };
    let solver = if fast_path { "napx" } else { "napx-general" };
    let start = Instant::now();
    let result = napx::solve(inst, &opts);
    let wall_ms = (start.elapsed().as_secs_f64() * 1e6).round() / 1e3;
    let mut row = BenchRecord { epsilon: eps, solver: solver.into(), wall_ms, oracle_score: oracle, ..base.clone() };
    match result {
        Ok(sol) => {
            row.t = sol.params.as_ref().map(|d| d.t());
            row.reported_score = Some(sol.reported_score);
            row.evaluated_score = Some(sol.score());
            row.ratio = oracle.map(|o| if o > 0.0 { sol.score() / o } else { 1.0 });
            if let Some(r) = row.ratio {
                if r < 1.0 - eps - 1e-9 {
                    row.status = format!("guarantee violated: ratio {r}");
                }
            }
        }
        Err(e) => row.status = format!("error: {e}"),
    }
    row
}

/// All records of a sweep, in grid order.
pub fn sweep(args: &BenchArgs) -> Vec<BenchRecord> {
    let jobs = jobs(args);
    let per_job: Vec<Vec<BenchRecord>> = if args.parallel {
        jobs.par_iter().map(|j| run_job(j, args)).collect()
    } else {
        jobs.iter().map(|j| run_job(j, args)).collect()
    };
    per_job.into_iter().flatten().collect()
}

pub fn write_csv(records: &[BenchRecord], out: &mut dyn Write) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(|e| CliError::Internal(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| CliError::Internal(format!("csv: {e}")))
}

pub fn run(args: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.epsilon.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(CliError::Input("every epsilon must lie in (0, 1)".into()));
    }
    let records = sweep(args);
    match &args.output {
        Some(path) => {
            let mut file = std::fs::File::create(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            write_csv(&records, &mut file)
        }
        None => write_csv(&records, out),
    }
}
