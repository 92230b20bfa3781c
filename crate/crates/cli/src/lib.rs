//! Command implementations behind the `napx` binary.

pub mod bench;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use napx::io::SolutionDocument;
use napx::{
    brute_force_with, generate, pardi_goldman, parse_instance, solve, write_instance, write_solution, BaselineError, BudgetRule,
    Format, GenError, GenSpec, Instance, ParseError, SolveError, SolveOptions, SolverKind, Topology,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Restriction(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Restriction(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<BaselineError> for CliError {
    fn from(e: BaselineError) -> Self {
        CliError::Restriction(e.to_string())
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Param(p) => CliError::Input(p.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "napx", version, about = "Budgeted conservation planning on phylogenetic trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Approximate solution with a (1 - epsilon) guarantee.
    Solve(SolveArgs),
    /// Exact solution by subset enumeration (at most 25 taxa).
    Exact(ExactArgs),
    /// Exact pseudopolynomial DP for instances with a=0 and b=1 everywhere.
    Pg(InputArgs),
    /// Generate a random instance.
    Gen(GenArgs),
    /// Sweep generated instances and write timing and quality records as CSV.
    Bench(bench::BenchArgs),
    /// Expected PD of a given selection.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Newick,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Newick => Format::Newick,
        }
    }
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Instance file (.nap.json or .nap.nwk).
    #[arg(short, long)]
    pub input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(short, long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Also run brute force and report the ratio.
    #[arg(long)]
    pub oracle: bool,
    /// Disable the pendant-child fast path.
    #[arg(long)]
    pub force_general_path: bool,
    /// Build each tree level in parallel.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Split the enumeration across threads.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TopologyArg {
    Yule,
    Caterpillar,
}

impl From<TopologyArg> for Topology {
    fn from(t: TopologyArg) -> Self {
        match t {
            TopologyArg::Yule => Topology::Yule,
            TopologyArg::Caterpillar => Topology::Caterpillar,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value_t = TopologyArg::Yule)]
    pub topology: TopologyArg,
    /// Number of leaves.
    #[arg(short)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fixed budget; default is ceil(total cost / 3).
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
    /// Output file; default is `<name>.nap.json` in the current directory.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated taxon ids.
    #[arg(short, long, value_delimiter = ',', num_args = 0..)]
    pub select: Vec<String>,
}

pub fn load(args: &InputArgs) -> Result<Instance, CliError> {
    let format = match args.format {
        Some(f) => f.into(),
        None => Format::from_path(&args.input)
            .ok_or_else(|| CliError::Input(format!("{}: cannot tell the format, use --format", args.input.display())))?,
    };
    let text = fs::read_to_string(&args.input).map_err(|e| CliError::Input(format!("{}: {e}", args.input.display())))?;
    parse_instance(&text, format).map_err(|e| CliError::Input(format!("{}: {e}", args.input.display())))
}

/// Runs one command, writing its normal output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => cmd_solve(&args, out),
        Command::Exact(args) => {
            let inst = load(&args.input)?;
            let sol = brute_force_with(&inst, args.parallel)?;
            emit(out, &write_solution(&SolutionDocument::from_exact(&inst, &sol, SolverKind::Exact)))
        }
        Command::Pg(args) => {
            let inst = load(&args)?;
            let sol = pardi_goldman(&inst)?;
            emit(out, &write_solution(&SolutionDocument::from_exact(&inst, &sol, SolverKind::Pg)))
        }
        Command::Gen(args) => cmd_gen(&args, out),
        Command::Bench(args) => bench::run(&args, out),
        Command::Eval(args) => cmd_eval(&args, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Internal(format!("cannot write output: {e}")))
}

fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let inst = load(&args.input)?;
    let opts = SolveOptions {
        epsilon: args.epsilon,
        fast_path: !args.force_general_path,
        parallel: args.parallel,
        retain_scores: false,
    };
    let sol = solve(&inst, &opts)?;
    if sol.set.total_cost > inst.budget() || sol.reported_score > sol.score() + 1e-6 {
        return Err(CliError::Internal(format!(
            "solution violates its invariants (cost {} of {}, reported {} above {})",
            sol.set.total_cost,
            inst.budget(),
            sol.reported_score,
            sol.score()
        )));
    }
    let mut doc = SolutionDocument::from_napx(&inst, &sol);
    if args.oracle {
        let exact = brute_force_with(&inst, args.parallel)?;
        doc = doc.with_oracle(exact.score);
    }
    emit(out, &write_solution(&doc))
}

fn cmd_gen(args: &GenArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut spec = GenSpec::new(args.topology.into(), args.n, args.seed);
    if let Some(b) = args.budget {
        spec = spec.with_budget(BudgetRule::Fixed(b));
    }
    let inst = generate(&spec)?;
    let format: Format = args.format.into();
    let path = match &args.output {
        Some(p) => p.clone(),
        None => PathBuf::from(format!("{}.{}", inst.meta.name.as_deref().unwrap_or("instance"), format.extension())),
    };
    write_file(&path, &write_instance(&inst, format))?;
    let total: u64 = inst.taxa().iter().map(|t| t.c).sum();
    emit(
        out,
        &format!(
            "{} n={} h={} total_cost={} budget={}\n",
            path.display(),
            inst.num_taxa(),
            inst.tree().height(),
            total,
            inst.budget()
        ),
    )
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let inst = load(&args.input)?;
    let idx = inst.resolve(args.select.iter().map(String::as_str)).map_err(|e| CliError::Input(e.to_string()))?;
    let set = inst.conservation_set(&idx);
    let doc = serde_json::json!({
        "score": set.score,
        "selected": set.selected,
        "total_cost": set.total_cost,
        "budget": inst.budget(),
        "feasible": set.total_cost <= inst.budget(),
    });
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    emit(out, &text)
}
