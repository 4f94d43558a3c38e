use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use trisaddle::saddle::export_system;
use trisaddle_bench::spec::{parse_config, ExperimentSpec, ProblemKind, SolverKind};
use trisaddle_bench::{run_suite, run_suite_parallel, verify_cmd};

/// Benchmark runner for block saddle point preconditioners.
#[derive(Parser)]
#[command(name = "bench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment or a config file of experiments and print a table
    Run(RunArgs),
    /// Dense spectral verification on a small instance, printed as JSON
    Verify(VerifyArgs),
    /// Write a problem's blocks and right-hand side to Matrix Market files
    Export(ExportArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// Problem family: example1, example2, random
    #[arg(long)]
    problem: Option<String>,
    /// Grid parameter for example1 and example2
    #[arg(long)]
    p: Option<usize>,
    /// Dimensions for the random family
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    /// Seed for the random family
    #[arg(long)]
    seed: Option<u64>,
}

impl ProblemArgs {
    fn into_spec(&self, solver: SolverKind) -> Result<ExperimentSpec, String> {
        let name = self
            .problem
            .as_deref()
            .ok_or("either --config or --problem is required")?;
        let problem: ProblemKind = name.parse().map_err(|e| format!("{e}"))?;
        let mut spec = ExperimentSpec::new(problem, solver);
        spec.p = self.p;
        spec.n = self.n;
        spec.m = self.m;
        spec.l = self.l;
        spec.seed = self.seed;
        Ok(spec)
    }
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file with [[experiment]] tables; excludes the per-experiment flags
    #[arg(
        long,
        conflicts_with_all = [
            "problem", "p", "n", "m", "l", "seed", "solver", "precond",
            "alpha", "beta", "inner", "tol", "maxit", "time_budget_seconds", "label",
        ]
    )]
    config: Option<PathBuf>,
    #[command(flatten)]
    problem: ProblemArgs,
    /// Solver: gmres or fgmres
    #[arg(long, default_value = "fgmres")]
    solver: String,
    /// Preconditioner: i, m, bd1, bd2, p1, p2, p3
    #[arg(long, default_value = "m")]
    precond: String,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Inner solve mode for the preconditioner blocks: chol or cg
    #[arg(long)]
    inner: Option<String>,
    /// Relative residual stopping tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Outer iteration cap
    #[arg(long)]
    maxit: Option<usize>,
    /// Wall-clock budget per experiment in seconds
    #[arg(long)]
    time_budget_seconds: Option<f64>,
    /// Row label override
    #[arg(long)]
    label: Option<String>,
    /// Directory to write table.csv and table.md into
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run experiments on separate threads; CPU columns become unreliable
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Closeness threshold for the unit-eigenvalue count
    #[arg(long)]
    tol: Option<f64>,
    /// Number of unit-sphere samples for the p+q range
    #[arg(long, default_value_t = 500)]
    samples: usize,
    /// Seed for the unit-sphere sampling
    #[arg(long, default_value_t = 42)]
    sample_seed: u64,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Directory to write the Matrix Market files into
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Export(args) => cmd_export(args),
    };
    ExitCode::from(code)
}

fn fail(message: impl std::fmt::Display) -> u8 {
    eprintln!("error: {message}");
    2
}

/// Write to stdout, tolerating a closed pipe (e.g. `bench ... | head`):
/// file outputs and the exit code still reflect the full run.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().write_all(text.as_bytes());
}

fn cmd_run(args: RunArgs) -> u8 {
    let specs: Vec<ExperimentSpec> = if let Some(path) = &args.config {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return fail(format!("cannot read {}: {e}", path.display())),
        };
        match parse_config(&text) {
            Ok(specs) => specs,
            Err(e) => return fail(format!("bad config {}: {e}", path.display())),
        }
    } else {
        let solver: SolverKind = match args.solver.parse() {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        let mut spec = match args.problem.into_spec(solver) {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        spec.precond = Some(args.precond.clone());
        spec.alpha = args.alpha;
        spec.beta = args.beta;
        spec.inner = args.inner.clone();
        spec.tol = args.tol;
        spec.maxit = args.maxit;
        spec.time_budget_seconds = args.time_budget_seconds;
        spec.label = args.label.clone();
        vec![spec]
    };

    if args.parallel {
        eprintln!("warning: --parallel runs experiments concurrently; CPU columns are unreliable");
    }
    let report = if args.parallel {
        run_suite_parallel(&specs)
    } else {
        run_suite(&specs)
    };

    emit(&report.to_markdown());

    if let Some(dir) = &args.out {
        if let Err(e) = fs::create_dir_all(dir) {
            return fail(format!("cannot create {}: {e}", dir.display()));
        }
        if let Err(e) = fs::write(dir.join("table.csv"), report.to_csv()) {
            return fail(format!("cannot write table.csv: {e}"));
        }
        if let Err(e) = fs::write(dir.join("table.md"), report.to_markdown()) {
            return fail(format!("cannot write table.md: {e}"));
        }
    }

    if report.any_error() {
        2
    } else if report.any_dnc() {
        1
    } else {
        0
    }
}

fn cmd_verify(args: VerifyArgs) -> u8 {
    let mut spec = match args.problem.into_spec(SolverKind::Gmres) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    spec.alpha = args.alpha;
    spec.beta = args.beta;
    spec.tol = args.tol;

    let report = match verify_cmd(&spec, args.samples, args.sample_seed) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let json = match serde_json::to_string_pretty(&report) {
        Ok(j) => j,
        Err(e) => return fail(e),
    };
    match &args.out {
        Some(path) => {
            if let Err(e) = fs::write(path, json) {
                return fail(format!("cannot write {}: {e}", path.display()));
            }
            emit(&format!("wrote {}\n", path.display()));
        }
        None => emit(&format!("{json}\n")),
    }
    if report.passed {
        0
    } else {
        1
    }
}

fn cmd_export(args: ExportArgs) -> u8 {
    let spec = match args.problem.into_spec(SolverKind::Gmres) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let system = match spec.build_system() {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    if let Err(e) = export_system(&system, &args.out) {
        return fail(e);
    }
    emit(&format!(
        "wrote blocks of order {} (n={}, m={}, l={}) to {}\n",
        system.total_order(),
        system.n(),
        system.m(),
        system.l(),
        args.out.display()
    ));
    0
}
