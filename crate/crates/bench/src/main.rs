use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sparse_ht::async_solver::{AsyncConfig, AsyncMode};
use sparse_ht::datagen::{generate_instance, write_instance, CorruptionSpec, InstanceSpec, ModelKind};
use sparse_ht::verify;
use sparse_ht_bench::error::{EXIT_OK, EXIT_USAGE};
use sparse_ht_bench::{
    best_rows, load_problem, run_solver, run_sweep, summary_csv, write_sweep, BenchError, ExperimentConfig,
    ProblemConfig, ProblemSource, SolverEntry, SolverKind,
};

#[derive(Parser)]
#[command(
    name = "sparse-ht",
    version,
    about = "Sparse learning with hard thresholding solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance (binary container plus JSON sidecar).
    Gen(GenArgs),
    /// Run one solver and write its trace CSV.
    Solve(SolveArgs),
    /// Run a seeded sweep described by an experiment config.
    Sweep(SweepArgs),
    /// Run the randomized lemma and unbiasedness checks.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Linear,
    Logistic,
    LowRank,
    Corrupted,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Simulated,
    Threaded,
}

impl From<ModeArg> for AsyncMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Simulated => AsyncMode::Simulated,
            ModeArg::Threaded => AsyncMode::Threaded,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    /// InstanceSpec JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long)]
    nb: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Matrix columns (low-rank only).
    #[arg(long)]
    cols: Option<usize>,
    /// Nonzeros (or rank) of the planted truth.
    #[arg(long)]
    k_star: Option<usize>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Missing-data rate for corrupted instances.
    #[arg(long)]
    missing: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct SolverFlags {
    #[arg(long, value_enum)]
    solver: Option<SolverKind>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    /// Inner-loop length.
    #[arg(long)]
    m: Option<usize>,
    /// Effective-pass budget.
    #[arg(long)]
    passes: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// ℓ1 weight for prox_svrg.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    /// Experiment config; its problem and first solver entry are used.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Instance container written by `gen`.
    #[arg(long, conflicts_with = "config")]
    instance: Option<PathBuf>,
    /// Number of mini-batches (default: one sample each).
    #[arg(long)]
    batches: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Trace CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    flags: SolverFlags,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace the seed list.
    #[arg(long, num_args = 1..)]
    seed: Option<Vec<u64>>,
    /// Driver threads; defaults to the available parallelism.
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    flags: SolverFlags,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 1_000)]
    matrix_trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn apply_flags(entry: &mut SolverEntry, flags: &SolverFlags) {
    if let Some(s) = flags.solver {
        entry.solver = s;
    }
    let cfg = &mut entry.config;
    if let Some(eta) = flags.eta {
        cfg.step_size = eta;
        if !entry.solver.sweeps_l1_weight() {
            entry.params = Some(vec![eta]);
        }
    }
    if let Some(l) = flags.lambda {
        cfg.l1_weight = Some(l);
        if entry.solver.sweeps_l1_weight() {
            entry.params = Some(vec![l]);
        }
    }
    if let Some(k) = flags.k {
        cfg.sparsity = k;
    }
    if let Some(m) = flags.m {
        cfg.inner_length = Some(m);
    }
    if let Some(p) = flags.passes {
        cfg.pass_budget = Some(p);
    }
    if flags.workers.is_some() || flags.mode.is_some() {
        let acfg = entry.async_config.get_or_insert_with(AsyncConfig::default);
        if let Some(w) = flags.workers {
            acfg.workers = w;
        }
        if let Some(m) = flags.mode {
            acfg.mode = m.into();
        }
    }
}

fn gen(args: GenArgs) -> Result<(), BenchError> {
    let mut spec = match &args.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)
            .map_err(|e| BenchError::Usage(format!("{}: {e}", path.display())))?,
        None => InstanceSpec::standard(0.5, 0.0, 0),
    };
    if let Some(m) = args.model {
        spec.model = match m {
            ModelArg::Linear => ModelKind::Linear,
            ModelArg::Logistic => ModelKind::Logistic,
            ModelArg::LowRank => ModelKind::LowRank,
            ModelArg::Corrupted => ModelKind::Corrupted,
        };
    }
    macro_rules! set {
        ($($flag:ident => $field:ident),*) => { $(if let Some(v) = args.$flag { spec.$field = v; })* };
    }
    set!(nb => samples, d => dim, k_star => true_sparsity, c => correlation, sigma => noise_std, seed => seed);
    if args.cols.is_some() {
        spec.cols = args.cols;
    }
    if let Some(rho) = args.missing {
        spec.corruption = Some(CorruptionSpec::Missing { rho });
    }
    if spec.model == ModelKind::LowRank && spec.cols.is_none() {
        spec.cols = Some(spec.dim);
    }
    if spec.model == ModelKind::Corrupted && spec.corruption.is_none() {
        return Err(BenchError::Usage(
            "corrupted instances need --missing or a corruption in --config".into(),
        ));
    }
    let inst = generate_instance::<f64>(&spec)?;
    write_instance(&args.out, &inst)?;
    eprintln!(
        "wrote {} ({} x {}, truth {} entries)",
        args.out.display(),
        inst.design.rows(),
        inst.design.cols(),
        inst.truth.len()
    );
    Ok(())
}

fn solve(args: SolveArgs) -> Result<(), BenchError> {
    let (problem_cfg, mut entry) = match &args.config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            (cfg.problem, cfg.solvers[0].clone())
        }
        None => {
            let source = match &args.instance {
                Some(path) => ProblemSource::Container { path: path.clone() },
                None => ProblemSource::Generate {
                    spec: InstanceSpec::standard(0.5, 0.0, args.seed.unwrap_or(0)),
                },
            };
            let mut config = sparse_ht::SolverConfig::new(1.0 / 256.0, 100);
            config.pass_budget = Some(500.0);
            let entry = SolverEntry {
                solver: SolverKind::Svrg,
                config,
                async_config: None,
                schedule: None,
                params: None,
            };
            (
                ProblemConfig {
                    source,
                    batches: None,
                    radius: None,
                },
                entry,
            )
        }
    };
    let problem_cfg = ProblemConfig {
        batches: args.batches.or(problem_cfg.batches),
        ..problem_cfg
    };
    apply_flags(&mut entry, &args.flags);
    if let Some(s) = args.seed {
        entry.config.seed = s;
    }
    let (problem, meta) = load_problem(&problem_cfg, None)?;
    let (trace, diag) = run_solver(problem.objective(), &entry, &entry.config)?;
    let csv = trace.to_csv();
    match &args.out {
        Some(path) => std::fs::write(path, csv)?,
        None => std::io::stdout().write_all(csv.as_bytes())?,
    }
    let last = trace.last();
    eprintln!(
        "{} n={} b={} passes={} rel_objective={:e} rel_est_error={} stop={:?}",
        entry.solver.name(),
        meta.n,
        meta.b,
        trace.final_passes,
        last.relative_objective,
        last.estimation_error.map_or("NA".into(), |e| format!("{e:e}")),
        trace.stop_reason
    );
    if let Some(d) = diag {
        eprintln!("{}", serde_json::to_string(&d).expect("diagnostics serialize"));
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), BenchError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(out) = args.out {
        cfg.out_dir = out;
    }
    if let Some(seeds) = args.seed {
        cfg.seeds = seeds;
    }
    if let Some(p) = args.flags.passes {
        cfg.pass_budget = p;
    }
    if let Some(s) = args.flags.solver {
        cfg.solvers.retain(|e| e.solver == s);
        if cfg.solvers.is_empty() {
            return Err(BenchError::Usage(format!("config has no {} entry", s.name())));
        }
    }
    for entry in &mut cfg.solvers {
        apply_flags(
            entry,
            &SolverFlags {
                solver: None,
                ..args.flags.clone()
            },
        );
    }
    let threads = args
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let result = run_sweep(&cfg, threads)?;
    write_sweep(&cfg.out_dir, &result)?;
    print!("{}", summary_csv(&result.rows));
    for row in best_rows(&result.rows) {
        eprintln!(
            "best {}: param {:e}, median error {:e}",
            row.solver, row.param, row.median_err
        );
    }
    let diverged: usize = result.rows.iter().map(|r| r.diverged).sum();
    if diverged > 0 {
        let runs: usize = result.rows.iter().map(|r| r.runs).sum();
        return Err(BenchError::SweepDiverged(format!(
            "{diverged} of {runs} runs diverged (see the status column)"
        )));
    }
    Ok(())
}

fn verify_cmd(args: VerifyArgs) -> Result<(), BenchError> {
    let max_d = verify::MAX_VECTOR_DIM;
    let ht = verify::check_ht_lemma(args.trials, max_d, args.seed)?;
    let svt = verify::check_svt_lemma(args.matrix_trials, verify::MAX_MATRIX_DIM, args.seed)?;
    let diag = verify::check_svt_diagonal_reduction(200, verify::MAX_MATRIX_DIM, args.seed)?;
    let report = json!({
        "ht_lemma": ht,
        "svt_lemma": svt,
        "svt_diagonal_max_difference": diag,
    });
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    match &args.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    eprintln!(
        "ht: {} violations, {} oracle mismatches; svt: {} violations",
        ht.violations, ht.oracle_mismatches, svt.violations
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => sweep(a),
        Command::Verify(a) => verify_cmd(a),
    };
    match outcome {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
