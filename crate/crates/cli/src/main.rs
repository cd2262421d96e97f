use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eoh_core::evolution::{RepresentationMode, Strategy};
use eoh_core::llm::BackendKind;
use eoh_core::orchestrator::{
    self, evaluate_baselines, metric_name, EvaluatorConfig, ExperimentConfig, ExportKind, OrchestratorError,
    RunSummary,
};
use eoh_core::problems::{ProblemKind, ProblemSettings};
use eoh_core::sandbox::SandboxOptions;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "eoh", version, about = "Evolve heuristics with a language model in the loop")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Start an evolution run.
    Run(RunArgs),
    /// Evaluate named reference heuristics and print a CSV report.
    Baselines(BaselineArgs),
    /// Continue a run from its latest checkpoint.
    Resume {
        dir: PathBuf,
        /// Stop after this generation.
        #[arg(long)]
        halt_after: Option<u32>,
    },
    /// Rebuild convergence.csv and/or best.code.txt from a run directory.
    Export {
        dir: PathBuf,
        #[arg(long, value_enum, default_value_t = What::All)]
        what: What,
    },
    /// Write the configured instance set to JSON files.
    GenInstances {
        #[arg(long)]
        problem: Option<ProblemKind>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        instances: InstanceArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    Convergence,
    BestCode,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Mock,
    Http,
}

#[derive(Args, Default)]
struct InstanceArgs {
    /// Number of generated instances.
    #[arg(long)]
    n_instances: Option<usize>,
    /// Items, cities or jobs per instance.
    #[arg(long)]
    size: Option<usize>,
    /// Bin capacity (bin packing only).
    #[arg(long)]
    capacity: Option<u32>,
    /// Seed of the first generated instance.
    #[arg(long)]
    first_seed: Option<u64>,
    /// Load instances from these JSON files instead of generating them.
    #[arg(long, num_args = 1..)]
    instance_files: Vec<PathBuf>,
}

impl InstanceArgs {
    fn apply(&self, settings: &mut ProblemSettings) -> Result<(), OrchestratorError> {
        let files = (!self.instance_files.is_empty()).then(|| self.instance_files.clone());
        match settings {
            ProblemSettings::BinPacking(s) => {
                set(&mut s.n_instances, self.n_instances);
                set(&mut s.n_items, self.size);
                set(&mut s.capacity, self.capacity);
                set(&mut s.first_seed, self.first_seed);
                set(&mut s.instance_files, files);
            }
            ProblemSettings::Tsp(s) => {
                set(&mut s.n_instances, self.n_instances);
                set(&mut s.n_cities, self.size);
                set(&mut s.first_seed, self.first_seed);
                set(&mut s.instance_files, files);
            }
            ProblemSettings::Fssp(s) => {
                set(&mut s.n_instances, self.n_instances);
                set(&mut s.n_jobs, self.size);
                set(&mut s.first_seed, self.first_seed);
                set(&mut s.instance_files, files);
            }
        }
        if self.capacity.is_some() && !matches!(settings, ProblemSettings::BinPacking(_)) {
            return Err(OrchestratorError::Config("--capacity applies to bin packing only".into()));
        }
        Ok(())
    }

    fn is_empty(&self) -> bool {
        self.n_instances.is_none()
            && self.size.is_none()
            && self.capacity.is_none()
            && self.first_seed.is_none()
            && self.instance_files.is_empty()
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<ProblemKind>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Population size N.
    #[arg(long)]
    pop: Option<usize>,
    /// Generations G.
    #[arg(long)]
    gens: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Parents per E1/E2 prompt.
    #[arg(long)]
    parents: Option<usize>,
    /// Comma-separated subset of E1,E2,M1,M2,M3.
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<Strategy>>,
    /// FULL, C2C, T2T2C or TC2T2C.
    #[arg(long)]
    mode: Option<RepresentationMode>,
    #[arg(long)]
    max_concurrent: Option<usize>,
    /// Chat-completions endpoint URL (http backend).
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long)]
    api_key_env: Option<String>,
    /// Run candidates in worker subprocesses started with this command line.
    #[arg(long)]
    worker: Option<String>,
    /// File whose code joins the initial population. Repeatable.
    #[arg(long)]
    seed_heuristic: Vec<PathBuf>,
    /// Run directory; defaults to <runs-dir>/<run id>.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "runs")]
    runs_dir: PathBuf,
    /// Stop after this generation, leaving a resumable directory.
    #[arg(long)]
    halt_after: Option<u32>,
    #[command(flatten)]
    instances: InstanceArgs,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long)]
    problem: Option<ProblemKind>,
    /// Comma-separated names; all baselines of the problem when omitted.
    #[arg(long, value_delimiter = ',')]
    names: Vec<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for stochastic heuristics.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    instances: InstanceArgs,
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, OrchestratorError> {
    path.map_or_else(|| Ok(ExperimentConfig::default()), ExperimentConfig::load)
}

fn with_problem(mut cfg: ExperimentConfig, problem: Option<ProblemKind>, instances: &InstanceArgs) -> Result<ExperimentConfig, OrchestratorError> {
    if let Some(p) = problem {
        cfg.set_problem(p);
    }
    if !instances.is_empty() {
        instances.apply(cfg.problem_settings_mut())?;
    }
    Ok(cfg)
}

fn build_run_config(a: &RunArgs) -> Result<ExperimentConfig, OrchestratorError> {
    let mut cfg = with_problem(load_config(a.config.as_deref())?, a.problem, &a.instances)?;
    let e = &mut cfg.evolution;
    set(&mut e.pop_size, a.pop);
    set(&mut e.generations, a.gens);
    set(&mut e.seed, a.seed);
    set(&mut e.parents, a.parents);
    set(&mut e.strategies, a.strategies.clone());
    set(&mut e.mode, a.mode);
    set(&mut e.max_concurrent, a.max_concurrent);
    for path in &a.seed_heuristic {
        let code = std::fs::read_to_string(path).map_err(|err| OrchestratorError::io(path, err))?;
        e.seed_heuristics.push(code);
    }
    if a.pop.is_some() && a.parents.is_none() && e.parents > e.pop_size {
        e.parents = e.pop_size;
    }
    let b = &mut cfg.backend;
    if let Some(kind) = a.backend {
        b.kind = match kind {
            BackendArg::Mock => BackendKind::Mock,
            BackendArg::Http => BackendKind::Http,
        };
    }
    set(&mut b.endpoint_url, a.endpoint.clone());
    set(&mut b.model_id, a.model.clone());
    set(&mut b.api_key_env, a.api_key_env.clone());
    if let Some(w) = &a.worker {
        let command: Vec<String> = w.split_whitespace().map(str::to_string).collect();
        cfg.evaluator = EvaluatorConfig::Sandbox(SandboxOptions::new(command));
    }
    Ok(cfg)
}

fn report_run(s: &RunSummary) {
    println!("run {} in {}", s.run_id, s.dir.display());
    match &s.result {
        Some(r) if r.halted => println!("halted after generation {}", r.completed),
        Some(r) => println!("completed {} generations, {} queries", r.completed, r.queries),
        None => println!("already finished; nothing to do"),
    }
    if let Some(b) = &s.best {
        println!("best {} fitness {}", b.heuristic.id, b.heuristic.fitness.unwrap_or(f64::NAN));
    }
}

fn execute(cli: Cli) -> Result<(), OrchestratorError> {
    match cli.command {
        Command::Run(a) => {
            let cfg = build_run_config(&a)?;
            report_run(&orchestrator::run_experiment(&cfg, a.out.as_deref(), &a.runs_dir, a.halt_after)?);
        }
        Command::Resume { dir, halt_after } => report_run(&orchestrator::resume_run(&dir, halt_after)?),
        Command::Export { dir, what } => {
            let kinds: &[ExportKind] = match what {
                What::Convergence => &[ExportKind::Convergence],
                What::BestCode => &[ExportKind::BestCode],
                What::All => &[ExportKind::Convergence, ExportKind::BestCode],
            };
            for &k in kinds {
                println!("{}", orchestrator::export(&dir, k)?.display());
            }
        }
        Command::Baselines(a) => {
            let cfg = with_problem(load_config(a.config.as_deref())?, a.problem, &a.instances)?;
            let problem = cfg.build_problem()?;
            let report = evaluate_baselines(&problem, &a.names, a.seed)?;
            let csv = report.to_csv();
            eprintln!("{} per instance, {}", metric_name(report.kind), problem.kind);
            print!("{csv}");
            if let Some(out) = &a.out {
                orchestrator::write_atomic(out, csv.as_bytes())?;
            }
        }
        Command::GenInstances { problem, out, config, instances } => {
            let cfg = with_problem(load_config(config.as_deref())?, problem, &instances)?;
            for p in orchestrator::gen_instances(&cfg.eval_config().problem, &out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("EOH_LOG").unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
