//! Run directories, resumption, export, baseline reports and instance files.

mod baselines;
mod config;
mod store;

pub use baselines::{baseline_names, evaluate_baselines, metric_name, BaselineReport, BaselineRow};
pub use config::{EvaluatorConfig, ExperimentConfig};
pub use store::{
    best_record, convergence_csv, write_atomic, CandidateRecord, Checkpoint, ConvergenceRow, RunDir, RunRecorder,
    TimingRecord, BEST_CODE_FILE, BEST_FILE, CANDIDATES_FILE, CONFIG_FILE, CONVERGENCE_FILE, QUERIES_FILE,
    TIMINGS_FILE,
};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::evolution::{Engine, RunError, RunResult};
use crate::llm::LlmError;
use crate::problems::{InstanceSet, ProblemSettings};

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("unknown baseline {name:?}; known: {}", known.join(", "))]
    UnknownBaseline { name: String, known: Vec<String> },
    #[error("problem setup failed: {0}")]
    Problem(String),
    #[error(transparent)]
    Run(#[from] RunError),
}

impl OrchestratorError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        OrchestratorError::Io { path: path.to_path_buf(), source }
    }

    /// Process exit status for the command line.
    pub fn exit_code(&self) -> i32 {
        match self {
            OrchestratorError::Run(RunError::NoFeasibleInitial { .. }) => 2,
            OrchestratorError::Run(RunError::Backend(LlmError::AuthError(_))) => 3,
            OrchestratorError::UnknownBaseline { .. } => 4,
            _ => 1,
        }
    }
}

#[derive(Debug)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub run_id: String,
    pub result: Option<RunResult>,
    pub best: Option<CandidateRecord>,
}

fn write_config(dir: &RunDir, config: &ExperimentConfig) -> Result<(), OrchestratorError> {
    let mut json = serde_json::to_string_pretty(config).expect("config serializes");
    json.push('\n');
    write_atomic(&dir.file(CONFIG_FILE), json.as_bytes())
}

fn run_engine<F>(config: &ExperimentConfig, recorder: &mut RunRecorder, go: F) -> Result<RunResult, OrchestratorError>
where
    F: FnOnce(&Engine<'_>, &mut RunRecorder) -> Result<RunResult, RunError>,
{
    let problem = config.build_problem()?;
    let backend = config.build_backend()?;
    let evaluator = config.build_evaluator();
    let engine = Engine::new(&config.evolution, &problem, backend.as_ref(), evaluator.as_ref(), config.request_settings());
    Ok(go(&engine, recorder)?)
}

/// Starts a run in `out`, or in `runs_root/<run_id>` when `out` is `None`.
/// Artifacts written before a failure stay on disk.
pub fn run_experiment(
    config: &ExperimentConfig,
    out: Option<&Path>,
    runs_root: &Path,
    halt_after: Option<u32>,
) -> Result<RunSummary, OrchestratorError> {
    config.validate()?;
    let run_id = config.run_id();
    let path = out.map_or_else(|| runs_root.join(&run_id), Path::to_path_buf);
    std::fs::create_dir_all(&path).map_err(|e| OrchestratorError::io(&path, e))?;
    let dir = RunDir::new(&path);
    write_config(&dir, config)?;
    let mut recorder = RunRecorder::create(dir, run_id.clone(), config.evolution.mode)?.halt_after(halt_after);
    let result = run_engine(config, &mut recorder, |e, r| e.run(r))?;
    Ok(RunSummary { dir: path, run_id, result: Some(result), best: recorder.best().cloned() })
}

/// Continues a run from its latest checkpoint. A finished run is left as is.
pub fn resume_run(path: &Path, halt_after: Option<u32>) -> Result<RunSummary, OrchestratorError> {
    let dir = RunDir::new(path);
    let config = ExperimentConfig::load(&dir.file(CONFIG_FILE))?;
    config.validate()?;
    let run_id = config.run_id();
    let checkpoint = dir.latest_checkpoint()?;
    if checkpoint.population.capacity != config.evolution.pop_size {
        return Err(OrchestratorError::CorruptCheckpoint("population size differs from config.json".into()));
    }
    if checkpoint.generation >= config.evolution.generations {
        let best = best_record(&dir.read_candidates()?).cloned();
        return Ok(RunSummary { dir: path.to_path_buf(), run_id, result: None, best });
    }
    let g = checkpoint.generation;
    let mut recorder =
        RunRecorder::reopen(dir, run_id.clone(), config.evolution.mode, &checkpoint)?.halt_after(halt_after);
    let pop = checkpoint.population;
    let result = run_engine(&config, &mut recorder, move |e, r| e.resume(pop, g, r))?;
    Ok(RunSummary { dir: path.to_path_buf(), run_id, result: Some(result), best: recorder.best().cloned() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportKind {
    Convergence,
    BestCode,
}

/// Rebuilds the requested artifact from checkpoints and the candidate log.
pub fn export(path: &Path, what: ExportKind) -> Result<PathBuf, OrchestratorError> {
    let dir = RunDir::new(path);
    match what {
        ExportKind::Convergence => {
            let latest = dir.latest_checkpoint()?.generation;
            let rows = dir.convergence_from_checkpoints(latest)?;
            dir.write_convergence(&rows)
        }
        ExportKind::BestCode => {
            let records = dir.read_candidates()?;
            let best = best_record(&records)
                .ok_or_else(|| OrchestratorError::CorruptCheckpoint("no feasible candidate in the log".into()))?;
            dir.write_best_code(best)
        }
    }
}

/// Writes each instance of `settings` as `instance_<i>.json`, in the format
/// the `instance_files` settings read back.
pub fn gen_instances(settings: &ProblemSettings, out: &Path) -> Result<Vec<PathBuf>, OrchestratorError> {
    let set = InstanceSet::build(settings).map_err(OrchestratorError::Problem)?;
    std::fs::create_dir_all(out).map_err(|e| OrchestratorError::io(out, e))?;
    let docs: Result<Vec<String>, _> = match &set {
        InstanceSet::BinPacking(v) => v.iter().map(|(i, _)| serde_json::to_string(i)).collect(),
        InstanceSet::Tsp(v) => v.iter().map(|i| serde_json::to_string(&i.to_bundle())).collect(),
        InstanceSet::Fssp(v) => v.iter().map(|i| serde_json::to_string(&i.to_file())).collect(),
    };
    let docs = docs.map_err(|e| OrchestratorError::Problem(e.to_string()))?;
    let mut paths = Vec::with_capacity(docs.len());
    for (i, mut doc) in docs.into_iter().enumerate() {
        doc.push('\n');
        let p = out.join(format!("instance_{i}.json"));
        write_atomic(&p, doc.as_bytes())?;
        paths.push(p);
    }
    Ok(paths)
}
