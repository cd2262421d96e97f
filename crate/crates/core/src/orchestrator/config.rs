use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::OrchestratorError;
use crate::evolution::{RequestSettings, RunConfig};
use crate::llm::{stable_hash, Backend, BackendConfig};
use crate::problems::registry::Registry;
use crate::problems::{EvalConfig, Problem, ProblemKind, ProblemSettings};
use crate::prompt::PromptTemplateSet;
use crate::sandbox::{Evaluator, NativeRegistryEvaluator, SandboxEvaluator, SandboxOptions};

/// Where candidate code runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvaluatorConfig {
    /// In-process ports of the shipped heuristics; anything else fails to load.
    #[default]
    Native,
    Sandbox(SandboxOptions),
}

/// Everything a run needs. Stored verbatim as `config.json` in the run
/// directory.
///
/// ```json
/// {
///   "problem": "binpacking",
///   "evolution": {"pop_size": 20, "generations": 20, "parents": 5, "mode": "FULL", "seed": 0},
///   "backend": {"kind": "http", "endpoint_url": "...", "model_id": "...", "api_key_env": "EOH_API_KEY"},
///   "eval": {"problem": {"kind": "binpacking", "n_instances": 5, "n_items": 5000}},
///   "evaluator": {"kind": "sandbox", "command": ["python3", "-m", "eoh_worker"], "load_timeout_ms": 5000, "max_idle": 4},
///   "templates_dir": null
/// }
/// ```
///
/// Every section is optional; `eval` defaults to the problem's standard
/// instance set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub evolution: RunConfig,
    pub backend: BackendConfig,
    pub eval: Option<EvalConfig>,
    pub evaluator: EvaluatorConfig,
    pub templates_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::BinPacking,
            evolution: RunConfig::default(),
            backend: BackendConfig::default(),
            eval: None,
            evaluator: EvaluatorConfig::default(),
            templates_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, OrchestratorError> {
        let text = std::fs::read_to_string(path).map_err(|e| OrchestratorError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| OrchestratorError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), OrchestratorError> {
        self.evolution.validate().map_err(OrchestratorError::Config)?;
        self.backend.validate().map_err(|e| OrchestratorError::Config(e.to_string()))?;
        if let Some(eval) = &self.eval {
            if eval.problem.kind() != self.problem {
                return Err(OrchestratorError::Config(format!(
                    "eval settings are for {}, but the problem is {}",
                    eval.problem.kind(),
                    self.problem
                )));
            }
        }
        if let EvaluatorConfig::Sandbox(s) = &self.evaluator {
            if s.command.is_empty() {
                return Err(OrchestratorError::Config("sandbox evaluator needs a command".into()));
            }
        }
        Ok(())
    }

    /// Switching problems drops eval settings that belong to the old one.
    pub fn set_problem(&mut self, kind: ProblemKind) {
        if self.problem != kind {
            self.problem = kind;
            self.eval = None;
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        self.eval.clone().unwrap_or_else(|| EvalConfig::default_for(self.problem))
    }

    /// Mutable access to the instance settings, materializing defaults.
    pub fn problem_settings_mut(&mut self) -> &mut ProblemSettings {
        if self.eval.is_none() {
            self.eval = Some(EvalConfig::default_for(self.problem));
        }
        &mut self.eval.as_mut().expect("just set").problem
    }

    /// Content address of the whole configuration, seed included.
    pub fn run_id(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        format!("{:016x}", stable_hash(&canonical))
    }

    pub fn request_settings(&self) -> RequestSettings {
        RequestSettings { temperature: self.backend.temperature, max_tokens: self.backend.max_tokens }
    }

    pub fn build_problem(&self) -> Result<Problem, OrchestratorError> {
        let templates = match &self.templates_dir {
            Some(dir) => PromptTemplateSet::load_dir(self.problem, dir)
                .map_err(|e| OrchestratorError::Config(format!("templates: {e}")))?,
            None => PromptTemplateSet::builtin(self.problem),
        };
        Problem::new(self.eval_config(), templates).map_err(OrchestratorError::Problem)
    }

    pub fn build_backend(&self) -> Result<Box<dyn Backend>, OrchestratorError> {
        self.backend.build(self.problem).map_err(|e| OrchestratorError::Config(e.to_string()))
    }

    pub fn build_evaluator(&self) -> Box<dyn Evaluator> {
        match &self.evaluator {
            EvaluatorConfig::Native => Box::new(NativeRegistryEvaluator::new(Registry::builtin(
                self.problem,
                &self.problem.function_spec().function_name,
            ))),
            EvaluatorConfig::Sandbox(options) => Box::new(SandboxEvaluator::new(options.clone())),
        }
    }
}
