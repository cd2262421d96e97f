//! Initialization and the generational loop.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::population::manage_population;
use super::selection::select_parents;
use super::types::{Heuristic, Population, RepresentationMode, Strategy};
use crate::llm::{stable_hash, Backend, ChatRequest, LlmError};
use crate::problems::{Evaluation, Problem};
use crate::prompt::{build_materialize_prompt, build_prompt, expectation, parse_response, Expect};
use crate::sandbox::Evaluator;
use crate::seed::derive;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Population size N.
    pub pop_size: usize,
    /// Generations G.
    pub generations: u32,
    /// Parents per E1/E2 prompt.
    pub parents: usize,
    pub strategies: Vec<Strategy>,
    pub mode: RepresentationMode,
    pub seed: u64,
    /// Initialization batches of N attempts allowed while the population is empty.
    pub init_multiplier: usize,
    pub max_concurrent: usize,
    /// Code texts evaluated into the initial population.
    pub seed_heuristics: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pop_size: 20,
            generations: 20,
            parents: 5,
            strategies: Strategy::EVOLUTION.to_vec(),
            mode: RepresentationMode::Full,
            seed: 0,
            init_multiplier: 3,
            max_concurrent: 4,
            seed_heuristics: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.pop_size == 0 {
            return Err("pop_size must be at least 1".into());
        }
        if self.generations == 0 {
            return Err("generations must be at least 1".into());
        }
        if self.parents == 0 || self.parents > self.pop_size {
            return Err(format!("parents must be in 1..={}", self.pop_size));
        }
        if self.strategies.is_empty() {
            return Err("at least one strategy must be enabled".into());
        }
        if self.strategies.contains(&Strategy::Init) {
            return Err("INIT is not an evolution strategy".into());
        }
        let mut seen = self.strategies.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.strategies.len() {
            return Err("strategies must not repeat".into());
        }
        if self.init_multiplier == 0 || self.max_concurrent == 0 {
            return Err("init_multiplier and max_concurrent must be at least 1".into());
        }
        Ok(())
    }
}

/// Sampling settings copied into every request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RequestSettings {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for RequestSettings {
    fn default() -> Self {
        Self { temperature: 1.0, max_tokens: 2048 }
    }
}

/// One generation attempt, feasible or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    #[serde(flatten)]
    pub heuristic: Heuristic,
    pub prompt_hash: String,
    pub reply_hash: Option<String>,
    /// Wall time of evaluation; excluded from deterministic logs.
    #[serde(skip)]
    pub eval_wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: u32,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub population_size: usize,
}

impl GenerationStats {
    pub fn of(generation: u32, p: &Population) -> Self {
        Self {
            generation,
            best_fitness: p.best_fitness().unwrap_or(f64::NAN),
            mean_fitness: p.mean_fitness().unwrap_or(f64::NAN),
            population_size: p.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub population: Population,
    pub history: Vec<GenerationStats>,
    pub queries: u64,
    /// Last completed generation.
    pub completed: u32,
    /// True when the observer asked to stop before `generations`.
    pub halted: bool,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("no feasible heuristic after {attempts} initialization attempts")]
    NoFeasibleInitial { attempts: usize },
    #[error("backend failure: {0}")]
    Backend(LlmError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("observer failed: {0}")]
    Observer(String),
}

/// Hooks for persistence. All methods run on the coordinating thread.
pub trait Observer {
    fn candidates(&mut self, _generation: u32, _records: &[Candidate]) -> Result<(), String> {
        Ok(())
    }

    fn generation_done(&mut self, _generation: u32, _population: &Population, _queries: u64) -> Result<(), String> {
        Ok(())
    }

    /// Checked after each completed generation.
    fn should_stop(&mut self, _generation: u32) -> bool {
        false
    }
}

/// Observer that records nothing.
pub struct NoObserver;

impl Observer for NoObserver {}

struct Job {
    id: String,
    generation: u32,
    strategy: Strategy,
    parents: Vec<Heuristic>,
    seed: u64,
}

fn hex(h: u64) -> String {
    format!("{h:016x}")
}

fn strategy_tag(s: Strategy) -> u64 {
    match s {
        Strategy::Init => 0,
        Strategy::E1 => 1,
        Strategy::E2 => 2,
        Strategy::M1 => 3,
        Strategy::M2 => 4,
        Strategy::M3 => 5,
    }
}

pub struct Engine<'a> {
    pub config: &'a RunConfig,
    pub problem: &'a Problem,
    pub backend: &'a dyn Backend,
    pub evaluator: &'a dyn Evaluator,
    pub request: RequestSettings,
    memo: Mutex<HashMap<String, Result<Evaluation, String>>>,
}

impl<'a> Engine<'a> {
    pub fn new(
        config: &'a RunConfig,
        problem: &'a Problem,
        backend: &'a dyn Backend,
        evaluator: &'a dyn Evaluator,
        request: RequestSettings,
    ) -> Self {
        Self { config, problem, backend, evaluator, request, memo: Mutex::new(HashMap::new()) }
    }

    /// Probe plus full evaluation. Seeded by the code text so repeated
    /// evaluations of the same code agree regardless of scheduling.
    pub fn evaluate_code(&self, code: &str) -> (Result<Evaluation, String>, u64) {
        if let Some(hit) = self.memo.lock().expect("memo lock").get(code) {
            return (hit.clone(), 0);
        }
        let t = Instant::now();
        let result = (|| {
            let mut session =
                self.evaluator.load(code, &self.problem.spec.function_name).map_err(|e| e.to_string())?;
            self.problem.probe(session.as_mut())?;
            let e = self.problem.evaluate(session.as_mut(), derive(&[self.config.seed, stable_hash(code)]))?;
            if !e.fitness.is_finite() {
                return Err(format!("non-finite fitness {}", e.fitness));
            }
            Ok(e)
        })();
        let ms = t.elapsed().as_millis() as u64;
        self.memo.lock().expect("memo lock").insert(code.to_string(), result.clone());
        (result, ms)
    }

    fn finish(&self, mut h: Heuristic, prompt_hash: String, reply_hash: Option<String>) -> Candidate {
        let (result, ms) = self.evaluate_code(&h.code);
        match result {
            Ok(e) => {
                h.fitness = Some(e.fitness);
                h.raw_score = Some(e.raw_score);
                h.feasible = true;
            }
            Err(e) => h.error = Some(format!("evaluation: {e}")),
        }
        Candidate { heuristic: h, prompt_hash, reply_hash, eval_wall_ms: ms }
    }

    fn ask(&self, prompt: &str, id: &str, seed: u64) -> Result<String, LlmError> {
        self.backend.complete(&ChatRequest {
            prompt: prompt.to_string(),
            temperature: self.request.temperature,
            max_tokens: self.request.max_tokens,
            request_id: id.to_string(),
            seed,
        })
    }

    /// Runs one attempt. Only fatal backend errors escape; everything else
    /// becomes an infeasible record.
    fn attempt(&self, job: &Job) -> Result<Candidate, LlmError> {
        let mode = self.config.mode;
        let mut h = Heuristic {
            id: job.id.clone(),
            thought: String::new(),
            code: String::new(),
            fitness: None,
            raw_score: None,
            generation: job.generation,
            strategy: job.strategy,
            parent_ids: job.parents.iter().map(|p| p.id.clone()).collect(),
            feasible: false,
            error: None,
        };
        let p = &self.problem;
        let prompt = match build_prompt(&p.templates, &p.spec, job.strategy, &job.parents, mode, self.config.parents) {
            Ok(s) => s,
            Err(e) => {
                h.error = Some(format!("prompt: {e}"));
                return Ok(Candidate { heuristic: h, prompt_hash: String::new(), reply_hash: None, eval_wall_ms: 0 });
            }
        };
        let prompt_hash = hex(stable_hash(&prompt));
        let fail = |mut h: Heuristic, reply_hash: Option<String>, msg: String| {
            h.error = Some(msg);
            Ok(Candidate { heuristic: h, prompt_hash: prompt_hash.clone(), reply_hash, eval_wall_ms: 0 })
        };
        let reply = match self.ask(&prompt, &job.id, job.seed) {
            Ok(r) => r,
            Err(e) if e.is_fatal() => return Err(e),
            Err(e) => return fail(h, None, format!("backend: {e}")),
        };
        let mut reply_hash = hex(stable_hash(&reply));
        let parsed = match parse_response(&reply, &p.spec, expectation(mode)) {
            Ok(r) => r,
            Err(e) => return fail(h, Some(reply_hash), format!("parse: {e}")),
        };
        h.thought = parsed.thought;
        match parsed.code {
            Some(code) if !mode.two_call() => h.code = code,
            _ => {
                let follow = build_materialize_prompt(&p.templates, &p.spec, &h.thought);
                let second = match self.ask(&follow, &format!("{}-code", job.id), derive(&[job.seed, 1])) {
                    Ok(r) => r,
                    Err(e) if e.is_fatal() => return Err(e),
                    Err(e) => return fail(h, Some(reply_hash), format!("backend: {e}")),
                };
                reply_hash = hex(stable_hash(&format!("{reply}\u{0}{second}")));
                match parse_response(&second, &p.spec, Expect::CodeOnly) {
                    Ok(r) => h.code = r.code.expect("code-only parse yields code"),
                    Err(e) => return fail(h, Some(reply_hash), format!("parse: {e}")),
                }
            }
        }
        Ok(self.finish(h, prompt_hash, Some(reply_hash)))
    }

    /// Runs jobs with at most `max_concurrent` in flight; results keep job order.
    fn run_jobs(&self, jobs: &[Job]) -> Result<Vec<Candidate>, RunError> {
        let next = AtomicUsize::new(0);
        let abort = AtomicBool::new(false);
        let slots: Mutex<Vec<Option<Result<Candidate, LlmError>>>> = Mutex::new(vec![None; jobs.len()]);
        let workers = self.config.max_concurrent.min(jobs.len()).max(1);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    if abort.load(Ordering::SeqCst) {
                        break;
                    }
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(job) = jobs.get(i) else { break };
                    let r = self.attempt(job);
                    if r.is_err() {
                        abort.store(true, Ordering::SeqCst);
                    }
                    slots.lock().expect("slots lock")[i] = Some(r);
                });
            }
        });
        let mut out = Vec::with_capacity(jobs.len());
        for slot in slots.into_inner().expect("slots lock") {
            match slot {
                Some(Ok(c)) => out.push(c),
                Some(Err(e)) => return Err(RunError::Backend(e)),
                None => {}
            }
        }
        if out.len() != jobs.len() {
            return Err(RunError::Backend(LlmError::Transport("attempts aborted".into())));
        }
        Ok(out)
    }

    fn seed_candidates(&self) -> Vec<Candidate> {
        self.config
            .seed_heuristics
            .iter()
            .enumerate()
            .map(|(k, code)| {
                let h = Heuristic {
                    id: format!("g0-seed-{k}"),
                    thought: "Heuristic supplied with the run configuration.".into(),
                    code: code.trim().to_string(),
                    fitness: None,
                    raw_score: None,
                    generation: 0,
                    strategy: Strategy::Init,
                    parent_ids: vec![],
                    feasible: false,
                    error: None,
                };
                self.finish(h, String::new(), None)
            })
            .collect()
    }

    /// Seed heuristics, then batches of N INIT attempts until the population
    /// is non-empty or the batch allowance runs out.
    pub fn initialize(&self, observer: &mut dyn Observer) -> Result<Population, RunError> {
        let n = self.config.pop_size;
        let mut pop = Population::empty(n);
        let seeds = self.seed_candidates();
        let mut attempts = seeds.len();
        observer.candidates(0, &seeds).map_err(RunError::Observer)?;
        pop = manage_population(&pop, &heuristics(&seeds), n);
        for batch in 0..self.config.init_multiplier {
            if batch > 0 && !pop.is_empty() {
                break;
            }
            let jobs: Vec<Job> = (0..n)
                .map(|i| {
                    let idx = batch * n + i;
                    Job {
                        id: format!("g0-init-{idx}"),
                        generation: 0,
                        strategy: Strategy::Init,
                        parents: vec![],
                        seed: derive(&[self.config.seed, 0, strategy_tag(Strategy::Init), idx as u64]),
                    }
                })
                .collect();
            let records = self.run_jobs(&jobs)?;
            attempts += records.len();
            observer.candidates(0, &records).map_err(RunError::Observer)?;
            pop = manage_population(&pop, &heuristics(&records), n);
        }
        if pop.is_empty() {
            return Err(RunError::NoFeasibleInitial { attempts });
        }
        observer.generation_done(0, &pop, self.backend.queries()).map_err(RunError::Observer)?;
        Ok(pop)
    }

    /// N attempts per enabled strategy, parents drawn up front from the
    /// generation-start snapshot, then one elitist merge.
    pub fn evolve_generation(&self, pop: &Population, generation: u32) -> Result<(Population, Vec<Candidate>), RunError> {
        let cfg = self.config;
        let mut rng = ChaCha8Rng::seed_from_u64(derive(&[cfg.seed, u64::from(generation), 0x5E1EC7]));
        let mut jobs = Vec::with_capacity(cfg.strategies.len() * cfg.pop_size);
        for &s in &cfg.strategies {
            for i in 0..cfg.pop_size {
                let parents = select_parents(pop, s.arity(cfg.parents), &mut rng)
                    .map_err(|e| RunError::InvalidConfig(e.to_string()))?;
                jobs.push(Job {
                    id: format!("g{generation}-{}-{i}", s.as_str().to_ascii_lowercase()),
                    generation,
                    strategy: s,
                    parents,
                    seed: derive(&[cfg.seed, u64::from(generation), strategy_tag(s), i as u64]),
                });
            }
        }
        let records = self.run_jobs(&jobs)?;
        let next = manage_population(pop, &heuristics(&records), cfg.pop_size);
        Ok((next, records))
    }

    pub fn run(&self, observer: &mut dyn Observer) -> Result<RunResult, RunError> {
        self.config.validate().map_err(RunError::InvalidConfig)?;
        let pop = self.initialize(observer)?;
        if observer.should_stop(0) {
            return Ok(RunResult {
                history: vec![GenerationStats::of(0, &pop)],
                population: pop,
                queries: self.backend.queries(),
                completed: 0,
                halted: true,
            });
        }
        self.resume(pop, 0, observer)
    }

    /// Continues after generation `completed` from its population.
    pub fn resume(&self, mut pop: Population, completed: u32, observer: &mut dyn Observer) -> Result<RunResult, RunError> {
        self.config.validate().map_err(RunError::InvalidConfig)?;
        let mut history = vec![GenerationStats::of(completed, &pop)];
        let mut last = completed;
        for g in completed + 1..=self.config.generations {
            let (next, records) = self.evolve_generation(&pop, g)?;
            observer.candidates(g, &records).map_err(RunError::Observer)?;
            pop = next;
            observer.generation_done(g, &pop, self.backend.queries()).map_err(RunError::Observer)?;
            history.push(GenerationStats::of(g, &pop));
            last = g;
            if g < self.config.generations && observer.should_stop(g) {
                return Ok(RunResult { population: pop, history, queries: self.backend.queries(), completed: g, halted: true });
            }
        }
        Ok(RunResult { population: pop, history, queries: self.backend.queries(), completed: last, halted: false })
    }
}

fn heuristics(records: &[Candidate]) -> Vec<Heuristic> {
    records.iter().map(|c| c.heuristic.clone()).collect()
}
