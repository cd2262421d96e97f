use std::collections::BTreeSet;

use eoh_core::evolution::{
    manage_population, Candidate, Engine, NoObserver, Observer, Population, RepresentationMode, RequestSettings,
    RunConfig, RunError, Strategy,
};
use eoh_core::llm::{default_pool, Backend, ChatRequest, LlmError, MockBackend};
use eoh_core::problems::binpacking::BuiltinScorer;
use eoh_core::problems::registry::Registry;
use eoh_core::problems::{BinPackingSettings, EvalConfig, Problem, ProblemKind, ProblemSettings};
use eoh_core::prompt::PromptTemplateSet;
use eoh_core::sandbox::NativeRegistryEvaluator;

fn problem() -> Problem {
    let settings = BinPackingSettings { n_instances: 2, n_items: 400, ..Default::default() };
    Problem::new(
        EvalConfig { problem: ProblemSettings::BinPacking(settings), timeouts: Default::default() },
        PromptTemplateSet::builtin(ProblemKind::BinPacking),
    )
    .unwrap()
}

fn evaluator() -> NativeRegistryEvaluator {
    NativeRegistryEvaluator::new(Registry::builtin(ProblemKind::BinPacking, "score"))
}

fn config(pop: usize, gens: u32) -> RunConfig {
    RunConfig { pop_size: pop, generations: gens, parents: 2, ..Default::default() }
}

#[derive(Default)]
struct Recorder {
    records: Vec<Candidate>,
    populations: Vec<(u32, Population)>,
    stop_at: Option<u32>,
}

impl Observer for Recorder {
    fn candidates(&mut self, _g: u32, records: &[Candidate]) -> Result<(), String> {
        self.records.extend_from_slice(records);
        Ok(())
    }

    fn generation_done(&mut self, g: u32, population: &Population, _q: u64) -> Result<(), String> {
        self.populations.push((g, population.clone()));
        Ok(())
    }

    fn should_stop(&mut self, g: u32) -> bool {
        self.stop_at == Some(g)
    }
}

fn run(cfg: &RunConfig, backend: &dyn Backend) -> (Result<eoh_core::evolution::RunResult, RunError>, Recorder) {
    let p = problem();
    let ev = evaluator();
    let mut rec = Recorder::default();
    let r = Engine::new(cfg, &p, backend, &ev, RequestSettings::default()).run(&mut rec);
    (r, rec)
}

fn mock() -> MockBackend {
    MockBackend::new(default_pool(ProblemKind::BinPacking))
}

#[test]
fn mock_run_invariants() {
    let cfg = config(4, 3);
    let (r, rec) = run(&cfg, &mock());
    let r = r.unwrap();
    assert_eq!(r.completed, 3);
    assert!(!r.halted);
    assert_eq!(r.history.len(), 4);
    for w in r.history.windows(2) {
        assert!(w[1].best_fitness <= w[0].best_fitness);
    }
    for s in &r.history {
        assert!(s.best_fitness <= s.mean_fitness);
    }
    let init = rec.records.iter().filter(|c| c.heuristic.strategy == Strategy::Init).count();
    assert_eq!(init, 4);
    assert_eq!(rec.records.len(), init + 5 * 4 * 3);
    let strategies: BTreeSet<_> = rec.records.iter().map(|c| c.heuristic.strategy).collect();
    assert_eq!(strategies.len(), 6);
    for c in &rec.records {
        assert!(c.heuristic.is_consistent(), "{:?}", c.heuristic);
        assert!(!c.prompt_hash.is_empty());
        let arity = c.heuristic.strategy.arity(cfg.parents);
        assert_eq!(c.heuristic.parent_ids.len(), arity);
    }
    for (_, pop) in &rec.populations {
        assert!(pop.is_valid());
        assert!(pop.len() <= 4);
    }
    assert_eq!(r.queries, rec.records.len() as u64);
}

#[test]
fn identical_runs_give_identical_records() {
    let cfg = config(4, 2);
    let (_, a) = run(&cfg, &mock());
    let (_, b) = run(&cfg, &mock());
    let ja: Vec<String> = a.records.iter().map(|c| serde_json::to_string(c).unwrap()).collect();
    let jb: Vec<String> = b.records.iter().map(|c| serde_json::to_string(c).unwrap()).collect();
    assert_eq!(ja, jb);
    let other = RunConfig { seed: 9, ..cfg };
    let (_, c) = run(&other, &mock());
    let jc: Vec<String> = c.records.iter().map(|c| serde_json::to_string(c).unwrap()).collect();
    assert_ne!(ja, jc);
}

#[test]
fn replaying_records_reproduces_checkpoints() {
    let cfg = config(4, 3);
    let (_, rec) = run(&cfg, &mock());
    let mut pop = Population::empty(4);
    for (g, checkpoint) in &rec.populations {
        let batch: Vec<_> =
            rec.records.iter().filter(|c| c.heuristic.generation == *g).map(|c| c.heuristic.clone()).collect();
        pop = manage_population(&pop, &batch, 4);
        assert_eq!(&pop, checkpoint, "generation {g}");
    }
}

#[test]
fn unparseable_replies_exhaust_initialization() {
    let backend = MockBackend::new(vec!["I cannot help with that.".into()]);
    let (r, rec) = run(&config(4, 2), &backend);
    assert!(matches!(r, Err(RunError::NoFeasibleInitial { attempts: 12 })));
    assert_eq!(rec.records.len(), 12);
    assert!(rec.records.iter().all(|c| !c.heuristic.feasible && c.heuristic.error.as_deref().unwrap().starts_with("parse:")));
}

#[test]
fn seed_heuristics_rescue_initialization() {
    let backend = MockBackend::new(vec!["no code".into()]);
    let cfg = RunConfig { seed_heuristics: vec![BuiltinScorer::FirstFit.source("score")], ..config(4, 1) };
    let (r, rec) = run(&cfg, &backend);
    let r = r.unwrap();
    assert_eq!(r.population.members[0].id, "g0-seed-0");
    assert_eq!(rec.records[0].heuristic.strategy, Strategy::Init);
    // One seed plus a single batch: the population was non-empty after it.
    assert_eq!(rec.records.iter().filter(|c| c.heuristic.generation == 0).count(), 5);
}

#[test]
fn resume_matches_uninterrupted_run() {
    let cfg = config(4, 4);
    let (full, _) = run(&cfg, &mock());
    let full = full.unwrap();

    let p = problem();
    let ev = evaluator();
    let backend = mock();
    let mut rec = Recorder { stop_at: Some(2), ..Default::default() };
    let halted = Engine::new(&cfg, &p, &backend, &ev, RequestSettings::default()).run(&mut rec).unwrap();
    assert!(halted.halted);
    assert_eq!(halted.completed, 2);

    // Fresh engine, fresh memo, fresh backend counters.
    let backend = mock();
    let resumed = Engine::new(&cfg, &p, &backend, &ev, RequestSettings::default())
        .resume(halted.population, 2, &mut NoObserver)
        .unwrap();
    assert_eq!(resumed.population, full.population);
    assert_eq!(resumed.completed, 4);
}

#[test]
fn code_only_single_strategy() {
    let cfg = RunConfig { strategies: vec![Strategy::E1], mode: RepresentationMode::C2C, ..config(4, 2) };
    let (r, rec) = run(&cfg, &mock());
    let r = r.unwrap();
    assert!(rec.records.iter().all(|c| c.heuristic.thought.is_empty()));
    assert!(rec.records.iter().all(|c| matches!(c.heuristic.strategy, Strategy::E1 | Strategy::Init)));
    assert_eq!(rec.records.len(), 4 + 4 * 2);
    assert_eq!(r.queries, 12);
}

#[test]
fn two_call_modes_double_queries() {
    for mode in [RepresentationMode::T2T2C, RepresentationMode::TC2T2C] {
        let cfg = RunConfig { strategies: vec![Strategy::E2, Strategy::M1], mode, ..config(3, 1) };
        let (r, rec) = run(&cfg, &mock());
        let r = r.unwrap();
        assert_eq!(rec.records.len(), 3 + 2 * 3);
        assert_eq!(r.queries, 2 * rec.records.len() as u64, "{mode}");
        assert!(rec.records.iter().filter(|c| c.heuristic.feasible).all(|c| !c.heuristic.thought.is_empty()));
    }
}

struct Failing(LlmError);

impl Backend for Failing {
    fn complete(&self, _r: &ChatRequest) -> Result<String, LlmError> {
        Err(self.0.clone())
    }

    fn queries(&self) -> u64 {
        0
    }
}

#[test]
fn fatal_backend_errors_stop_the_run() {
    let (r, _) = run(&config(4, 1), &Failing(LlmError::AuthError("HTTP 401".into())));
    assert!(matches!(r, Err(RunError::Backend(LlmError::AuthError(_)))));
    // Transient failures only mark attempts infeasible.
    let (r, rec) = run(&config(4, 1), &Failing(LlmError::Timeout("slow".into())));
    assert!(matches!(r, Err(RunError::NoFeasibleInitial { .. })));
    assert!(rec.records.iter().all(|c| c.heuristic.error.as_deref().unwrap().starts_with("backend:")));
}

#[test]
fn invalid_config_is_rejected() {
    let cfg = RunConfig { parents: 9, ..config(4, 1) };
    let (r, _) = run(&cfg, &mock());
    assert!(matches!(r, Err(RunError::InvalidConfig(_))));
}
