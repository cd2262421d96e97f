use std::time::{Duration, Instant};

use eoh_core::problems::binpacking::{generate_weibull, simulate_online, BinInstance, BuiltinScorer, FitRule};
use eoh_core::problems::fssp::FsspHeuristic;
use eoh_core::problems::registry::Registry;
use eoh_core::problems::tsp::TspUpdate;
use eoh_core::problems::{EvalConfig, FsspSettings, Problem, ProblemKind, ProblemSettings, TspSettings};
use eoh_core::prompt::PromptTemplateSet;
use eoh_core::sandbox::{
    ErrorKind, Evaluator, NativeRegistryEvaluator, SandboxEvaluator, SandboxOptions, SpawnError, Value, WorkerHandle,
    WorkerState, BINPACK_DRIVER,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

fn stub() -> Vec<String> {
    vec![env!("CARGO_BIN_EXE_stub-worker").to_string()]
}

fn sandbox() -> SandboxEvaluator {
    SandboxEvaluator::new(SandboxOptions::new(stub()))
}

fn bp_args(item: i64, bins: Vec<i64>) -> Vec<(String, Value)> {
    vec![("item".into(), Value::Int(item)), ("bins".into(), Value::IntVector(bins))]
}

const SEC: Duration = Duration::from_secs(5);

#[test]
fn spawn_and_handshake() {
    let w = WorkerHandle::spawn(&stub()).unwrap();
    assert_eq!(w.state(), WorkerState::Spawned);
    assert_eq!(w.protocol_version, 1);
    assert!(matches!(
        WorkerHandle::spawn(&["/nonexistent/worker-binary".to_string()]),
        Err(SpawnError::SpawnFailure { .. })
    ));
}

#[test]
fn garbage_handshake_times_out_and_kills() {
    let mut cmd = stub();
    cmd.push("--garbage".into());
    let t = Instant::now();
    let r = WorkerHandle::spawn(&cmd);
    assert!(matches!(r, Err(SpawnError::HandshakeTimeout(_))));
    assert!(t.elapsed() < Duration::from_millis(2600));
}

#[test]
fn load_errors() {
    let mut w = WorkerHandle::spawn(&stub()).unwrap();
    let e = w.load("def score(:", "score", SEC).unwrap_err();
    assert_eq!(e.kind, ErrorKind::CompileError);
    assert!(!e.detail.is_empty());
    let e = w.load("def rate(item, bins):\n    return bins", "score", SEC).unwrap_err();
    assert_eq!(e.kind, ErrorKind::CompileError);
    assert!(e.detail.contains("function not defined"));
    assert_eq!(w.state(), WorkerState::Spawned);
    assert_eq!(w.call(&bp_args(1, vec![2]), 0, SEC).outcome.unwrap_err().kind, ErrorKind::ProtocolError);
    w.load(&BuiltinScorer::BestFit.source("score"), "score", SEC).unwrap();
    assert_eq!(w.state(), WorkerState::Loaded);
    assert_eq!(w.loaded_function.as_deref(), Some("score"));
    assert!(w.stderr_tail().len() <= 64 * 1024);
}

#[test]
fn best_fit_call_and_drivers() {
    let mut w = WorkerHandle::spawn(&stub()).unwrap();
    w.load(&BuiltinScorer::BestFit.source("score"), "score", SEC).unwrap();
    let r = w.call(&bp_args(4, vec![10, 7]), 0, SEC);
    assert_eq!(r.outcome.unwrap(), Value::Vector(vec![-6.0, -3.0]));
    let d = w.eval_driver(BINPACK_DRIVER, &json!({"items": [30, 30, 40], "capacity": 100}), 0, SEC);
    assert_eq!(d.outcome.unwrap()["bins_used"], 1);
    let d = w.eval_driver(BINPACK_DRIVER, &json!({"items": [60, 60], "capacity": 100}), 0, SEC);
    assert_eq!(d.outcome.unwrap()["bins_used"], 2);
    let d = w.eval_driver(BINPACK_DRIVER, &json!({"items": [100], "capacity": 100}), 0, SEC);
    assert_eq!(d.outcome.unwrap()["bins_used"], 1);
    let d = w.eval_driver("tsp", &json!({}), 0, SEC);
    assert_eq!(d.outcome.unwrap_err().kind, ErrorKind::UnknownDriver);
    // Request and reply counts stay matched after errors.
    assert!(w.call(&bp_args(4, vec![10, 7]), 0, SEC).is_ok());
}

#[test]
fn runtime_error_and_timeout_with_respawn() {
    let ev = sandbox();
    let mut s = ev.load("def score(item, bins):\n    return bins / 0", "score").unwrap();
    let e = s.call(&bp_args(1, vec![5]), 0, SEC).outcome.unwrap_err();
    assert_eq!(e.kind, ErrorKind::RuntimeError);
    assert!(e.detail.contains("ZeroDivisionError"));
    drop(s);

    let mut s = ev.load("def score(item, bins):\n    while True:\n        pass", "score").unwrap();
    let t = Instant::now();
    let e = s.call(&bp_args(1, vec![5]), 0, Duration::from_millis(1000)).outcome.unwrap_err();
    let waited = t.elapsed();
    assert_eq!(e.kind, ErrorKind::Timeout);
    assert!(waited >= Duration::from_millis(1000) && waited < Duration::from_millis(1500), "{waited:?}");
    drop(s);

    // The pool hands out a fresh worker afterwards.
    let mut s = ev.load(&BuiltinScorer::BestFit.source("score"), "score").unwrap();
    assert_eq!(s.call(&bp_args(4, vec![10, 7]), 0, SEC).outcome.unwrap(), Value::Vector(vec![-6.0, -3.0]));
}

#[test]
fn worker_exit_is_protocol_error() {
    let ev = sandbox();
    let mut s = ev.load("def score(item, bins):\n    # stub: exit\n    return bins", "score").unwrap();
    let e = s.call(&bp_args(1, vec![5]), 0, SEC).outcome.unwrap_err();
    assert_eq!(e.kind, ErrorKind::ProtocolError);
}

#[test]
fn scorer_parity_with_native() {
    let ev = sandbox();
    let native = NativeRegistryEvaluator::new(Registry::builtin(ProblemKind::BinPacking, "score"));
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let scorers = [BuiltinScorer::FirstFit, BuiltinScorer::BestFit, BuiltinScorer::Eoh, BuiltinScorer::FunSearch, BuiltinScorer::Eoc];
    for scorer in scorers {
        let src = scorer.source("score");
        let mut a = ev.load(&src, "score").unwrap();
        let mut b = native.load(&src, "score").unwrap();
        for _ in 0..200 {
            let item = rng.random_range(1..=60);
            let k = rng.random_range(1..=8);
            let bins: Vec<i64> = (0..k).map(|_| rng.random_range(item..=100)).collect();
            let args = bp_args(item, bins);
            let x = a.call(&args, 0, SEC).outcome.unwrap().as_f64_vec().unwrap();
            let y = b.call(&args, 0, SEC).outcome.unwrap().as_f64_vec().unwrap();
            let xb: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
            let yb: Vec<u64> = y.iter().map(|v| v.to_bits()).collect();
            assert_eq!(xb, yb, "{scorer:?}");
        }
    }
}

#[test]
fn driver_parity_with_simulator() {
    let ev = sandbox();
    let mut s = ev.load(&BuiltinScorer::Eoh.source("score"), "score").unwrap();
    for seed in 0..100 {
        let inst = generate_weibull(50 + (seed as usize % 7) * 20, 100, 3.0, 45.0, seed);
        let native = simulate_online(&inst, FitRule::AllowExact, |i, r| Ok(BuiltinScorer::Eoh.score(i, r))).unwrap();
        let out = s
            .eval_driver(BINPACK_DRIVER, &json!({"items": inst.items, "capacity": inst.capacity}), seed, SEC)
            .outcome
            .unwrap();
        assert_eq!(out["bins_used"], native.bins_used);
        assert_eq!(out["loads"], json!(native.loads));
    }
    // The strict fit rule travels in the payload.
    let inst = BinInstance::new(vec![50, 50], 100).unwrap();
    let strict = s.eval_driver(BINPACK_DRIVER, &json!({"items": inst.items, "capacity": 100, "fit": "strict"}), 0, SEC);
    assert_eq!(strict.outcome.unwrap()["bins_used"], 2);
}

#[test]
fn probe_rules() {
    let problem = Problem::new(
        EvalConfig::default_for(ProblemKind::BinPacking),
        PromptTemplateSet::builtin(ProblemKind::BinPacking),
    )
    .unwrap();
    let ev = sandbox();
    let mut ff = ev.load(&BuiltinScorer::FirstFit.source("score"), "score").unwrap();
    assert!(problem.probe(ff.as_mut()).is_ok());
    let mut scalar = ev.load("def score(item, bins):\n    # stub: scalar\n    return 0.0", "score").unwrap();
    assert!(problem.probe(scalar.as_mut()).unwrap_err().contains("vector"));
    let mut nan = ev.load("def score(item, bins):\n    # stub: nan\n    return bins", "score").unwrap();
    assert!(problem.probe(nan.as_mut()).unwrap_err().contains("non-finite"));
}

fn small(kind: ProblemKind) -> Problem {
    let settings = match kind {
        ProblemKind::Tsp => ProblemSettings::Tsp(TspSettings { n_instances: 2, n_cities: 15, max_ls_calls: 15, ..Default::default() }),
        ProblemKind::Fssp => ProblemSettings::Fssp(FsspSettings { n_instances: 2, n_jobs: 8, max_ls_calls: 10, ..Default::default() }),
        ProblemKind::BinPacking => unreachable!(),
    };
    Problem::new(EvalConfig { problem: settings, timeouts: Default::default() }, PromptTemplateSet::builtin(kind)).unwrap()
}

#[test]
fn gls_evaluation_matches_native_through_worker() {
    let ev = sandbox();
    let native = NativeRegistryEvaluator::new(Registry::all_builtin());
    let cases = [
        (ProblemKind::Tsp, TspUpdate::Eoh.source("update_edge_distance")),
        (ProblemKind::Fssp, FsspHeuristic::Eoh.source("get_matrix_and_jobs")),
    ];
    for (kind, src) in cases {
        let p = small(kind);
        let name = &p.spec.function_name;
        let mut a = ev.load(&src, name).unwrap();
        let mut b = native.load(&src, name).unwrap();
        p.probe(a.as_mut()).unwrap();
        let x = p.evaluate(a.as_mut(), 5).unwrap();
        let y = p.evaluate(b.as_mut(), 5).unwrap();
        assert_eq!(x, y, "{kind}");
    }
}
