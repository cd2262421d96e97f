use std::time::{Duration, Instant};

use serde::Deserialize;

use super::{Args, BinpackDriverOutput, CallError, CallResult, ErrorKind, Evaluator, Session, BINPACK_DRIVER};
use crate::problems::binpacking::{simulate_online, BinInstance, FitRule};
use crate::problems::registry::{NativeHeuristic, Registry};

/// Runs registered source texts as their native ports. Unknown code is a
/// compile error, never a silent fallback.
#[derive(Debug, Clone, Default)]
pub struct NativeRegistryEvaluator {
    pub registry: Registry,
}

impl NativeRegistryEvaluator {
    pub fn new(registry: Registry) -> Self {
        Self { registry }
    }
}

#[derive(Deserialize)]
struct BinpackPayload {
    items: Vec<u32>,
    capacity: u32,
    #[serde(default)]
    fit: FitRule,
}

/// Executes the bin packing driver with `score` as the scorer; shared with
/// the stub worker.
pub fn run_binpack_driver(
    payload: &serde_json::Value,
    mut score: impl FnMut(u32, &[u32]) -> Result<Vec<f64>, String>,
) -> Result<BinpackDriverOutput, CallError> {
    let p: BinpackPayload = serde_json::from_value(payload.clone())
        .map_err(|e| CallError::new(ErrorKind::ProtocolError, format!("bad binpack_online payload: {e}")))?;
    let inst = BinInstance { capacity: p.capacity, items: p.items };
    let r = simulate_online(&inst, p.fit, &mut score)
        .map_err(|e| CallError::new(ErrorKind::RuntimeError, e.to_string()))?;
    Ok(BinpackDriverOutput { bins_used: r.bins_used, loads: r.loads })
}

struct NativeSession {
    heuristic: NativeHeuristic,
}

fn timed<T>(f: impl FnOnce() -> Result<T, CallError>) -> CallResult<T> {
    let t = Instant::now();
    let outcome = f();
    CallResult { outcome, elapsed_ms: t.elapsed().as_millis() as u64 }
}

impl Session for NativeSession {
    fn call(&mut self, args: &Args, seed: u64, _timeout: Duration) -> CallResult {
        timed(|| self.heuristic.call(args, seed).map_err(|e| CallError::new(ErrorKind::RuntimeError, e)))
    }

    fn eval_driver(
        &mut self,
        driver: &str,
        payload: &serde_json::Value,
        _seed: u64,
        _timeout: Duration,
    ) -> CallResult<serde_json::Value> {
        timed(|| {
            if driver != BINPACK_DRIVER {
                return Err(CallError::new(ErrorKind::UnknownDriver, driver.to_string()));
            }
            let NativeHeuristic::BinPacking(scorer) = self.heuristic else {
                return Err(CallError::new(ErrorKind::RuntimeError, "loaded function is not a bin scorer"));
            };
            let out = run_binpack_driver(payload, |item, rests| Ok(scorer.score(item, rests)))?;
            Ok(serde_json::to_value(out).expect("driver output serializes"))
        })
    }
}

impl Evaluator for NativeRegistryEvaluator {
    fn load<'a>(&'a self, code: &str, function_name: &str) -> Result<Box<dyn Session + 'a>, CallError> {
        let heuristic = self.registry.lookup(code).ok_or_else(|| {
            CallError::new(ErrorKind::CompileError, format!("code for '{function_name}' is not in the native registry"))
        })?;
        Ok(Box::new(NativeSession { heuristic }))
    }
}
