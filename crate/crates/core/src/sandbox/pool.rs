use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::worker::{ResourceLimits, WorkerHandle, WorkerState};
use super::{Args, CallError, CallResult, ErrorKind, Evaluator, Session};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SandboxOptions {
    pub command: Vec<String>,
    pub load_timeout_ms: u64,
    /// Idle workers kept for reuse.
    pub max_idle: usize,
    pub limits: ResourceLimits,
}

impl Default for SandboxOptions {
    fn default() -> Self {
        Self::new(Vec::new())
    }
}

impl SandboxOptions {
    pub fn new(command: Vec<String>) -> Self {
        Self { command, load_timeout_ms: 5000, max_idle: 4, limits: ResourceLimits::default() }
    }
}

/// Runs candidates in worker subprocesses, one per concurrent session.
/// Workers are reused across candidates by re-loading and respawned after
/// any timeout or protocol failure.
pub struct SandboxEvaluator {
    options: SandboxOptions,
    idle: Mutex<Vec<WorkerHandle>>,
}

impl SandboxEvaluator {
    pub fn new(options: SandboxOptions) -> Self {
        Self { options, idle: Mutex::new(Vec::new()) }
    }

    fn spawn(&self) -> Result<WorkerHandle, CallError> {
        WorkerHandle::spawn_with(&self.options.command, self.options.limits)
            .map_err(|e| CallError::new(ErrorKind::ProtocolError, e.to_string()))
    }

    fn checkout(&self) -> Result<WorkerHandle, CallError> {
        let reused = self.idle.lock().expect("pool lock").pop();
        match reused {
            Some(w) if w.state() != WorkerState::Dead => Ok(w),
            _ => self.spawn(),
        }
    }

    fn checkin(&self, worker: WorkerHandle) {
        if worker.state() == WorkerState::Dead {
            return;
        }
        let mut idle = self.idle.lock().expect("pool lock");
        if idle.len() < self.options.max_idle {
            idle.push(worker);
        }
    }

    pub fn idle_workers(&self) -> usize {
        self.idle.lock().expect("pool lock").len()
    }

    /// Terminates every idle worker.
    pub fn shutdown(&self) {
        for w in self.idle.lock().expect("pool lock").drain(..) {
            w.shutdown(Duration::from_millis(200));
        }
    }
}

impl Drop for SandboxEvaluator {
    fn drop(&mut self) {
        self.shutdown();
    }
}

struct SandboxSession<'a> {
    owner: &'a SandboxEvaluator,
    worker: Option<WorkerHandle>,
    code: String,
    function_name: String,
}

impl SandboxSession<'_> {
    /// The worker, respawned and re-loaded if the previous call killed it.
    fn live(&mut self) -> Result<&mut WorkerHandle, CallError> {
        let dead = self.worker.as_ref().is_none_or(|w| w.state() == WorkerState::Dead);
        if dead {
            let mut w = self.owner.spawn()?;
            w.load(&self.code, &self.function_name, Duration::from_millis(self.owner.options.load_timeout_ms))?;
            self.worker = Some(w);
        }
        Ok(self.worker.as_mut().expect("worker present"))
    }
}

impl Session for SandboxSession<'_> {
    fn call(&mut self, args: &Args, seed: u64, timeout: Duration) -> CallResult {
        match self.live() {
            Ok(w) => w.call(args, seed, timeout),
            Err(e) => CallResult { outcome: Err(e), elapsed_ms: 0 },
        }
    }

    fn eval_driver(
        &mut self,
        driver: &str,
        payload: &serde_json::Value,
        seed: u64,
        timeout: Duration,
    ) -> CallResult<serde_json::Value> {
        match self.live() {
            Ok(w) => w.eval_driver(driver, payload, seed, timeout),
            Err(e) => CallResult { outcome: Err(e), elapsed_ms: 0 },
        }
    }
}

impl Drop for SandboxSession<'_> {
    fn drop(&mut self) {
        if let Some(w) = self.worker.take() {
            self.owner.checkin(w);
        }
    }
}

impl Evaluator for SandboxEvaluator {
    fn load<'a>(&'a self, code: &str, function_name: &str) -> Result<Box<dyn Session + 'a>, CallError> {
        let mut worker = self.checkout()?;
        let timeout = Duration::from_millis(self.options.load_timeout_ms);
        match worker.load(code, function_name, timeout) {
            Ok(()) => Ok(Box::new(SandboxSession {
                owner: self,
                worker: Some(worker),
                code: code.to_string(),
                function_name: function_name.to_string(),
            })),
            Err(e) => {
                self.checkin(worker);
                Err(e)
            }
        }
    }
}
