//! Candidate execution: worker subprocesses behind a line-delimited JSON
//! protocol, or the in-process native registry.

mod native;
mod pool;
pub mod value;
mod worker;

pub use native::{run_binpack_driver, NativeRegistryEvaluator};
pub use pool::{SandboxEvaluator, SandboxOptions};
pub use value::{Args, Value};
pub use worker::{ResourceLimits, SpawnError, WorkerHandle, WorkerState, HANDSHAKE_TIMEOUT, PROTOCOL_VERSION};

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub const BINPACK_DRIVER: &str = "binpack_online";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorKind {
    CompileError,
    RuntimeError,
    Timeout,
    ProtocolError,
    UnknownDriver,
}

impl ErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::CompileError => "CompileError",
            ErrorKind::RuntimeError => "RuntimeError",
            ErrorKind::Timeout => "Timeout",
            ErrorKind::ProtocolError => "ProtocolError",
            ErrorKind::UnknownDriver => "UnknownDriver",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::CompileError, Self::RuntimeError, Self::Timeout, Self::ProtocolError, Self::UnknownDriver]
            .into_iter()
            .find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallError {
    pub kind: ErrorKind,
    pub detail: String,
}

impl CallError {
    pub fn new(kind: ErrorKind, detail: impl Into<String>) -> Self {
        Self { kind, detail: detail.into() }
    }
}

impl fmt::Display for CallError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.as_str(), self.detail)
    }
}

impl std::error::Error for CallError {}

#[derive(Debug, Clone, PartialEq)]
pub struct CallResult<T = Value> {
    pub outcome: Result<T, CallError>,
    pub elapsed_ms: u64,
}

impl<T> CallResult<T> {
    pub fn is_ok(&self) -> bool {
        self.outcome.is_ok()
    }
}

/// Output of the `binpack_online` driver.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinpackDriverOutput {
    pub bins_used: u64,
    pub loads: Vec<u32>,
}

/// A loaded candidate bound to one execution slot.
pub trait Session {
    fn call(&mut self, args: &Args, seed: u64, timeout: Duration) -> CallResult;

    /// Runs a trusted driver loop around the loaded function. The payload is
    /// driver-specific JSON.
    fn eval_driver(
        &mut self,
        driver: &str,
        payload: &serde_json::Value,
        seed: u64,
        timeout: Duration,
    ) -> CallResult<serde_json::Value>;
}

pub trait Evaluator: Send + Sync {
    /// Compiles `code` and binds `function_name`.
    fn load<'a>(&'a self, code: &str, function_name: &str) -> Result<Box<dyn Session + 'a>, CallError>;
}
