//! One worker subprocess and the host side of its protocol.

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde_json::{json, Value as Json};
use thiserror::Error;

use super::value::{args_to_json, from_line, to_line, Args, Value};
use super::{CallError, CallResult, ErrorKind};

pub const PROTOCOL_VERSION: u64 = 1;
pub const HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(2);
const STDERR_RING: usize = 64 * 1024;

#[derive(Debug, Error)]
pub enum SpawnError {
    #[error("failed to start worker {command:?}: {source}")]
    SpawnFailure { command: Vec<String>, source: std::io::Error },
    #[error("worker did not complete the handshake within {0:?}")]
    HandshakeTimeout(Duration),
    #[error("worker command is empty")]
    EmptyCommand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkerState {
    Spawned,
    Loaded,
    Dead,
}

/// Optional OS limits applied to the child before exec. Off by default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ResourceLimits {
    pub address_space_bytes: Option<u64>,
    pub cpu_seconds: Option<u64>,
}

impl ResourceLimits {
    pub fn is_empty(&self) -> bool {
        self.address_space_bytes.is_none() && self.cpu_seconds.is_none()
    }
}

#[cfg(unix)]
fn apply_limits(cmd: &mut Command, limits: ResourceLimits) {
    use std::os::unix::process::CommandExt;
    if limits.is_empty() {
        return;
    }
    let set = |resource, value: u64| {
        let lim = libc::rlimit { rlim_cur: value as libc::rlim_t, rlim_max: value as libc::rlim_t };
        // SAFETY: setrlimit is async-signal-safe and only touches the child.
        if unsafe { libc::setrlimit(resource, &lim) } != 0 {
            return Err(std::io::Error::last_os_error());
        }
        Ok(())
    };
    // SAFETY: the closure only calls async-signal-safe functions.
    unsafe {
        cmd.pre_exec(move || {
            if let Some(b) = limits.address_space_bytes {
                set(libc::RLIMIT_AS, b)?;
            }
            if let Some(s) = limits.cpu_seconds {
                set(libc::RLIMIT_CPU, s)?;
            }
            Ok(())
        });
    }
}

#[cfg(not(unix))]
fn apply_limits(_cmd: &mut Command, _limits: ResourceLimits) {}

pub struct WorkerHandle {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<String>,
    stderr: Arc<Mutex<VecDeque<u8>>>,
    state: WorkerState,
    pub protocol_version: u64,
    pub loaded_function: Option<String>,
    command: Vec<String>,
    limits: ResourceLimits,
}

impl std::fmt::Debug for WorkerHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WorkerHandle").field("pid", &self.child.id()).field("state", &self.state).finish()
    }
}

impl WorkerHandle {
    pub fn spawn(command: &[String]) -> Result<Self, SpawnError> {
        Self::spawn_with(command, ResourceLimits::default())
    }

    pub fn spawn_with(command: &[String], limits: ResourceLimits) -> Result<Self, SpawnError> {
        let (program, rest) = command.split_first().ok_or(SpawnError::EmptyCommand)?;
        let mut cmd = Command::new(program);
        cmd.args(rest).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped());
        apply_limits(&mut cmd, limits);
        let mut child =
            cmd.spawn().map_err(|source| SpawnError::SpawnFailure { command: command.to_vec(), source })?;

        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let stderr = Arc::new(Mutex::new(VecDeque::with_capacity(1024)));
        let mut err_pipe = child.stderr.take().expect("piped stderr");
        let ring = Arc::clone(&stderr);
        thread::spawn(move || {
            let mut buf = [0u8; 4096];
            while let Ok(n) = err_pipe.read(&mut buf) {
                if n == 0 {
                    break;
                }
                let mut r = ring.lock().expect("stderr ring");
                r.extend(&buf[..n]);
                let excess = r.len().saturating_sub(STDERR_RING);
                r.drain(..excess);
            }
        });

        let stdin = child.stdin.take();
        let mut handle = Self {
            child,
            stdin,
            lines,
            stderr,
            state: WorkerState::Spawned,
            protocol_version: 0,
            loaded_function: None,
            command: command.to_vec(),
            limits,
        };
        handle.handshake()?;
        Ok(handle)
    }

    fn handshake(&mut self) -> Result<(), SpawnError> {
        let deadline = Instant::now() + HANDSHAKE_TIMEOUT;
        if self.send(&json!({"op": "hello"})).is_err() {
            self.kill();
            return Err(SpawnError::HandshakeTimeout(HANDSHAKE_TIMEOUT));
        }
        // Non-protocol lines before the reply are skipped until the deadline.
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.lines.recv_timeout(left) {
                Ok(line) => {
                    if let Ok(reply) = from_line(&line) {
                        if reply["ok"] == true {
                            if let Some(v) = reply["version"].as_u64() {
                                self.protocol_version = v;
                                return Ok(());
                            }
                        }
                    }
                }
                Err(_) => {
                    self.kill();
                    return Err(SpawnError::HandshakeTimeout(HANDSHAKE_TIMEOUT));
                }
            }
        }
    }

    pub fn state(&self) -> WorkerState {
        self.state
    }

    pub fn pid(&self) -> u32 {
        self.child.id()
    }

    pub fn command(&self) -> &[String] {
        &self.command
    }

    pub fn limits(&self) -> ResourceLimits {
        self.limits
    }

    /// Recent stderr output, lossily decoded.
    pub fn stderr_tail(&self) -> String {
        let r = self.stderr.lock().expect("stderr ring");
        String::from_utf8_lossy(&r.iter().copied().collect::<Vec<u8>>()).into_owned()
    }

    fn send(&mut self, msg: &Json) -> std::io::Result<()> {
        let stdin = self.stdin.as_mut().ok_or(std::io::ErrorKind::BrokenPipe)?;
        let mut line = to_line(msg);
        line.push('\n');
        stdin.write_all(line.as_bytes())?;
        stdin.flush()
    }

    fn dead_error(&self) -> CallError {
        CallError::new(ErrorKind::ProtocolError, "worker is dead")
    }

    /// Sends one request and waits for exactly one reply line. On timeout or
    /// a malformed reply the worker is killed.
    fn request(&mut self, msg: &Json, timeout: Duration) -> Result<Json, CallError> {
        if self.state == WorkerState::Dead {
            return Err(self.dead_error());
        }
        if let Err(e) = self.send(msg) {
            self.kill();
            return Err(CallError::new(ErrorKind::ProtocolError, format!("write failed: {e}; stderr: {}", self.stderr_tail())));
        }
        let reply = match self.lines.recv_timeout(timeout) {
            Ok(line) => line,
            Err(RecvTimeoutError::Timeout) => {
                self.kill();
                return Err(CallError::new(ErrorKind::Timeout, format!("no reply within {} ms", timeout.as_millis())));
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.kill();
                return Err(CallError::new(
                    ErrorKind::ProtocolError,
                    format!("worker exited; stderr: {}", self.stderr_tail().trim()),
                ));
            }
        };
        let parsed = match from_line(&reply) {
            Ok(j) if j.is_object() && j.get("ok").is_some_and(Json::is_boolean) => j,
            _ => {
                self.kill();
                return Err(CallError::new(ErrorKind::ProtocolError, format!("malformed reply: {reply:.200}")));
            }
        };
        if parsed["ok"] == true {
            return Ok(parsed);
        }
        let kind = parsed["kind"].as_str().and_then(ErrorKind::parse).unwrap_or(ErrorKind::ProtocolError);
        let detail = parsed["detail"].as_str().unwrap_or("").to_string();
        Err(CallError::new(kind, detail))
    }

    pub fn load(&mut self, code: &str, function_name: &str, timeout: Duration) -> Result<(), CallError> {
        self.loaded_function = None;
        if self.state == WorkerState::Loaded {
            self.state = WorkerState::Spawned;
        }
        self.request(&json!({"op": "load", "code": code, "fn": function_name}), timeout)?;
        self.state = WorkerState::Loaded;
        self.loaded_function = Some(function_name.to_string());
        Ok(())
    }

    fn timed<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T, CallError>) -> CallResult<T> {
        let t = Instant::now();
        let outcome = if self.state == WorkerState::Loaded {
            f(self)
        } else {
            Err(CallError::new(ErrorKind::ProtocolError, "no function loaded"))
        };
        CallResult { outcome, elapsed_ms: t.elapsed().as_millis() as u64 }
    }

    pub fn call(&mut self, args: &Args, seed: u64, timeout: Duration) -> CallResult {
        self.timed(|w| {
            let reply = w.request(&json!({"op": "call", "args": args_to_json(args), "seed": seed}), timeout)?;
            let result = reply.get("result").ok_or_else(|| CallError::new(ErrorKind::ProtocolError, "reply without result"))?;
            Value::from_json(result).map_err(|e| CallError::new(ErrorKind::ProtocolError, e))
        })
    }

    pub fn eval_driver(&mut self, driver: &str, payload: &Json, seed: u64, timeout: Duration) -> CallResult<Json> {
        self.timed(|w| {
            let mut reply =
                w.request(&json!({"op": "eval", "driver": driver, "payload": payload, "seed": seed}), timeout)?;
            reply
                .get_mut("result")
                .map(Json::take)
                .ok_or_else(|| CallError::new(ErrorKind::ProtocolError, "reply without result"))
        })
    }

    /// Kills and reaps the child. Idempotent.
    pub fn kill(&mut self) {
        if self.state == WorkerState::Dead {
            return;
        }
        self.stdin = None;
        let _ = self.child.kill();
        let _ = self.child.wait();
        self.state = WorkerState::Dead;
        self.loaded_function = None;
    }

    /// Asks the worker to exit, killing it if it does not within `grace`.
    pub fn shutdown(mut self, grace: Duration) {
        if self.state != WorkerState::Dead && self.send(&json!({"op": "exit"})).is_ok() {
            self.stdin = None;
            let deadline = Instant::now() + grace;
            while Instant::now() < deadline {
                if let Ok(Some(_)) = self.child.try_wait() {
                    self.state = WorkerState::Dead;
                    return;
                }
                thread::sleep(Duration::from_millis(5));
            }
        }
        self.kill();
    }
}

impl Drop for WorkerHandle {
    fn drop(&mut self) {
        self.kill();
    }
}
