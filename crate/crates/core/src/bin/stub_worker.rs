//! Protocol-complete worker for tests and hermetic runs.
//!
//! It cannot interpret arbitrary code. Source texts of the shipped heuristics
//! run as their native ports; a few textual markers simulate misbehaving
//! candidates:
//!
//! - `while True` hangs on every call
//! - `/ 0` raises a division error on every call
//! - unbalanced brackets fail to compile
//! - `# stub: scalar` returns a scalar, `# stub: nan` a NaN-bearing vector
//! - `# stub: exit` terminates the process mid-call
//!
//! `--garbage` prints noise instead of answering the handshake.

use std::io::{self, BufRead, Write};
use std::time::Duration;

use eoh_core::problems::registry::{NativeHeuristic, Registry};
use eoh_core::sandbox::value::{args_from_json, from_line, to_line, Value};
use eoh_core::sandbox::{run_binpack_driver, BINPACK_DRIVER};
use serde_json::{json, Value as Json};

struct Loaded {
    code: String,
    native: Option<NativeHeuristic>,
}

fn error(kind: &str, detail: impl Into<String>) -> Json {
    json!({"ok": false, "kind": kind, "detail": detail.into()})
}

fn balanced(code: &str) -> bool {
    let mut stack = Vec::new();
    for ch in code.chars() {
        match ch {
            '(' | '[' | '{' => stack.push(ch),
            ')' | ']' | '}' => {
                let open = stack.pop();
                let ok = matches!((open, ch), (Some('('), ')') | (Some('['), ']') | (Some('{'), '}'));
                if !ok {
                    return false;
                }
            }
            _ => {}
        }
    }
    stack.is_empty()
}

/// Behaviour shared by `call` and the driver's per-item calls.
fn misbehave(code: &str) -> Option<Json> {
    if code.contains("while True") {
        loop {
            std::thread::sleep(Duration::from_secs(3600));
        }
    }
    if code.contains("# stub: exit") {
        std::process::exit(3);
    }
    if code.contains("/ 0") {
        return Some(error("RuntimeError", "Traceback (most recent call last):\nZeroDivisionError: division by zero"));
    }
    None
}

fn call(loaded: &Loaded, msg: &Json) -> Json {
    if let Some(e) = misbehave(&loaded.code) {
        return e;
    }
    let args = match args_from_json(&msg["args"]) {
        Ok(a) => a,
        Err(e) => return error("ProtocolError", e),
    };
    if loaded.code.contains("# stub: scalar") {
        return json!({"ok": true, "result": 0.0});
    }
    if loaded.code.contains("# stub: nan") {
        let n = args.iter().find(|(k, _)| k == "bins").and_then(|(_, v)| v.as_f64_vec()).map_or(1, |v| v.len());
        let mut v = vec![1.0; n];
        v[0] = f64::NAN;
        return json!({"ok": true, "result": Value::Vector(v).to_json()});
    }
    let Some(h) = loaded.native else {
        return error("RuntimeError", "NotImplementedError: the stub worker only runs registered heuristics");
    };
    match h.call(&args, msg["seed"].as_u64().unwrap_or(0)) {
        Ok(v) => json!({"ok": true, "result": v.to_json()}),
        Err(e) => error("RuntimeError", e),
    }
}

fn eval(loaded: &Loaded, msg: &Json) -> Json {
    if msg["driver"] != BINPACK_DRIVER {
        return error("UnknownDriver", format!("unknown driver {}", msg["driver"]));
    }
    if let Some(e) = misbehave(&loaded.code) {
        return e;
    }
    let Some(NativeHeuristic::BinPacking(scorer)) = loaded.native else {
        return error("RuntimeError", "loaded function is not a registered bin scorer");
    };
    match run_binpack_driver(&msg["payload"], |item, rests| Ok(scorer.score(item, rests))) {
        Ok(out) => json!({"ok": true, "result": out}),
        Err(e) => error(e.kind.as_str(), e.detail),
    }
}

fn main() {
    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    if std::env::args().any(|a| a == "--garbage") {
        let _ = writeln!(out, "this is not a protocol message");
        let _ = out.flush();
        loop {
            std::thread::sleep(Duration::from_secs(3600));
        }
    }
    let registry = Registry::all_builtin();
    let mut loaded: Option<Loaded> = None;
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let reply = match from_line(&line) {
            Err(e) => error("ProtocolError", e),
            Ok(msg) => match msg["op"].as_str() {
                Some("hello") => json!({"ok": true, "version": 1}),
                Some("exit") => {
                    let _ = writeln!(out, "{}", to_line(&json!({"ok": true})));
                    let _ = out.flush();
                    return;
                }
                Some("load") => {
                    let code = msg["code"].as_str().unwrap_or("");
                    let name = msg["fn"].as_str().unwrap_or("");
                    loaded = None;
                    if !balanced(code) {
                        error("CompileError", "SyntaxError: unbalanced brackets")
                    } else if !code.contains(&format!("def {name}(")) {
                        error("CompileError", format!("function not defined: '{name}'"))
                    } else {
                        eprintln!("stub: loaded {name}");
                        loaded = Some(Loaded { code: code.to_string(), native: registry.lookup(code) });
                        json!({"ok": true})
                    }
                }
                Some("call") => match &loaded {
                    Some(l) => call(l, &msg),
                    None => error("ProtocolError", "no function loaded"),
                },
                Some("eval") => match &loaded {
                    Some(l) => eval(l, &msg),
                    None => error("ProtocolError", "no function loaded"),
                },
                other => error("ProtocolError", format!("unknown op {other:?}")),
            },
        };
        if writeln!(out, "{}", to_line(&reply)).and_then(|_| out.flush()).is_err() {
            break;
        }
    }
}
