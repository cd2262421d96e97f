//! The native heuristics keyed by their reference source text.

use std::collections::HashMap;

use super::binpacking::BuiltinScorer;
use super::fssp::FsspHeuristic;
use super::tsp::TspUpdate;
use super::ProblemKind;
use crate::sandbox::value::{Args, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NativeHeuristic {
    BinPacking(BuiltinScorer),
    Tsp(TspUpdate),
    Fssp(FsspHeuristic),
}

fn arg<'a>(args: &'a Args, name: &str) -> Result<&'a Value, String> {
    args.iter().find(|(k, _)| k == name).map(|(_, v)| v).ok_or_else(|| format!("missing argument '{name}'"))
}

fn matrix_arg(args: &Args, name: &str) -> Result<crate::matrix::Matrix, String> {
    arg(args, name)?.as_matrix().ok_or_else(|| format!("argument '{name}' must be a matrix"))
}

fn index_vec(args: &Args, name: &str) -> Result<Vec<usize>, String> {
    arg(args, name)?
        .as_i64_vec()
        .and_then(|v| v.into_iter().map(|i| usize::try_from(i).ok()).collect())
        .ok_or_else(|| format!("argument '{name}' must be a vector of indices"))
}

impl NativeHeuristic {
    pub fn kind(self) -> ProblemKind {
        match self {
            NativeHeuristic::BinPacking(_) => ProblemKind::BinPacking,
            NativeHeuristic::Tsp(_) => ProblemKind::Tsp,
            NativeHeuristic::Fssp(_) => ProblemKind::Fssp,
        }
    }

    pub fn all(kind: ProblemKind) -> Vec<NativeHeuristic> {
        match kind {
            ProblemKind::BinPacking => BuiltinScorer::ALL.into_iter().map(NativeHeuristic::BinPacking).collect(),
            ProblemKind::Tsp => TspUpdate::ALL.into_iter().map(NativeHeuristic::Tsp).collect(),
            ProblemKind::Fssp => FsspHeuristic::ALL.into_iter().map(NativeHeuristic::Fssp).collect(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NativeHeuristic::BinPacking(s) => s.name(),
            NativeHeuristic::Tsp(u) => u.name(),
            NativeHeuristic::Fssp(h) => h.name(),
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            NativeHeuristic::BinPacking(s) => s.description(),
            NativeHeuristic::Tsp(u) => u.description(),
            NativeHeuristic::Fssp(h) => h.description(),
        }
    }

    pub fn source(self, function_name: &str) -> String {
        match self {
            NativeHeuristic::BinPacking(s) => s.source(function_name),
            NativeHeuristic::Tsp(u) => u.source(function_name),
            NativeHeuristic::Fssp(h) => h.source(function_name),
        }
    }

    /// Applies the heuristic to named arguments as a worker would.
    pub fn call(self, args: &Args, seed: u64) -> Result<Value, String> {
        match self {
            NativeHeuristic::BinPacking(s) => {
                let item = arg(args, "item")?.as_i64().ok_or("argument 'item' must be an integer")?;
                let bins = arg(args, "bins")?.as_i64_vec().ok_or("argument 'bins' must be an integer vector")?;
                let item = u32::try_from(item).map_err(|_| "item out of range")?;
                let bins: Vec<u32> =
                    bins.into_iter().map(u32::try_from).collect::<Result<_, _>>().map_err(|_| "bin out of range")?;
                Ok(Value::Vector(s.score(item, &bins)))
            }
            NativeHeuristic::Tsp(u) => {
                let d = matrix_arg(args, "edge_distance")?;
                let used = matrix_arg(args, "edge_n_used")?;
                let tour = index_vec(args, "local_opt_tour")?;
                if tour.iter().any(|&c| c >= d.rows()) {
                    return Err("tour index out of range".into());
                }
                Ok(Value::Matrix(u.apply(&d, &tour, &used, seed)))
            }
            NativeHeuristic::Fssp(h) => {
                let times = matrix_arg(args, "time_matrix")?;
                let seq = index_vec(args, "current_sequence")?;
                let (matrix, jobs) = h.apply(&seq, &times, seed);
                Ok(Value::List(vec![Value::Matrix(matrix), Value::IntVector(jobs)]))
            }
        }
    }
}

/// Exact (trimmed) source text to native heuristic.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    by_code: HashMap<String, NativeHeuristic>,
}

impl Registry {
    /// Every shipped heuristic of `kind`, keyed by its source for `function_name`.
    pub fn builtin(kind: ProblemKind, function_name: &str) -> Self {
        let mut r = Self::default();
        for h in NativeHeuristic::all(kind) {
            r.insert(&h.source(function_name), h);
        }
        r
    }

    /// All problems, each under its default function name.
    pub fn all_builtin() -> Self {
        let mut r = Self::default();
        for kind in ProblemKind::ALL {
            r.by_code.extend(Self::builtin(kind, &kind.function_spec().function_name).by_code);
        }
        r
    }

    pub fn insert(&mut self, code: &str, h: NativeHeuristic) {
        self.by_code.insert(code.trim().to_string(), h);
    }

    pub fn lookup(&self, code: &str) -> Option<NativeHeuristic> {
        self.by_code.get(code.trim()).copied()
    }

    pub fn len(&self) -> usize {
        self.by_code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_code.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_is_exact_after_trim() {
        let r = Registry::builtin(ProblemKind::BinPacking, "score");
        let src = BuiltinScorer::BestFit.source("score");
        assert_eq!(r.lookup(&format!("\n{src}\n  ")), Some(NativeHeuristic::BinPacking(BuiltinScorer::BestFit)));
        assert_eq!(r.lookup(&src.replace("score", "rate")), None);
        assert_eq!(Registry::all_builtin().len(), 7 + 3 + 3);
    }

    #[test]
    fn best_fit_call() {
        let h = NativeHeuristic::BinPacking(BuiltinScorer::BestFit);
        let args = vec![("item".into(), Value::Int(4)), ("bins".into(), Value::IntVector(vec![10, 7]))];
        assert_eq!(h.call(&args, 0).unwrap(), Value::Vector(vec![-6.0, -3.0]));
        assert!(h.call(&args[..1].to_vec(), 0).is_err());
    }
}
