//! Named reference heuristics evaluated over a problem's instance set.

use super::OrchestratorError;
use crate::problems::binpacking::{simulate_builtin, BuiltinScorer, PackingResult};
use crate::problems::registry::{NativeHeuristic, Registry};
use crate::problems::{fssp, tsp, InstanceSet, Problem, ProblemKind, ProblemSettings};
use crate::sandbox::{Evaluator, NativeRegistryEvaluator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Baseline {
    Scorer(BuiltinScorer),
    NearestInsertion,
    FarthestInsertion,
    Gupta,
    Cds,
    Neh,
    Nehff,
    /// A registered GLS heuristic, run through the normal evaluation path.
    Gls(NativeHeuristic),
}

fn catalogue(kind: ProblemKind) -> Vec<(String, Baseline)> {
    let gls = |h: NativeHeuristic| (format!("gls_{}", h.name()), Baseline::Gls(h));
    match kind {
        ProblemKind::BinPacking => BuiltinScorer::ALL.iter().map(|&s| (s.name().to_string(), Baseline::Scorer(s))).collect(),
        ProblemKind::Tsp => {
            let mut v = vec![
                ("nearest_insertion".to_string(), Baseline::NearestInsertion),
                ("farthest_insertion".to_string(), Baseline::FarthestInsertion),
            ];
            v.extend(NativeHeuristic::all(kind).into_iter().map(gls));
            v
        }
        ProblemKind::Fssp => {
            let mut v = vec![
                ("gupta".to_string(), Baseline::Gupta),
                ("cds".to_string(), Baseline::Cds),
                ("neh".to_string(), Baseline::Neh),
                ("nehff".to_string(), Baseline::Nehff),
            ];
            v.extend(NativeHeuristic::all(kind).into_iter().map(gls));
            v
        }
    }
}

/// Baseline names accepted for `kind`, in report order.
pub fn baseline_names(kind: ProblemKind) -> Vec<String> {
    catalogue(kind).into_iter().map(|(n, _)| n).collect()
}

/// What the per-instance numbers mean.
pub fn metric_name(kind: ProblemKind) -> &'static str {
    match kind {
        ProblemKind::BinPacking | ProblemKind::Tsp => "gap_percent",
        ProblemKind::Fssp => "makespan",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRow {
    pub name: String,
    pub per_instance: Vec<f64>,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineReport {
    pub kind: ProblemKind,
    pub rows: Vec<BaselineRow>,
}

impl BaselineReport {
    /// `name,instance_0,...,instance_{k-1},mean`, one row per baseline.
    pub fn to_csv(&self) -> String {
        let k = self.rows.first().map_or(0, |r| r.per_instance.len());
        let mut s = String::from("name");
        for i in 0..k {
            s.push_str(&format!(",instance_{i}"));
        }
        s.push_str(",mean\n");
        for r in &self.rows {
            s.push_str(&r.name);
            for v in &r.per_instance {
                s.push_str(&format!(",{v}"));
            }
            s.push_str(&format!(",{}\n", r.mean));
        }
        s
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn evaluate_one(problem: &Problem, baseline: Baseline, seed: u64) -> Result<Vec<f64>, OrchestratorError> {
    let fail = |e: String| OrchestratorError::Problem(e);
    match (baseline, &problem.instances, &problem.eval.problem) {
        (Baseline::Scorer(s), InstanceSet::BinPacking(set), ProblemSettings::BinPacking(settings)) => set
            .iter()
            .map(|(inst, lb)| {
                let r = simulate_builtin(inst, settings.fit, s).map_err(|e| fail(e.to_string()))?;
                Ok(100.0 * PackingResult::with_bound(r.bins_used, *lb, r.loads).gap)
            })
            .collect(),
        (Baseline::NearestInsertion | Baseline::FarthestInsertion, InstanceSet::Tsp(set), _) => Ok(set
            .iter()
            .map(|inst| {
                let tour = if baseline == Baseline::NearestInsertion {
                    tsp::nearest_insertion(inst)
                } else {
                    tsp::farthest_insertion(inst)
                };
                let r = inst.reference.expect("instances carry references").length;
                100.0 * (tour.length - r) / r
            })
            .collect()),
        (Baseline::Gupta | Baseline::Cds | Baseline::Neh | Baseline::Nehff, InstanceSet::Fssp(set), _) => set
            .iter()
            .map(|inst| {
                let p = &inst.times;
                let seq = match baseline {
                    Baseline::Gupta => fssp::gupta(p),
                    Baseline::Cds => fssp::cds(p),
                    Baseline::Neh => fssp::neh(p),
                    _ => fssp::nehff(p),
                };
                fssp::makespan(&seq, p).map_err(|e| fail(e.to_string()))
            })
            .collect(),
        (Baseline::Gls(h), _, _) => {
            let name = &problem.spec.function_name;
            let evaluator = NativeRegistryEvaluator::new(Registry::builtin(problem.kind, name));
            let mut session = evaluator.load(&h.source(name), name).map_err(|e| fail(e.to_string()))?;
            Ok(problem.evaluate(session.as_mut(), seed).map_err(fail)?.per_instance)
        }
        _ => Err(fail(format!("baseline does not apply to {}", problem.kind))),
    }
}

/// Evaluates `names` (all baselines when empty). Every name is checked before
/// any work starts.
pub fn evaluate_baselines(problem: &Problem, names: &[String], seed: u64) -> Result<BaselineReport, OrchestratorError> {
    let cat = catalogue(problem.kind);
    let chosen: Vec<(String, Baseline)> = if names.is_empty() {
        cat
    } else {
        names
            .iter()
            .map(|n| {
                let key = n.trim().to_ascii_lowercase();
                cat.iter().find(|(c, _)| *c == key).cloned().ok_or_else(|| OrchestratorError::UnknownBaseline {
                    name: n.clone(),
                    known: baseline_names(problem.kind),
                })
            })
            .collect::<Result<_, _>>()?
    };
    let mut rows = Vec::with_capacity(chosen.len());
    for (name, b) in chosen {
        let per_instance = evaluate_one(problem, b, seed)?;
        rows.push(BaselineRow { mean: mean(&per_instance), name, per_instance });
    }
    Ok(BaselineReport { kind: problem.kind, rows })
}
