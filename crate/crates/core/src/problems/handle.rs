//! A configured problem: function signature, prompt templates, evaluation
//! instances, the feasibility probe and fitness.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::binpacking::{fitness_and_gap, generate_weibull, l2_lower_bound, BinInstance, FitRule, PackingResult};
use super::fssp::{self, FsspFile, FsspGlsBudget, FsspGlsOptions, FsspInstance};
use super::tsp::{self, GlsBudget, GlsOptions, TspBundle, TspInstance};
use super::ProblemKind;
use crate::matrix::Matrix;
use crate::prompt::{FunctionSpec, PromptTemplateSet};
use crate::sandbox::{Args, BinpackDriverOutput, Session, Value, BINPACK_DRIVER};
use crate::seed::derive;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BinPackingSettings {
    pub n_instances: usize,
    pub n_items: usize,
    pub capacity: u32,
    pub weibull_shape: f64,
    pub weibull_scale: f64,
    pub first_seed: u64,
    pub fit: FitRule,
    /// Instance files to use instead of generated ones.
    pub instance_files: Vec<PathBuf>,
}

impl Default for BinPackingSettings {
    fn default() -> Self {
        Self {
            n_instances: 5,
            n_items: 5000,
            capacity: 100,
            weibull_shape: 3.0,
            weibull_scale: 45.0,
            first_seed: 0,
            fit: FitRule::AllowExact,
            instance_files: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TspSettings {
    pub n_instances: usize,
    pub n_cities: usize,
    pub first_seed: u64,
    pub max_ls_calls: usize,
    pub max_seconds: f64,
    pub pass_true_matrix: bool,
    pub instance_files: Vec<PathBuf>,
}

impl Default for TspSettings {
    fn default() -> Self {
        Self {
            n_instances: 16,
            n_cities: 50,
            first_seed: 0,
            max_ls_calls: 200,
            max_seconds: 10.0,
            pass_true_matrix: false,
            instance_files: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FsspSettings {
    pub n_instances: usize,
    pub n_jobs: usize,
    /// Machine counts, cycled over the instances.
    pub machines: Vec<usize>,
    pub first_seed: u64,
    pub max_ls_calls: usize,
    pub max_seconds: f64,
    pub perturb_move_cap: usize,
    pub instance_files: Vec<PathBuf>,
}

impl Default for FsspSettings {
    fn default() -> Self {
        Self {
            n_instances: 16,
            n_jobs: 20,
            machines: vec![5, 10],
            first_seed: 0,
            max_ls_calls: 100,
            max_seconds: 10.0,
            perturb_move_cap: 20,
            instance_files: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSettings {
    #[serde(rename = "binpacking")]
    BinPacking(BinPackingSettings),
    Tsp(TspSettings),
    Fssp(FsspSettings),
}

impl ProblemSettings {
    pub fn default_for(kind: ProblemKind) -> Self {
        match kind {
            ProblemKind::BinPacking => ProblemSettings::BinPacking(BinPackingSettings::default()),
            ProblemKind::Tsp => ProblemSettings::Tsp(TspSettings::default()),
            ProblemKind::Fssp => ProblemSettings::Fssp(FsspSettings::default()),
        }
    }

    pub fn kind(&self) -> ProblemKind {
        match self {
            ProblemSettings::BinPacking(_) => ProblemKind::BinPacking,
            ProblemSettings::Tsp(_) => ProblemKind::Tsp,
            ProblemSettings::Fssp(_) => ProblemKind::Fssp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Timeouts {
    pub probe_ms: u64,
    /// Per heuristic call during GLS evaluation.
    pub call_ms: u64,
    /// Per whole-instance driver run.
    pub driver_ms: u64,
}

impl Default for Timeouts {
    fn default() -> Self {
        Self { probe_ms: 2000, call_ms: 2000, driver_ms: 60_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub problem: ProblemSettings,
    #[serde(default)]
    pub timeouts: Timeouts,
}

impl EvalConfig {
    pub fn default_for(kind: ProblemKind) -> Self {
        Self { problem: ProblemSettings::default_for(kind), timeouts: Timeouts::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSet {
    /// Each with its precomputed L2 bound.
    BinPacking(Vec<(BinInstance, u64)>),
    /// Each with its reference attached.
    Tsp(Vec<TspInstance>),
    Fssp(Vec<FsspInstance>),
}

impl InstanceSet {
    pub fn len(&self) -> usize {
        match self {
            InstanceSet::BinPacking(v) => v.len(),
            InstanceSet::Tsp(v) => v.len(),
            InstanceSet::Fssp(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Lower is better.
    pub fitness: f64,
    pub raw_score: f64,
    pub per_instance: Vec<f64>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

impl InstanceSet {
    pub fn build(settings: &ProblemSettings) -> Result<Self, String> {
        match settings {
            ProblemSettings::BinPacking(s) => {
                let raw: Vec<BinInstance> = if s.instance_files.is_empty() {
                    (0..s.n_instances as u64)
                        .map(|i| generate_weibull(s.n_items, s.capacity, s.weibull_shape, s.weibull_scale, s.first_seed + i))
                        .collect()
                } else {
                    s.instance_files
                        .iter()
                        .map(|p| {
                            let i: BinInstance = read_json(p)?;
                            BinInstance::new(i.items, i.capacity).map_err(|e| format!("{}: {e}", p.display()))
                        })
                        .collect::<Result<_, _>>()?
                };
                Ok(InstanceSet::BinPacking(
                    raw.into_iter().map(|i| {
                        let lb = l2_lower_bound(&i.items, i.capacity);
                        (i, lb)
                    })
                    .collect(),
                ))
            }
            ProblemSettings::Tsp(s) => {
                let v = if s.instance_files.is_empty() {
                    (0..s.n_instances as u64)
                        .map(|i| tsp::generate(s.n_cities, s.first_seed + i).with_reference())
                        .collect()
                } else {
                    s.instance_files
                        .iter()
                        .map(|p| read_json::<TspBundle>(p).map(TspInstance::from_bundle))
                        .collect::<Result<_, _>>()?
                };
                Ok(InstanceSet::Tsp(v))
            }
            ProblemSettings::Fssp(s) => {
                let v = if s.instance_files.is_empty() {
                    if s.machines.is_empty() {
                        return Err("fssp settings need at least one machine count".into());
                    }
                    (0..s.n_instances)
                        .map(|i| fssp::generate(s.n_jobs, s.machines[i % s.machines.len()], s.first_seed + i as u64))
                        .collect()
                } else {
                    s.instance_files
                        .iter()
                        .map(|p| {
                            read_json::<FsspFile>(p)
                                .and_then(|f| FsspInstance::from_file(f).map_err(|e| format!("{}: {e}", p.display())))
                        })
                        .collect::<Result<_, _>>()?
                };
                Ok(InstanceSet::Fssp(v))
            }
        }
    }
}

/// Everything the evolution loop needs to know about one problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub kind: ProblemKind,
    pub spec: FunctionSpec,
    pub templates: PromptTemplateSet,
    pub eval: EvalConfig,
    pub instances: InstanceSet,
}

fn ok_or_string<T>(r: crate::sandbox::CallResult<T>) -> Result<T, String> {
    r.outcome.map_err(|e| e.to_string())
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn probe_tsp() -> (Matrix, Vec<usize>, Matrix) {
    let inst = TspInstance::from_coords(vec![[0.1, 0.2], [0.8, 0.1], [0.9, 0.7], [0.4, 0.9], [0.2, 0.6]]);
    let tour = vec![0, 1, 2, 3, 4];
    let mut used = Matrix::zeros(5, 5);
    for i in 0..5 {
        let (a, b) = (tour[i], tour[(i + 1) % 5]);
        used.set(a, b, 2.0);
        used.set(b, a, 2.0);
    }
    used.set(0, 2, 1.0);
    used.set(2, 0, 1.0);
    (inst.dist, tour, used)
}

fn fssp_args(seq: &[usize], times: &Matrix) -> Args {
    vec![
        ("current_sequence".into(), Value::IntVector(seq.iter().map(|&j| j as i64).collect())),
        ("time_matrix".into(), Value::Matrix(times.clone())),
        ("m".into(), Value::Int(times.cols() as i64)),
        ("n".into(), Value::Int(times.rows() as i64)),
    ]
}

fn tsp_args(d: &Matrix, tour: &[usize], used: &Matrix) -> Args {
    vec![
        ("edge_distance".into(), Value::Matrix(d.clone())),
        ("local_opt_tour".into(), Value::IntVector(tour.iter().map(|&c| c as i64).collect())),
        ("edge_n_used".into(), Value::Matrix(used.clone())),
    ]
}

fn decode_fssp(v: &Value) -> Result<(Matrix, Vec<i64>), String> {
    let parts = v.as_tuple().filter(|p| p.len() == 2).ok_or_else(|| format!("expected (new_matrix, perturb_jobs), got {}", v.kind_name()))?;
    let m = parts[0].as_matrix().ok_or("new_matrix is not a matrix")?;
    let jobs = parts[1].as_i64_vec().ok_or("perturb_jobs is not an integer vector")?;
    Ok((m, jobs))
}

impl Problem {
    pub fn new(eval: EvalConfig, templates: PromptTemplateSet) -> Result<Self, String> {
        let kind = eval.problem.kind();
        let instances = InstanceSet::build(&eval.problem)?;
        if instances.is_empty() {
            return Err("evaluation instance set is empty".into());
        }
        Ok(Self { kind, spec: kind.function_spec(), templates, eval, instances })
    }

    pub fn with_defaults(kind: ProblemKind) -> Result<Self, String> {
        Self::new(EvalConfig::default_for(kind), PromptTemplateSet::builtin(kind))
    }

    /// Runs the tiny probe case: the result must have the declared shape and
    /// finite values.
    pub fn probe(&self, session: &mut dyn Session) -> Result<(), String> {
        let timeout = Duration::from_millis(self.eval.timeouts.probe_ms);
        match self.kind {
            ProblemKind::BinPacking => {
                let bins = vec![45, 60, 75, 100];
                let args = vec![("item".into(), Value::Int(10)), ("bins".into(), Value::IntVector(bins.clone()))];
                let v = ok_or_string(session.call(&args, 0, timeout))?;
                let scores = v.as_f64_vec().ok_or_else(|| format!("probe: expected a score vector, got {}", v.kind_name()))?;
                if scores.len() != bins.len() {
                    return Err(format!("probe: {} scores for {} bins", scores.len(), bins.len()));
                }
                if !all_finite(&scores) {
                    return Err("probe: non-finite score".into());
                }
            }
            ProblemKind::Tsp => {
                let (d, tour, used) = probe_tsp();
                let v = ok_or_string(session.call(&tsp_args(&d, &tour, &used), 0, timeout))?;
                let m = v.as_matrix().ok_or_else(|| format!("probe: expected a matrix, got {}", v.kind_name()))?;
                if m.shape() != d.shape() {
                    return Err(format!("probe: matrix shape {:?}, expected {:?}", m.shape(), d.shape()));
                }
                if !m.all_finite() {
                    return Err("probe: non-finite matrix entry".into());
                }
            }
            ProblemKind::Fssp => {
                let inst = fssp::generate(5, 3, 0);
                let seq = fssp::neh(&inst.times);
                let v = ok_or_string(session.call(&fssp_args(&seq, &inst.times), 0, timeout))?;
                let (m, jobs) = decode_fssp(&v).map_err(|e| format!("probe: {e}"))?;
                if m.shape() != inst.times.shape() {
                    return Err(format!("probe: matrix shape {:?}, expected {:?}", m.shape(), inst.times.shape()));
                }
                if !m.all_finite() {
                    return Err("probe: non-finite matrix entry".into());
                }
                if jobs.is_empty() || jobs.iter().any(|&j| !(0..5).contains(&j)) {
                    return Err(format!("probe: bad perturb_jobs {jobs:?}"));
                }
            }
        }
        Ok(())
    }

    /// Full evaluation over the instance set. `seed` feeds every stochastic
    /// call, mixed with the instance index and call counter.
    pub fn evaluate(&self, session: &mut dyn Session, seed: u64) -> Result<Evaluation, String> {
        let t = self.eval.timeouts;
        match (&self.instances, &self.eval.problem) {
            (InstanceSet::BinPacking(set), ProblemSettings::BinPacking(s)) => {
                let mut results = Vec::with_capacity(set.len());
                for (i, (inst, lb)) in set.iter().enumerate() {
                    let mut payload = json!({"items": inst.items, "capacity": inst.capacity});
                    if s.fit == FitRule::Strict {
                        payload["fit"] = json!("strict");
                    }
                    let out = ok_or_string(session.eval_driver(
                        BINPACK_DRIVER,
                        &payload,
                        derive(&[seed, i as u64]),
                        Duration::from_millis(t.driver_ms),
                    ))?;
                    let out: BinpackDriverOutput =
                        serde_json::from_value(out).map_err(|e| format!("driver result: {e}"))?;
                    check_packing(inst, &out)?;
                    results.push(PackingResult::with_bound(out.bins_used, *lb, out.loads));
                }
                let summary = fitness_and_gap(&results);
                Ok(Evaluation {
                    fitness: summary.fitness(),
                    raw_score: summary.mean_ratio,
                    per_instance: results.iter().map(|r| r.ratio).collect(),
                })
            }
            (InstanceSet::Tsp(set), ProblemSettings::Tsp(s)) => {
                let mut lengths = Vec::with_capacity(set.len());
                let mut refs = Vec::with_capacity(set.len());
                let options = GlsOptions { pass_true_matrix: s.pass_true_matrix, ..GlsOptions::default() };
                for (i, inst) in set.iter().enumerate() {
                    let out = tsp::guided_local_search(
                        inst,
                        |a: tsp::UpdateArgs<'_>| {
                            let v = ok_or_string(session.call(
                                &tsp_args(a.edge_distance, a.local_opt_tour, a.edge_n_used),
                                a.seed,
                                Duration::from_millis(t.call_ms),
                            ))?;
                            v.as_matrix().ok_or_else(|| format!("expected a matrix, got {}", v.kind_name()))
                        },
                        GlsBudget { max_ls_calls: s.max_ls_calls, max_seconds: s.max_seconds },
                        options,
                        |c| derive(&[seed, i as u64, c as u64]),
                    )
                    .map_err(|e| e.to_string())?;
                    lengths.push(out.best.length);
                    refs.push(inst.reference.expect("instances carry references").length);
                }
                let gap = tsp::fitness(&lengths, &refs);
                let per = lengths.iter().zip(&refs).map(|(l, r)| 100.0 * (l - r) / r).collect();
                Ok(Evaluation { fitness: gap, raw_score: gap, per_instance: per })
            }
            (InstanceSet::Fssp(set), ProblemSettings::Fssp(s)) => {
                let mut spans = Vec::with_capacity(set.len());
                let options = FsspGlsOptions { perturb_move_cap: s.perturb_move_cap, ..FsspGlsOptions::default() };
                for (i, inst) in set.iter().enumerate() {
                    let out = fssp::guided_local_search(
                        inst,
                        |a: fssp::PerturbArgs<'_>| {
                            let v = ok_or_string(session.call(
                                &fssp_args(a.current_sequence, a.time_matrix),
                                a.seed,
                                Duration::from_millis(t.call_ms),
                            ))?;
                            decode_fssp(&v)
                        },
                        FsspGlsBudget { max_ls_calls: s.max_ls_calls, max_seconds: s.max_seconds },
                        options,
                        |c| derive(&[seed, i as u64, c as u64]),
                    )
                    .map_err(|e| e.to_string())?;
                    spans.push(out.best.makespan);
                }
                let mean = fssp::fitness(&spans);
                Ok(Evaluation { fitness: mean, raw_score: mean, per_instance: spans })
            }
            _ => unreachable!("instance set built from the same settings"),
        }
    }
}

/// Rejects driver results that violate conservation or capacity.
fn check_packing(inst: &BinInstance, out: &BinpackDriverOutput) -> Result<(), String> {
    let total: u64 = inst.items.iter().map(|&s| u64::from(s)).sum();
    let loaded: u64 = out.loads.iter().map(|&s| u64::from(s)).sum();
    if loaded != total || out.loads.len() as u64 != out.bins_used || out.loads.iter().any(|&l| l > inst.capacity || l == 0) {
        return Err(format!(
            "driver result inconsistent: {} bins, {} loads summing to {loaded} (items sum to {total})",
            out.bins_used,
            out.loads.len()
        ));
    }
    Ok(())
}
