//! Guided local search driven by a matrix-and-jobs perturbation heuristic.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::constructive::neh;
use super::local_search::{local_search, restricted_search};
use super::{FsspInstance, Schedule};
use crate::matrix::Matrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FsspGlsError {
    #[error("heuristic returned a {got:?} matrix, expected {expected:?}")]
    HeuristicShapeMismatch { expected: (usize, usize), got: (usize, usize) },
    #[error("heuristic returned job index {index} for {n} jobs")]
    InvalidJobIndex { index: i64, n: usize },
    #[error("heuristic returned a matrix with non-finite entries")]
    NonFinite,
    #[error("heuristic returned no jobs to perturb")]
    EmptyJobs,
    #[error("heuristic failed: {0}")]
    Heuristic(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FsspGlsBudget {
    pub max_ls_calls: usize,
    pub max_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FsspGlsOptions {
    /// Accepted-move cap for the perturbation descent under the new matrix.
    pub perturb_move_cap: usize,
    pub ls_max_passes: usize,
}

impl Default for FsspGlsOptions {
    fn default() -> Self {
        Self { perturb_move_cap: 20, ls_max_passes: 100_000 }
    }
}

pub struct PerturbArgs<'a> {
    pub current_sequence: &'a [usize],
    pub time_matrix: &'a Matrix,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FsspGlsOutcome {
    pub best: Schedule,
    pub ls_calls: usize,
    pub elapsed: Duration,
    pub trace: Vec<f64>,
}

/// Starts from NEH plus descent, then repeats: ask the heuristic for a
/// perturbed matrix and job set, run a capped descent restricted to those jobs
/// under the perturbed matrix, and descend again under the true times.
///
/// The initial descent counts as the first local-search call. Job indices are
/// signed so that out-of-range values from foreign code can be reported.
pub fn guided_local_search<H, S>(
    instance: &FsspInstance,
    mut heuristic: H,
    budget: FsspGlsBudget,
    options: FsspGlsOptions,
    seed_of: S,
) -> Result<FsspGlsOutcome, FsspGlsError>
where
    H: FnMut(PerturbArgs<'_>) -> Result<(Matrix, Vec<i64>), String>,
    S: Fn(usize) -> u64,
{
    let start = Instant::now();
    let p = &instance.times;
    let (n, m) = p.shape();
    let deadline = Duration::from_secs_f64(budget.max_seconds.max(0.0));
    let mut trace = Vec::with_capacity(budget.max_ls_calls);
    let mut current = local_search(&neh(p), p, options.ls_max_passes);
    let mut best = current.clone();
    let mut ls_calls = 1;
    trace.push(best.makespan);

    while ls_calls < budget.max_ls_calls && start.elapsed() < deadline {
        let (matrix, jobs) = heuristic(PerturbArgs {
            current_sequence: &current.sequence,
            time_matrix: p,
            m,
            n,
            seed: seed_of(ls_calls - 1),
        })
        .map_err(FsspGlsError::Heuristic)?;
        if matrix.shape() != (n, m) {
            return Err(FsspGlsError::HeuristicShapeMismatch { expected: (n, m), got: matrix.shape() });
        }
        if !matrix.all_finite() {
            return Err(FsspGlsError::NonFinite);
        }
        if jobs.is_empty() {
            return Err(FsspGlsError::EmptyJobs);
        }
        let jobs = jobs
            .into_iter()
            .map(|j| {
                usize::try_from(j).ok().filter(|&u| u < n).ok_or(FsspGlsError::InvalidJobIndex { index: j, n })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let perturbed = restricted_search(&current.sequence, &matrix, &jobs, options.perturb_move_cap);
        current = local_search(&perturbed, p, options.ls_max_passes);
        ls_calls += 1;
        if current.makespan < best.makespan {
            best = current.clone();
        }
        trace.push(best.makespan);
    }

    Ok(FsspGlsOutcome { best, ls_calls, elapsed: start.elapsed(), trace })
}

#[cfg(test)]
mod tests {
    use super::super::builtin::FsspHeuristic;
    use super::super::{generate, makespan_unchecked};
    use super::*;

    fn budget(calls: usize) -> FsspGlsBudget {
        FsspGlsBudget { max_ls_calls: calls, max_seconds: 60.0 }
    }

    fn run(inst: &FsspInstance, h: FsspHeuristic, calls: usize) -> Result<FsspGlsOutcome, FsspGlsError> {
        guided_local_search(
            inst,
            |a: PerturbArgs<'_>| Ok(h.apply(a.current_sequence, a.time_matrix, a.seed)),
            budget(calls),
            FsspGlsOptions::default(),
            |c| c as u64,
        )
    }

    #[test]
    fn never_worse_than_neh() {
        let inst = generate(20, 5, 3);
        let start = makespan_unchecked(&neh(&inst.times), &inst.times);
        let out = run(&inst, FsspHeuristic::Eoh, 10).unwrap();
        assert_eq!(out.ls_calls, 10);
        assert!(out.best.makespan <= start + 1e-12);
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!((makespan_unchecked(&out.best.sequence, &inst.times) - out.best.makespan).abs() < 1e-12);
    }

    #[test]
    fn deterministic_given_seeds() {
        let inst = generate(12, 5, 1);
        let a = run(&inst, FsspHeuristic::Eoh, 8).unwrap();
        let b = run(&inst, FsspHeuristic::Eoh, 8).unwrap();
        assert_eq!(a.best, b.best);
    }

    #[test]
    fn bad_outputs_rejected() {
        let inst = generate(5, 3, 0);
        let shape = guided_local_search(
            &inst,
            |_: PerturbArgs<'_>| Ok((Matrix::zeros(3, 5), vec![0])),
            budget(3),
            FsspGlsOptions::default(),
            |_| 0,
        );
        assert!(matches!(shape, Err(FsspGlsError::HeuristicShapeMismatch { .. })));
        let idx = guided_local_search(
            &inst,
            |a: PerturbArgs<'_>| Ok((a.time_matrix.clone(), vec![5])),
            budget(3),
            FsspGlsOptions::default(),
            |_| 0,
        );
        assert_eq!(idx.unwrap_err(), FsspGlsError::InvalidJobIndex { index: 5, n: 5 });
        let neg = guided_local_search(
            &inst,
            |a: PerturbArgs<'_>| Ok((a.time_matrix.clone(), vec![-1])),
            budget(3),
            FsspGlsOptions::default(),
            |_| 0,
        );
        assert!(neg.is_err());
        let empty = guided_local_search(
            &inst,
            |a: PerturbArgs<'_>| Ok((a.time_matrix.clone(), vec![])),
            budget(3),
            FsspGlsOptions::default(),
            |_| 0,
        );
        assert_eq!(empty.unwrap_err(), FsspGlsError::EmptyJobs);
    }

    #[test]
    fn eoh_heuristic_reaches_small_optimum() {
        let inst = generate(8, 3, 0);
        let opt = super::super::brute_force_optimum(&inst.times);
        let out = run(&inst, FsspHeuristic::Eoh, 50).unwrap();
        assert!((out.best.makespan - opt).abs() < 1e-9, "{} vs {opt}", out.best.makespan);
    }

    #[test]
    fn single_call_budget_is_plain_descent() {
        let inst = generate(10, 5, 9);
        let out = run(&inst, FsspHeuristic::Identity, 1).unwrap();
        assert_eq!(out.ls_calls, 1);
        assert_eq!(out.best, local_search(&neh(&inst.times), &inst.times, 100_000));
    }
}
