//! Permutation flow shop: instances, makespan, constructive baselines,
//! swap/relocate descent and guided local search.

pub mod builtin;
mod constructive;
mod gls;
mod local_search;

pub use builtin::FsspHeuristic;
pub use constructive::{cds, gupta, johnson, neh, nehff, total_idle_time};
pub use gls::{guided_local_search, FsspGlsBudget, FsspGlsError, FsspGlsOptions, FsspGlsOutcome, PerturbArgs};
pub use local_search::{insertion_makespans, local_search, restricted_search};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FsspError {
    #[error("sequence is not a permutation of 0..{0}")]
    NotAPermutation(usize),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

/// Job-major processing times: `times[j][k]` is job `j` on machine `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FsspInstance {
    pub times: Matrix,
}

impl FsspInstance {
    pub fn new(times: Matrix) -> Result<Self, FsspError> {
        if times.rows() == 0 || times.cols() == 0 {
            return Err(FsspError::InvalidInstance("need at least one job and one machine".into()));
        }
        if times.as_slice().iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
            return Err(FsspError::InvalidInstance("times must be finite and non-negative".into()));
        }
        Ok(Self { times })
    }

    pub fn n_jobs(&self) -> usize {
        self.times.rows()
    }

    pub fn m_machines(&self) -> usize {
        self.times.cols()
    }

    pub fn to_file(&self) -> FsspFile {
        FsspFile { n: self.n_jobs(), m: self.m_machines(), times: self.times.to_rows() }
    }

    pub fn from_file(file: FsspFile) -> Result<Self, FsspError> {
        let times = Matrix::from_rows(&file.times)
            .ok_or_else(|| FsspError::InvalidInstance("ragged time matrix".into()))?;
        if times.shape() != (file.n, file.m) {
            return Err(FsspError::InvalidInstance(format!(
                "declared {}x{} but times are {}x{}",
                file.n,
                file.m,
                times.rows(),
                times.cols()
            )));
        }
        Self::new(times)
    }
}

/// On-disk instance form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsspFile {
    pub n: usize,
    pub m: usize,
    pub times: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub sequence: Vec<usize>,
    pub makespan: f64,
}

impl Schedule {
    pub(crate) fn evaluate(sequence: Vec<usize>, times: &Matrix) -> Self {
        let makespan = makespan(&sequence, times).expect("schedules hold permutations");
        Self { sequence, makespan }
    }
}

/// i.i.d. uniform `[0, 1)` processing times.
pub fn generate(n: usize, m: usize, seed: u64) -> FsspInstance {
    assert!(n >= 1 && m >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FsspInstance { times: Matrix::from_fn(n, m, |_, _| rng.random::<f64>()) }
}

pub(crate) fn is_permutation(seq: &[usize], n: usize) -> bool {
    crate::problems::tsp::is_permutation(seq, n)
}

/// Completion time of the last job on the last machine.
pub(crate) fn makespan_unchecked(seq: &[usize], times: &Matrix) -> f64 {
    let m = times.cols();
    let mut done = vec![0.0f64; m];
    for &job in seq {
        let row = times.row(job);
        let mut prev = 0.0f64;
        for k in 0..m {
            prev = done[k].max(prev) + row[k];
            done[k] = prev;
        }
    }
    done.last().copied().unwrap_or(0.0)
}

pub fn makespan(seq: &[usize], times: &Matrix) -> Result<f64, FsspError> {
    if !is_permutation(seq, times.rows()) {
        return Err(FsspError::NotAPermutation(times.rows()));
    }
    Ok(makespan_unchecked(seq, times))
}

/// Arithmetic mean of makespans.
pub fn fitness(makespans: &[f64]) -> f64 {
    assert!(!makespans.is_empty());
    makespans.iter().sum::<f64>() / makespans.len() as f64
}

#[cfg(test)]
pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                rec(cur, used, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

#[cfg(test)]
pub(crate) fn brute_force_optimum(times: &Matrix) -> f64 {
    permutations(times.rows())
        .iter()
        .map(|p| makespan_unchecked(p, times))
        .fold(f64::INFINITY, f64::min)
}
