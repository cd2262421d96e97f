//! Swap and relocate descent with head/tail acceleration.

use super::{is_permutation, Schedule};
use crate::matrix::Matrix;

const IMPROVEMENT_EPS: f64 = 1e-12;

/// Completion times `e[i][k]` of the `i`-th job of `seq` on machine `k`.
fn heads(seq: &[usize], p: &Matrix) -> Vec<f64> {
    let m = p.cols();
    let mut e = vec![0.0f64; seq.len() * m];
    for (i, &job) in seq.iter().enumerate() {
        for k in 0..m {
            let up = if i > 0 { e[(i - 1) * m + k] } else { 0.0 };
            let left = if k > 0 { e[i * m + k - 1] } else { 0.0 };
            e[i * m + k] = up.max(left) + p.get(job, k);
        }
    }
    e
}

/// Tails `q[i][k]`: time from the start of job `i` on machine `k` to the end.
/// Has one extra zero row at index `seq.len()`.
fn tails(seq: &[usize], p: &Matrix) -> Vec<f64> {
    let m = p.cols();
    let n = seq.len();
    let mut q = vec![0.0f64; (n + 1) * m];
    for i in (0..n).rev() {
        for k in (0..m).rev() {
            let down = q[(i + 1) * m + k];
            let right = if k + 1 < m { q[i * m + k + 1] } else { 0.0 };
            q[i * m + k] = down.max(right) + p.get(seq[i], k);
        }
    }
    q
}

/// Makespan of inserting `job` at every position `0..=partial.len()`.
pub fn insertion_makespans(partial: &[usize], job: usize, p: &Matrix) -> Vec<f64> {
    let m = p.cols();
    let e = heads(partial, p);
    let q = tails(partial, p);
    let mut f = vec![0.0; m];
    (0..=partial.len())
        .map(|t| {
            let mut best = 0.0f64;
            for k in 0..m {
                let up = if t > 0 { e[(t - 1) * m + k] } else { 0.0 };
                let left = if k > 0 { f[k - 1] } else { 0.0 };
                f[k] = up.max(left) + p.get(job, k);
                best = best.max(f[k] + q[t * m + k]);
            }
            best
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
enum Move {
    Swap(usize, usize),
    Relocate { from: usize, to: usize },
}

fn best_swap(seq: &[usize], p: &Matrix, current: f64, allowed: Option<&[bool]>) -> Option<(f64, Move)> {
    let n = seq.len();
    let m = p.cols();
    let e = heads(seq, p);
    let q = tails(seq, p);
    let mut row = vec![0.0; m];
    let mut best: Option<(f64, Move)> = None;
    for i in 0..n {
        for j in i + 1..n {
            if let Some(a) = allowed {
                if !a[seq[i]] && !a[seq[j]] {
                    continue;
                }
            }
            if i > 0 {
                row.copy_from_slice(&e[(i - 1) * m..i * m]);
            } else {
                row.iter_mut().for_each(|v| *v = 0.0);
            }
            for pos in i..=j {
                let job = if pos == i {
                    seq[j]
                } else if pos == j {
                    seq[i]
                } else {
                    seq[pos]
                };
                let mut left = 0.0f64;
                for (k, r) in row.iter_mut().enumerate() {
                    left = r.max(left) + p.get(job, k);
                    *r = left;
                }
            }
            let mk = (0..m).map(|k| row[k] + q[(j + 1) * m + k]).fold(0.0, f64::max);
            if mk < current - IMPROVEMENT_EPS && best.is_none_or(|(b, _)| mk < b) {
                best = Some((mk, Move::Swap(i, j)));
            }
        }
    }
    best
}

fn best_relocate(seq: &[usize], p: &Matrix, current: f64, allowed: Option<&[bool]>) -> Option<(f64, Move)> {
    let n = seq.len();
    let mut best: Option<(f64, Move)> = None;
    let mut partial = Vec::with_capacity(n);
    for from in 0..n {
        let job = seq[from];
        if allowed.is_some_and(|a| !a[job]) {
            continue;
        }
        partial.clear();
        partial.extend(seq.iter().enumerate().filter(|&(i, _)| i != from).map(|(_, &j)| j));
        for (to, mk) in insertion_makespans(&partial, job, p).into_iter().enumerate() {
            if to == from {
                continue;
            }
            if mk < current - IMPROVEMENT_EPS && best.is_none_or(|(b, _)| mk < b) {
                best = Some((mk, Move::Relocate { from, to }));
            }
        }
    }
    best
}

fn apply(seq: &mut Vec<usize>, mv: Move) {
    match mv {
        Move::Swap(i, j) => seq.swap(i, j),
        Move::Relocate { from, to } => {
            let job = seq.remove(from);
            seq.insert(to, job);
        }
    }
}

fn descend(
    seq: &[usize],
    p: &Matrix,
    allowed: Option<&[bool]>,
    max_accepted: usize,
    max_passes: usize,
) -> Vec<usize> {
    debug_assert!(is_permutation(seq, p.rows()));
    let mut seq = seq.to_vec();
    let mut current = super::makespan_unchecked(&seq, p);
    let (mut passes, mut accepted, mut idle) = (0, 0, 0);
    let mut use_swap = true;
    while passes < max_passes && accepted < max_accepted && idle < 2 && seq.len() > 1 {
        passes += 1;
        let found = if use_swap {
            best_swap(&seq, p, current, allowed)
        } else {
            best_relocate(&seq, p, current, allowed)
        };
        match found {
            Some((mk, mv)) => {
                apply(&mut seq, mv);
                current = mk;
                accepted += 1;
                idle = 0;
            }
            None => idle += 1,
        }
        use_swap = !use_swap;
    }
    debug_assert!(is_permutation(&seq, p.rows()));
    seq
}

/// Best-improvement descent alternating swap and relocate passes until
/// neither improves or `max_passes` is spent.
pub fn local_search(seq: &[usize], p: &Matrix, max_passes: usize) -> Schedule {
    Schedule::evaluate(descend(seq, p, None, usize::MAX, max_passes), p)
}

/// Descent restricted to moves that involve a job in `jobs`, stopping after
/// `max_moves` accepted moves. Returns the sequence, scored under `p`.
pub fn restricted_search(seq: &[usize], p: &Matrix, jobs: &[usize], max_moves: usize) -> Vec<usize> {
    let mut allowed = vec![false; p.rows()];
    for &j in jobs {
        allowed[j] = true;
    }
    descend(seq, p, Some(&allowed), max_moves, usize::MAX)
}
