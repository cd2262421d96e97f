//! 2-opt and relocate descent on a closed tour.

use super::{is_permutation, tour_length, Tour};
use crate::matrix::Matrix;

const IMPROVEMENT_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    /// Reverse the segment `i + 1 ..= j`.
    TwoOpt { i: usize, j: usize },
    /// Remove the city at `from` and reinsert it right after city `after`.
    Relocate { from: usize, after: usize },
}

fn best_two_opt(order: &[usize], m: &Matrix) -> Option<(f64, Move)> {
    let n = order.len();
    let mut best: Option<(f64, Move)> = None;
    for i in 0..n - 1 {
        let a = order[i];
        let b = order[i + 1];
        let ab = m.get(a, b);
        // i = 0 with j = n - 1 shares the closing edge.
        let j_end = if i == 0 { n - 1 } else { n };
        for j in i + 2..j_end {
            let c = order[j];
            let d = order[(j + 1) % n];
            let delta = m.get(a, c) + m.get(b, d) - ab - m.get(c, d);
            if delta < -IMPROVEMENT_EPS && best.is_none_or(|(bd, _)| delta < bd) {
                best = Some((delta, Move::TwoOpt { i, j }));
            }
        }
    }
    best
}

fn best_relocate(order: &[usize], m: &Matrix) -> Option<(f64, Move)> {
    let n = order.len();
    let mut best: Option<(f64, Move)> = None;
    for from in 0..n {
        let x = order[from];
        let p = order[(from + n - 1) % n];
        let q = order[(from + 1) % n];
        let gain = m.get(p, x) + m.get(x, q) - m.get(p, q);
        for k in 0..n {
            let u = order[k];
            let v = order[(k + 1) % n];
            if u == x || v == x {
                continue;
            }
            let delta = m.get(u, x) + m.get(x, v) - m.get(u, v) - gain;
            if delta < -IMPROVEMENT_EPS && best.is_none_or(|(bd, _)| delta < bd) {
                best = Some((delta, Move::Relocate { from, after: k }));
            }
        }
    }
    best
}

fn apply(order: &mut Vec<usize>, mv: Move) {
    match mv {
        Move::TwoOpt { i, j } => order[i + 1..=j].reverse(),
        Move::Relocate { from, after } => {
            let anchor = order[after];
            let x = order.remove(from);
            let pos = order.iter().position(|&c| c == anchor).expect("anchor present");
            order.insert(pos + 1, x);
        }
    }
}

/// Best-improvement descent alternating 2-opt and relocate scans.
///
/// Each pass scans one neighbourhood fully and applies its best improving
/// move. Stops once a 2-opt pass and a relocate pass both find nothing, or
/// after `max_passes` passes.
pub fn local_search(order: &[usize], matrix: &Matrix, max_passes: usize) -> Tour {
    debug_assert!(is_permutation(order, matrix.rows()));
    let mut tour = order.to_vec();
    let n = tour.len();
    if n >= 4 {
        let mut idle = 0;
        let mut use_two_opt = true;
        let mut passes = 0;
        while passes < max_passes && idle < 2 {
            passes += 1;
            let found =
                if use_two_opt { best_two_opt(&tour, matrix) } else { best_relocate(&tour, matrix) };
            match found {
                Some((_, mv)) => {
                    apply(&mut tour, mv);
                    idle = 0;
                }
                None => idle += 1,
            }
            use_two_opt = !use_two_opt;
        }
    }
    debug_assert!(is_permutation(&tour, n));
    let length = tour_length(&tour, matrix).expect("permutation");
    Tour { order: tour, length }
}

/// True when no single 2-opt or relocate move improves by more than the
/// acceptance threshold.
pub fn is_local_optimum(order: &[usize], matrix: &Matrix) -> bool {
    order.len() < 4 || (best_two_opt(order, matrix).is_none() && best_relocate(order, matrix).is_none())
}
