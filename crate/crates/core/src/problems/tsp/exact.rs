//! Exact and reference tour lengths.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::insertion::farthest_insertion;
use super::local_search::local_search;
use super::{Tour, TspInstance};
use crate::matrix::Matrix;

/// Largest instance solved exactly by [`reference_optimum`].
pub const EXACT_LIMIT: usize = 12;
const MULTI_START_RUNS: u64 = 10;
const REFERENCE_MAX_PASSES: usize = 1_000_000;

/// Held–Karp dynamic programme; `O(2^n · n²)`.
pub fn held_karp(dist: &Matrix) -> Tour {
    let n = dist.rows();
    assert!((1..=20).contains(&n), "held_karp supports 1..=20 cities");
    if n <= 3 {
        let order: Vec<usize> = (0..n).collect();
        let length = super::tour_length(&order, dist).expect("identity");
        return Tour { order, length };
    }
    // City 0 is fixed as the start; masks range over cities 1..n.
    let k = n - 1;
    let full = 1usize << k;
    let mut cost = vec![f64::INFINITY; full * k];
    let mut parent = vec![usize::MAX; full * k];
    for j in 0..k {
        cost[(1 << j) * k + j] = dist.get(0, j + 1);
    }
    for mask in 1..full {
        for j in 0..k {
            if mask & (1 << j) == 0 {
                continue;
            }
            let cur = cost[mask * k + j];
            if !cur.is_finite() {
                continue;
            }
            for nxt in 0..k {
                if mask & (1 << nxt) != 0 {
                    continue;
                }
                let nm = mask | (1 << nxt);
                let cand = cur + dist.get(j + 1, nxt + 1);
                if cand < cost[nm * k + nxt] {
                    cost[nm * k + nxt] = cand;
                    parent[nm * k + nxt] = j;
                }
            }
        }
    }
    let last_mask = full - 1;
    let (mut end, mut best) = (0, f64::INFINITY);
    for j in 0..k {
        let c = cost[last_mask * k + j] + dist.get(j + 1, 0);
        if c < best {
            best = c;
            end = j;
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut mask = last_mask;
    let mut cur = end;
    while cur != usize::MAX {
        order.push(cur + 1);
        let p = parent[mask * k + cur];
        mask &= !(1 << cur);
        cur = p;
    }
    order.push(0);
    order.reverse();
    Tour { order, length: best }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub length: f64,
    pub exact: bool,
}

/// Exact optimum up to [`EXACT_LIMIT`] cities; otherwise the best of ten
/// descents (one from farthest insertion, the rest from seeded random tours).
pub fn reference_optimum(instance: &TspInstance) -> Reference {
    let n = instance.n();
    if n <= EXACT_LIMIT {
        return Reference { length: held_karp(&instance.dist).length, exact: true };
    }
    let fi = farthest_insertion(instance);
    let mut best = local_search(&fi.order, &instance.dist, REFERENCE_MAX_PASSES).length;
    for seed in 1..MULTI_START_RUNS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut start: Vec<usize> = (0..n).collect();
        start.shuffle(&mut rng);
        let t = local_search(&start, &instance.dist, REFERENCE_MAX_PASSES);
        best = best.min(t.length);
    }
    Reference { length: best, exact: false }
}

#[cfg(test)]
mod tests {
    use super::super::{generate, square_corners, tour_length};
    use super::*;

    fn brute_force(dist: &Matrix) -> f64 {
        fn rec(dist: &Matrix, order: &mut Vec<usize>, used: &mut [bool], best: &mut f64) {
            let n = used.len();
            if order.len() == n {
                *best = best.min(tour_length(order, dist).unwrap());
                return;
            }
            for c in 1..n {
                if !used[c] {
                    used[c] = true;
                    order.push(c);
                    rec(dist, order, used, best);
                    order.pop();
                    used[c] = false;
                }
            }
        }
        let n = dist.rows();
        let mut used = vec![false; n];
        used[0] = true;
        let mut best = f64::INFINITY;
        rec(dist, &mut vec![0], &mut used, &mut best);
        best
    }

    #[test]
    fn square() {
        assert!((reference_optimum(&square_corners()).length - 4.0).abs() < 1e-12);
    }

    #[test]
    fn held_karp_matches_enumeration() {
        for seed in 0..5 {
            let inst = generate(10, seed);
            let hk = held_karp(&inst.dist);
            let bf = brute_force(&inst.dist);
            assert!((hk.length - bf).abs() < 1e-9, "seed {seed}: {} vs {bf}", hk.length);
            assert!((tour_length(&hk.order, &inst.dist).unwrap() - hk.length).abs() < 1e-9);
        }
    }

    #[test]
    fn large_reference_beats_insertion() {
        let inst = generate(100, 3);
        let r = reference_optimum(&inst);
        assert!(!r.exact);
        assert!(r.length <= farthest_insertion(&inst).length);
    }
}
