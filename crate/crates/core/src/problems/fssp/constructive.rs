//! Constructive flow-shop heuristics.

use super::local_search::insertion_makespans;
use super::makespan_unchecked;
use crate::matrix::Matrix;

const TIE_EPS: f64 = 1e-12;

/// Johnson's rule for two machines with times `a` and `b`.
pub fn johnson(a: &[f64], b: &[f64]) -> Vec<usize> {
    assert_eq!(a.len(), b.len());
    let (mut first, mut second): (Vec<usize>, Vec<usize>) = (0..a.len()).partition(|&j| a[j] < b[j]);
    first.sort_by(|&x, &y| a[x].total_cmp(&a[y]));
    second.sort_by(|&x, &y| b[y].total_cmp(&b[x]));
    first.extend(second);
    first
}

/// Slope-index ordering by decreasing `e_j / min_k (p_jk + p_j,k+1)`.
pub fn gupta(p: &Matrix) -> Vec<usize> {
    let (n, m) = p.shape();
    let mut order: Vec<usize> = (0..n).collect();
    if m < 2 {
        return order;
    }
    let index: Vec<f64> = (0..n)
        .map(|j| {
            let e = if p.get(j, 0) < p.get(j, m - 1) { 1.0 } else { -1.0 };
            let denom = (0..m - 1).map(|k| p.get(j, k) + p.get(j, k + 1)).fold(f64::INFINITY, f64::min);
            if denom > 0.0 {
                e / denom
            } else {
                e * f64::INFINITY
            }
        })
        .collect();
    order.sort_by(|&x, &y| index[y].total_cmp(&index[x]));
    order
}

/// Campbell-Dudek-Smith: best of the `m - 1` aggregated Johnson sequences.
pub fn cds(p: &Matrix) -> Vec<usize> {
    let (n, m) = p.shape();
    if m < 2 {
        return (0..n).collect();
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for k in 1..m {
        let a: Vec<f64> = (0..n).map(|j| p.row(j)[..k].iter().sum()).collect();
        let b: Vec<f64> = (0..n).map(|j| p.row(j)[m - k..].iter().sum()).collect();
        let seq = johnson(&a, &b);
        let mk = makespan_unchecked(&seq, p);
        if best.as_ref().is_none_or(|(b, _)| mk < *b) {
            best = Some((mk, seq));
        }
    }
    best.expect("m >= 2").1
}

fn by_decreasing_total(p: &Matrix) -> Vec<usize> {
    let totals: Vec<f64> = (0..p.rows()).map(|j| p.row(j).iter().sum()).collect();
    let mut order: Vec<usize> = (0..p.rows()).collect();
    order.sort_by(|&x, &y| totals[y].total_cmp(&totals[x]));
    order
}

/// Total machine idle time between consecutive operations of `seq`.
pub fn total_idle_time(seq: &[usize], p: &Matrix) -> f64 {
    let m = p.cols();
    let mut done = vec![0.0f64; m];
    let mut idle = 0.0;
    for (i, &job) in seq.iter().enumerate() {
        let mut prev = 0.0f64;
        for k in 0..m {
            let start = done[k].max(prev);
            if i > 0 {
                idle += start - done[k];
            }
            prev = start + p.get(job, k);
            done[k] = prev;
        }
    }
    idle
}

fn insertion_heuristic(p: &Matrix, tie_break_idle: bool) -> Vec<usize> {
    let mut seq = Vec::with_capacity(p.rows());
    for job in by_decreasing_total(p) {
        let costs = insertion_makespans(&seq, job, p);
        let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
        let tied = (0..costs.len()).filter(|&t| costs[t] <= min + TIE_EPS);
        let pos = if tie_break_idle {
            tied.map(|t| {
                let mut s = seq.clone();
                s.insert(t, job);
                (t, total_idle_time(&s, p))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(t, _)| t)
        } else {
            tied.into_iter().next()
        };
        seq.insert(pos.expect("at least one position"), job);
    }
    seq
}

/// NEH insertion; ties go to the earliest position.
pub fn neh(p: &Matrix) -> Vec<usize> {
    insertion_heuristic(p, false)
}

/// NEH with makespan ties broken by least total idle time.
pub fn nehff(p: &Matrix) -> Vec<usize> {
    insertion_heuristic(p, true)
}

#[cfg(test)]
mod tests {
    use super::super::{brute_force_optimum, generate, permutations};
    use super::*;

    fn two_machine_optimum(a: &[f64], b: &[f64]) -> f64 {
        let p = Matrix::from_fn(a.len(), 2, |j, k| if k == 0 { a[j] } else { b[j] });
        brute_force_optimum(&p)
    }

    #[test]
    fn johnson_is_optimal_for_two_machines() {
        for seed in 0..30 {
            let inst = generate(6, 2, seed);
            let p = &inst.times;
            let a: Vec<f64> = (0..6).map(|j| p.get(j, 0)).collect();
            let b: Vec<f64> = (0..6).map(|j| p.get(j, 1)).collect();
            let seq = johnson(&a, &b);
            let mk = makespan_unchecked(&seq, p);
            assert!((mk - two_machine_optimum(&a, &b)).abs() < 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn johnson_textbook_case() {
        let a = [3.0, 5.0, 1.0, 6.0, 7.0];
        let b = [6.0, 2.0, 2.0, 6.0, 5.0];
        assert_eq!(johnson(&a, &b), vec![2, 0, 3, 4, 1]);
    }

    #[test]
    fn cds_equals_johnson_on_two_machines() {
        let inst = generate(8, 2, 5);
        let p = &inst.times;
        let a: Vec<f64> = (0..8).map(|j| p.get(j, 0)).collect();
        let b: Vec<f64> = (0..8).map(|j| p.get(j, 1)).collect();
        assert_eq!(cds(p), johnson(&a, &b));
    }

    #[test]
    fn gupta_orders_by_slope_index() {
        let p = Matrix::from_rows(&[vec![1.0, 4.0], vec![4.0, 1.0], vec![2.0, 5.0]]).unwrap();
        // Indices: 1/5, -1/5, 1/7.
        assert_eq!(gupta(&p), vec![0, 2, 1]);
    }

    #[test]
    fn neh_is_permutation_and_competitive() {
        for seed in 0..10 {
            let inst = generate(6, 4, seed);
            let p = &inst.times;
            let seq = neh(p);
            assert!(super::super::is_permutation(&seq, 6));
            let opt = brute_force_optimum(p);
            assert!(makespan_unchecked(&seq, p) <= 1.25 * opt);
        }
    }

    #[test]
    fn nehff_breaks_ties_by_idle_time() {
        // Identical jobs make every insertion position tie on makespan.
        let p = Matrix::from_fn(3, 3, |_, _| 1.0);
        assert_eq!(neh(&p), vec![2, 1, 0]);
        let seq = nehff(&p);
        assert!(super::super::is_permutation(&seq, 3));
        let worst = permutations(3).iter().map(|s| total_idle_time(s, &p)).fold(0.0, f64::max);
        assert!(total_idle_time(&seq, &p) <= worst);
    }

    #[test]
    fn small_worked_cases() {
        let mk = |s: &[usize], p: &Matrix| makespan_unchecked(s, p);
        assert_eq!(johnson(&[3.0, 1.0], &[2.0, 4.0]), vec![1, 0]);
        assert_eq!(johnson(&[2.0; 4], &[2.0; 4]), vec![0, 1, 2, 3]);
        assert_eq!(johnson(&[1.0], &[5.0]), vec![0]);

        let p = Matrix::from_rows(&[vec![1.0, 4.0], vec![4.0, 1.0]]).unwrap();
        assert_eq!(gupta(&p), vec![0, 1]);
        assert_eq!(mk(&gupta(&p), &p), 6.0);
        assert_eq!(brute_force_optimum(&p), 6.0);

        let p = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0]]).unwrap();
        assert_eq!(cds(&p), vec![0, 1]);
        assert_eq!(mk(&cds(&p), &p), 7.0);

        let p = Matrix::from_rows(&[vec![3.0, 4.0], vec![2.0, 2.0], vec![5.0, 1.0]]).unwrap();
        assert_eq!(neh(&p), vec![1, 0, 2]);
        assert_eq!(mk(&neh(&p), &p), 11.0);
        assert_eq!(brute_force_optimum(&p), 11.0);
    }

    #[test]
    fn neh_sanity_band() {
        for seed in 0..100 {
            let n = 2 + (seed % 6) as usize;
            let inst = generate(n, 3, 5000 + seed);
            let p = &inst.times;
            assert!(makespan_unchecked(&neh(p), p) <= 1.2 * brute_force_optimum(p), "seed {seed}");
        }
    }

    #[test]
    fn idle_time_hand_count() {
        let p = Matrix::from_rows(&[vec![1.0, 3.0], vec![3.0, 1.0]]).unwrap();
        assert_eq!(total_idle_time(&[0, 1], &p), 0.0);
        assert_eq!(total_idle_time(&[1, 0], &p), 0.0);
        let q = Matrix::from_rows(&[vec![1.0, 1.0], vec![3.0, 1.0]]).unwrap();
        // Machine 1 idles from 2 to 4 waiting for job 1.
        assert_eq!(total_idle_time(&[0, 1], &q), 2.0);
    }
}
