//! Constructive tours: nearest neighbour, nearest insertion, farthest insertion.

use super::{tour_length, Tour, TspInstance};
use crate::matrix::Matrix;

/// Greedy nearest-neighbour tour from `start`, lowest index on ties.
pub fn nearest_neighbor(dist: &Matrix, start: usize) -> Vec<usize> {
    let n = dist.rows();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut cur = start;
    visited[cur] = true;
    order.push(cur);
    for _ in 1..n {
        let next = (0..n)
            .filter(|&c| !visited[c])
            .min_by(|&a, &b| dist.get(cur, a).total_cmp(&dist.get(cur, b)))
            .expect("unvisited city");
        visited[next] = true;
        order.push(next);
        cur = next;
    }
    order
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Rule {
    Nearest,
    Farthest,
}

fn insertion(dist: &Matrix, rule: Rule) -> Vec<usize> {
    let n = dist.rows();
    let mut pair = (0, 1);
    for i in 0..n {
        for j in i + 1..n {
            let d = dist.get(i, j);
            let cur = dist.get(pair.0, pair.1);
            let better = match rule {
                Rule::Nearest => d < cur,
                Rule::Farthest => d > cur,
            };
            if better {
                pair = (i, j);
            }
        }
    }
    let mut tour = vec![pair.0, pair.1];
    let mut in_tour = vec![false; n];
    in_tour[pair.0] = true;
    in_tour[pair.1] = true;
    // Distance from each city to the closest tour city.
    let mut reach: Vec<f64> =
        (0..n).map(|c| dist.get(c, pair.0).min(dist.get(c, pair.1))).collect();

    for _ in 2..n {
        let mut pick: Option<usize> = None;
        for c in (0..n).filter(|&c| !in_tour[c]) {
            pick = match pick {
                None => Some(c),
                Some(p) => {
                    let better = match rule {
                        Rule::Nearest => reach[c] < reach[p],
                        Rule::Farthest => reach[c] > reach[p],
                    };
                    Some(if better { c } else { p })
                }
            };
        }
        let c = pick.expect("cities remain");
        let k = tour.len();
        let mut best_pos = 0;
        let mut best_cost = f64::INFINITY;
        for pos in 0..k {
            let a = tour[pos];
            let b = tour[(pos + 1) % k];
            let cost = dist.get(a, c) + dist.get(c, b) - dist.get(a, b);
            if cost < best_cost {
                best_cost = cost;
                best_pos = pos;
            }
        }
        tour.insert(best_pos + 1, c);
        in_tour[c] = true;
        for (o, r) in reach.iter_mut().enumerate() {
            *r = r.min(dist.get(o, c));
        }
    }
    tour
}

fn finish(order: Vec<usize>, dist: &Matrix) -> Tour {
    let length = tour_length(&order, dist).expect("constructed tours are permutations");
    Tour { order, length }
}

pub fn nearest_insertion(instance: &TspInstance) -> Tour {
    finish(insertion(&instance.dist, Rule::Nearest), &instance.dist)
}

pub fn farthest_insertion(instance: &TspInstance) -> Tour {
    finish(insertion(&instance.dist, Rule::Farthest), &instance.dist)
}

#[cfg(test)]
mod tests {
    use super::super::{generate, is_permutation, square_corners, TspInstance};
    use super::*;

    #[test]
    fn square_reaches_perimeter() {
        let inst = square_corners();
        assert!((nearest_insertion(&inst).length - 4.0).abs() < 1e-12);
        assert!((farthest_insertion(&inst).length - 4.0).abs() < 1e-12);
    }

    #[test]
    fn triangle() {
        let inst = TspInstance::from_coords(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let expected = 2.0 + 2f64.sqrt();
        assert!((nearest_insertion(&inst).length - expected).abs() < 1e-12);
        assert!((farthest_insertion(&inst).length - expected).abs() < 1e-12);
    }

    #[test]
    fn constructions_are_permutations() {
        for seed in 0..10 {
            let inst = generate(37, seed);
            assert!(is_permutation(&nearest_insertion(&inst).order, 37));
            assert!(is_permutation(&farthest_insertion(&inst).order, 37));
            assert!(is_permutation(&nearest_neighbor(&inst.dist, 0), 37));
        }
    }
}
