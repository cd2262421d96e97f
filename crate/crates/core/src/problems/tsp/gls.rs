//! Guided local search with a pluggable guide-matrix update.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::insertion::nearest_neighbor;
use super::local_search::local_search;
use super::{tour_length, Tour, TspInstance};
use crate::matrix::Matrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GlsError {
    #[error("update returned a {got:?} matrix, expected {expected:?}")]
    UpdateShapeMismatch { expected: (usize, usize), got: (usize, usize) },
    #[error("update returned a matrix with non-finite entries")]
    UpdateNonFinite,
    #[error("update failed: {0}")]
    Update(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlsBudget {
    pub max_ls_calls: usize,
    pub max_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlsOptions {
    /// Hand the update the true distance matrix instead of the accumulated guide.
    pub pass_true_matrix: bool,
    /// Pass limit for each local-search call.
    pub ls_max_passes: usize,
}

impl Default for GlsOptions {
    fn default() -> Self {
        Self { pass_true_matrix: false, ls_max_passes: 100_000 }
    }
}

/// Inputs handed to the update heuristic for one perturbation.
pub struct UpdateArgs<'a> {
    pub edge_distance: &'a Matrix,
    pub local_opt_tour: &'a [usize],
    pub edge_n_used: &'a Matrix,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlsOutcome {
    /// Best tour under the true distances.
    pub best: Tour,
    pub ls_calls: usize,
    pub elapsed: Duration,
    pub edge_n_used: Matrix,
    /// Best true length after each local-search call.
    pub trace: Vec<f64>,
}

/// Alternates local search on the guide matrix with guide updates.
///
/// The guide starts as the true distances and the tour as nearest neighbour
/// from city 0. After each local search the tour's edges are counted into
/// `edge_n_used` and the update produces the next guide. `seed_of(call)` gives
/// the seed for the perturbation following local-search call `call`.
pub fn guided_local_search<U, S>(
    instance: &TspInstance,
    mut update: U,
    budget: GlsBudget,
    options: GlsOptions,
    seed_of: S,
) -> Result<GlsOutcome, GlsError>
where
    U: FnMut(UpdateArgs<'_>) -> Result<Matrix, String>,
    S: Fn(usize) -> u64,
{
    let start = Instant::now();
    let n = instance.n();
    let dist = &instance.dist;
    let mut guide = dist.clone();
    let mut order = nearest_neighbor(dist, 0);
    let mut best = Tour { length: tour_length(&order, dist).expect("nn tour"), order: order.clone() };
    let mut edge_n_used = Matrix::zeros(n, n);
    let mut trace = Vec::with_capacity(budget.max_ls_calls);
    let mut ls_calls = 0;
    let deadline = Duration::from_secs_f64(budget.max_seconds.max(0.0));

    while ls_calls < budget.max_ls_calls && start.elapsed() < deadline {
        let landscape = if guide.is_symmetric() { guide.clone() } else { guide.symmetrized() };
        order = local_search(&order, &landscape, options.ls_max_passes).order;
        ls_calls += 1;
        let true_len = tour_length(&order, dist).expect("local search keeps permutations");
        if true_len < best.length {
            best = Tour { order: order.clone(), length: true_len };
        }
        trace.push(best.length);
        for i in 0..n {
            let a = order[i];
            let b = order[(i + 1) % n];
            edge_n_used.set(a, b, edge_n_used.get(a, b) + 1.0);
            edge_n_used.set(b, a, edge_n_used.get(b, a) + 1.0);
        }
        if ls_calls == budget.max_ls_calls {
            break;
        }
        let base = if options.pass_true_matrix { dist } else { &guide };
        let next = update(UpdateArgs {
            edge_distance: base,
            local_opt_tour: &order,
            edge_n_used: &edge_n_used,
            seed: seed_of(ls_calls - 1),
        })
        .map_err(GlsError::Update)?;
        if next.shape() != (n, n) {
            return Err(GlsError::UpdateShapeMismatch { expected: (n, n), got: next.shape() });
        }
        if !next.all_finite() {
            return Err(GlsError::UpdateNonFinite);
        }
        guide = next;
    }

    Ok(GlsOutcome { best, ls_calls, elapsed: start.elapsed(), edge_n_used, trace })
}

#[cfg(test)]
mod tests {
    use super::super::builtin::TspUpdate;
    use super::super::exact::held_karp;
    use super::super::generate;
    use super::*;

    fn budget(calls: usize) -> GlsBudget {
        GlsBudget { max_ls_calls: calls, max_seconds: 60.0 }
    }

    #[test]
    fn identity_update_never_worse_than_nn() {
        let inst = generate(30, 1);
        let nn = tour_length(&nearest_neighbor(&inst.dist, 0), &inst.dist).unwrap();
        let out = guided_local_search(
            &inst,
            |a: UpdateArgs<'_>| Ok(a.edge_distance.clone()),
            budget(5),
            GlsOptions::default(),
            |_| 0,
        )
        .unwrap();
        assert!(out.best.length <= nn + 1e-12);
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn edge_counts_sum() {
        let inst = generate(12, 4);
        let k = 7;
        let out = guided_local_search(
            &inst,
            |a: UpdateArgs<'_>| Ok(TspUpdate::Eoh.apply(a.edge_distance, a.local_opt_tour, a.edge_n_used, a.seed)),
            budget(k),
            GlsOptions::default(),
            |c| c as u64,
        )
        .unwrap();
        assert_eq!(out.ls_calls, k);
        assert_eq!(out.edge_n_used.sum(), (2 * 12 * k) as f64);
        assert!(out.edge_n_used.is_symmetric());
        assert!((0..12).all(|i| out.edge_n_used.get(i, i) == 0.0));
    }

    #[test]
    fn eoh_update_finds_small_optimum() {
        let inst = generate(10, 0);
        let opt = held_karp(&inst.dist).length;
        let out = guided_local_search(
            &inst,
            |a: UpdateArgs<'_>| Ok(TspUpdate::Eoh.apply(a.edge_distance, a.local_opt_tour, a.edge_n_used, a.seed)),
            budget(200),
            GlsOptions::default(),
            |c| c as u64,
        )
        .unwrap();
        assert!((out.best.length - opt).abs() < 1e-9, "{} vs {opt}", out.best.length);
    }

    #[test]
    fn bad_updates_rejected() {
        let inst = generate(6, 2);
        let shape = guided_local_search(
            &inst,
            |_: UpdateArgs<'_>| Ok(Matrix::zeros(2, 2)),
            budget(3),
            GlsOptions::default(),
            |_| 0,
        );
        assert_eq!(shape.unwrap_err(), GlsError::UpdateShapeMismatch { expected: (6, 6), got: (2, 2) });
        let nan = guided_local_search(
            &inst,
            |a: UpdateArgs<'_>| {
                let mut m = a.edge_distance.clone();
                m.set(0, 1, f64::NAN);
                Ok(m)
            },
            budget(3),
            GlsOptions::default(),
            |_| 0,
        );
        assert_eq!(nan.unwrap_err(), GlsError::UpdateNonFinite);
    }
}
