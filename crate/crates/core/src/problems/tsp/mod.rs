//! Euclidean TSP: instances, tour primitives, descent, constructive
//! baselines, guided local search and gap-based fitness.

pub mod builtin;
mod exact;
mod gls;
mod insertion;
mod local_search;

pub use builtin::TspUpdate;
pub use exact::{held_karp, reference_optimum, Reference, EXACT_LIMIT};
pub use gls::{guided_local_search, GlsBudget, GlsError, GlsOptions, GlsOutcome, UpdateArgs};
pub use insertion::{farthest_insertion, nearest_insertion, nearest_neighbor};
pub use local_search::{is_local_optimum, local_search};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TspError {
    #[error("order is not a permutation of 0..{0}")]
    NotAPermutation(usize),
}

pub fn is_permutation(order: &[usize], n: usize) -> bool {
    if order.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    order.iter().all(|&c| c < n && !std::mem::replace(&mut seen[c], true))
}

/// Closed-tour length of `order` under `matrix`.
pub fn tour_length(order: &[usize], matrix: &Matrix) -> Result<f64, TspError> {
    let n = matrix.rows();
    if !is_permutation(order, n) {
        return Err(TspError::NotAPermutation(n));
    }
    Ok((0..n).map(|i| matrix.get(order[i], order[(i + 1) % n])).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tour {
    pub order: Vec<usize>,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TspInstance {
    pub coords: Vec<[f64; 2]>,
    pub dist: Matrix,
    pub reference: Option<Reference>,
}

impl TspInstance {
    pub fn from_coords(coords: Vec<[f64; 2]>) -> Self {
        let n = coords.len();
        let dist = Matrix::from_fn(n, n, |i, j| {
            let dx = coords[i][0] - coords[j][0];
            let dy = coords[i][1] - coords[j][1];
            dx.hypot(dy)
        });
        Self { coords, dist, reference: None }
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    /// Attaches the reference length, computing it if absent.
    pub fn with_reference(mut self) -> Self {
        if self.reference.is_none() {
            self.reference = Some(reference_optimum(&self));
        }
        self
    }

    pub fn to_bundle(&self) -> TspBundle {
        let r = self.reference.unwrap_or_else(|| reference_optimum(self));
        TspBundle { coords: self.coords.clone(), reference_length: r.length, reference_exact: r.exact }
    }

    pub fn from_bundle(bundle: TspBundle) -> Self {
        let mut inst = Self::from_coords(bundle.coords);
        inst.reference =
            Some(Reference { length: bundle.reference_length, exact: bundle.reference_exact });
        inst
    }
}

/// On-disk instance form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspBundle {
    pub coords: Vec<[f64; 2]>,
    pub reference_length: f64,
    pub reference_exact: bool,
}

/// `n` i.i.d. uniform points in the unit square. No reference attached.
pub fn generate(n: usize, seed: u64) -> TspInstance {
    assert!(n >= 3, "TSP instances need at least 3 cities");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
    TspInstance::from_coords(coords)
}

/// Mean gap in percent of `lengths[i]` to `references[i]`.
pub fn fitness(lengths: &[f64], references: &[f64]) -> f64 {
    assert_eq!(lengths.len(), references.len());
    assert!(!lengths.is_empty());
    let total: f64 = lengths.iter().zip(references).map(|(l, r)| 100.0 * (l - r) / r).sum();
    total / lengths.len() as f64
}

#[cfg(test)]
pub(crate) fn square_corners() -> TspInstance {
    TspInstance::from_coords(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
}
