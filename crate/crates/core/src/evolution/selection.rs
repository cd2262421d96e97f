use rand::Rng;
use thiserror::Error;

use super::types::{Heuristic, Population};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot select parents from an empty population")]
pub struct EmptyPopulation;

/// Selection probabilities `∝ 1/(r + pop_size)` for ranks `r = 1..=n_ranked`.
pub fn rank_weights(pop_size: usize, n_ranked: usize) -> Vec<f64> {
    let raw: Vec<f64> = (1..=n_ranked).map(|r| 1.0 / (r + pop_size) as f64).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

fn draw<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if x < w {
            return i;
        }
        x -= w;
    }
    weights.len() - 1
}

/// Draws `min(k, |P|)` distinct members without replacement. Each draw
/// re-weights the remaining members by their original population rank.
pub fn select_parents<R: Rng + ?Sized>(
    population: &Population,
    k: usize,
    rng: &mut R,
) -> Result<Vec<Heuristic>, EmptyPopulation> {
    if population.is_empty() {
        return Err(EmptyPopulation);
    }
    let weights = rank_weights(population.capacity.max(population.len()), population.len());
    let mut remaining: Vec<usize> = (0..population.len()).collect();
    let mut out = Vec::with_capacity(k.min(population.len()));
    while out.len() < k && !remaining.is_empty() {
        let w: Vec<f64> = remaining.iter().map(|&i| weights[i]).collect();
        let pick = remaining.remove(draw(&w, rng));
        out.push(population.members[pick].clone());
    }
    Ok(out)
}
