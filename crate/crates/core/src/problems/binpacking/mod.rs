//! Online bin packing: instance generation, the online assignment simulator,
//! lower bounds and fitness aggregation.

mod lower_bound;
mod scorers;

pub use lower_bound::{l1_lower_bound, l2_lower_bound};
pub use scorers::BuiltinScorer;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Weibull};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper clip applied to generated item sizes regardless of capacity.
pub const MAX_GENERATED_ITEM: u32 = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PackingError {
    #[error("scorer returned {got} scores for {expected} feasible bins")]
    ScorerShapeMismatch { expected: usize, got: usize },
    #[error("no feasible bin for item {item} at position {index}")]
    NoFeasibleBin { item: u32, index: usize },
    #[error("item {item} at position {index} outside [1, {capacity}]")]
    InvalidItem { item: u32, index: usize, capacity: u32 },
    #[error("scorer failed at item {index}: {detail}")]
    Scorer { index: usize, detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinInstance {
    pub capacity: u32,
    pub items: Vec<u32>,
}

impl BinInstance {
    pub fn new(items: Vec<u32>, capacity: u32) -> Result<Self, PackingError> {
        if let Some((index, &item)) =
            items.iter().enumerate().find(|(_, &s)| s == 0 || s > capacity)
        {
            return Err(PackingError::InvalidItem { item, index, capacity });
        }
        Ok(Self { capacity, items })
    }
}

/// Whether a bin whose rest equals the item size can take it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitRule {
    /// `rest >= item`
    #[default]
    AllowExact,
    /// `rest > item`
    Strict,
}

impl FitRule {
    #[inline]
    fn fits(self, rest: u32, item: u32) -> bool {
        match self {
            FitRule::AllowExact => rest >= item,
            FitRule::Strict => rest > item,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingResult {
    pub bins_used: u64,
    pub loads: Vec<u32>,
    pub lb: u64,
    pub ratio: f64,
    pub gap: f64,
}

impl PackingResult {
    /// Assembles the result from a used-bin count and load vector, computing
    /// L2 for `instance`.
    pub fn from_counts(instance: &BinInstance, bins_used: u64, loads: Vec<u32>) -> Self {
        Self::with_bound(bins_used, l2_lower_bound(&instance.items, instance.capacity), loads)
    }

    pub fn with_bound(bins_used: u64, lb: u64, loads: Vec<u32>) -> Self {
        let n = bins_used as f64;
        let lbf = lb as f64;
        Self { bins_used, loads, lb, ratio: lbf / n, gap: (n - lbf) / lbf }
    }
}

/// Draws `n_items` sizes as `ceil(Weibull(shape, scale))` clipped to
/// `[1, min(100, capacity)]`.
pub fn generate_weibull(
    n_items: usize,
    capacity: u32,
    shape: f64,
    scale: f64,
    seed: u64,
) -> BinInstance {
    let dist = Weibull::new(scale, shape).expect("weibull parameters must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hi = MAX_GENERATED_ITEM.min(capacity).max(1);
    let items = (0..n_items)
        .map(|_| {
            let x: f64 = dist.sample(&mut rng);
            (x.ceil().clamp(1.0, f64::from(hi))) as u32
        })
        .collect();
    BinInstance { capacity, items }
}

/// Orders scores with NaN below −∞, so NaN never wins an argmax.
#[inline]
fn beats(candidate: f64, best: f64) -> bool {
    match (candidate.is_nan(), best.is_nan()) {
        (true, _) => false,
        (false, true) => true,
        (false, false) => candidate > best,
    }
}

/// Index of the maximal score, first index on ties.
pub fn argmax(scores: &[f64]) -> Option<usize> {
    let mut iter = scores.iter().enumerate();
    let (mut best_i, mut best) = iter.next().map(|(i, &s)| (i, s))?;
    for (i, &s) in iter {
        if beats(s, best) {
            best_i = i;
            best = s;
        }
    }
    Some(best_i)
}

/// Packs items online into `items.len()` pre-opened bins.
///
/// For each item the scorer sees the rests of all feasible bins in bin-index
/// order; the item goes to the highest-scoring one. Used bins are those whose
/// rest ended below capacity.
pub fn simulate_online<F>(
    instance: &BinInstance,
    fit: FitRule,
    mut scorer: F,
) -> Result<PackingResult, PackingError>
where
    F: FnMut(u32, &[u32]) -> Result<Vec<f64>, String>,
{
    let c = instance.capacity;
    let mut rests = vec![c; instance.items.len()];
    let mut feasible_idx: Vec<usize> = Vec::with_capacity(rests.len());
    let mut feasible_rest: Vec<u32> = Vec::with_capacity(rests.len());

    for (index, &item) in instance.items.iter().enumerate() {
        if item == 0 || item > c {
            return Err(PackingError::InvalidItem { item, index, capacity: c });
        }
        feasible_idx.clear();
        feasible_rest.clear();
        for (b, &r) in rests.iter().enumerate() {
            if fit.fits(r, item) {
                feasible_idx.push(b);
                feasible_rest.push(r);
            }
        }
        if feasible_idx.is_empty() {
            return Err(PackingError::NoFeasibleBin { item, index });
        }
        let scores =
            scorer(item, &feasible_rest).map_err(|detail| PackingError::Scorer { index, detail })?;
        if scores.len() != feasible_rest.len() {
            return Err(PackingError::ScorerShapeMismatch {
                expected: feasible_rest.len(),
                got: scores.len(),
            });
        }
        let pick = argmax(&scores).expect("non-empty");
        rests[feasible_idx[pick]] -= item;
    }

    let loads: Vec<u32> = rests.iter().filter(|&&r| r < c).map(|&r| c - r).collect();
    Ok(PackingResult::from_counts(instance, loads.len() as u64, loads))
}

/// Convenience wrapper for built-in scorers.
pub fn simulate_builtin(
    instance: &BinInstance,
    fit: FitRule,
    scorer: BuiltinScorer,
) -> Result<PackingResult, PackingError> {
    simulate_online(instance, fit, |item, rests| Ok(scorer.score(item, rests)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PackingSummary {
    /// Mean of lb/n; the raw (maximized) score.
    pub mean_ratio: f64,
    /// Mean of (n − lb)/lb in percent.
    pub mean_gap: f64,
}

impl PackingSummary {
    /// Lower-is-better fitness.
    pub fn fitness(&self) -> f64 {
        -self.mean_ratio
    }
}

pub fn fitness_and_gap(results: &[PackingResult]) -> PackingSummary {
    assert!(!results.is_empty(), "fitness over an empty result set");
    let k = results.len() as f64;
    PackingSummary {
        mean_ratio: results.iter().map(|r| r.ratio).sum::<f64>() / k,
        mean_gap: 100.0 * results.iter().map(|r| r.gap).sum::<f64>() / k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inst(items: &[u32]) -> BinInstance {
        BinInstance::new(items.to_vec(), 100).unwrap()
    }

    #[test]
    fn generator_clips_and_is_deterministic() {
        let a = generate_weibull(5000, 100, 3.0, 45.0, 0);
        assert_eq!(a.items.len(), 5000);
        assert!(a.items.iter().all(|&s| (1..=100).contains(&s)));
        assert_eq!(a, generate_weibull(5000, 100, 3.0, 45.0, 0));
        assert_ne!(a, generate_weibull(5000, 100, 3.0, 45.0, 1));
    }

    #[test]
    fn generator_mean_matches_weibull() {
        // 45·Γ(4/3) ≈ 40.2, plus ~0.5 from ceil.
        let a = generate_weibull(100_000, 100, 3.0, 45.0, 7);
        let mean = a.items.iter().map(|&s| f64::from(s)).sum::<f64>() / 1e5;
        assert!((38.0..=42.0).contains(&mean), "{mean}");
    }

    #[test]
    fn capacity_only_widens_bins() {
        let a = generate_weibull(1000, 100, 3.0, 45.0, 3);
        let b = generate_weibull(1000, 500, 3.0, 45.0, 3);
        assert_eq!(a.items, b.items);
    }

    #[test]
    fn best_fit_exact_fill() {
        let r = simulate_builtin(&inst(&[30, 30, 40]), FitRule::AllowExact, BuiltinScorer::BestFit)
            .unwrap();
        assert_eq!(r.bins_used, 1);
        assert_eq!(r.loads, vec![100]);
    }

    #[test]
    fn pigeonhole_and_forced() {
        let r = simulate_builtin(&inst(&[60, 60]), FitRule::AllowExact, BuiltinScorer::FirstFit)
            .unwrap();
        assert_eq!(r.bins_used, 2);
        for s in BuiltinScorer::ALL {
            let r = simulate_builtin(&inst(&[100]), FitRule::AllowExact, s).unwrap();
            assert_eq!(r.bins_used, 1, "{}", s.name());
        }
    }

    #[test]
    fn strict_rule_cannot_place_full_item() {
        let err = simulate_builtin(&inst(&[100]), FitRule::Strict, BuiltinScorer::FirstFit);
        assert!(matches!(err, Err(PackingError::NoFeasibleBin { .. })));
    }

    #[test]
    fn shape_mismatch_detected() {
        let err = simulate_online(&inst(&[10]), FitRule::AllowExact, |_, _| Ok(vec![1.0, 2.0]));
        assert_eq!(err, Err(PackingError::ScorerShapeMismatch { expected: 1, got: 2 }));
    }

    #[test]
    fn argmax_tie_and_nan_rules() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), Some(1));
        assert_eq!(argmax(&[f64::NAN, f64::NEG_INFINITY]), Some(1));
        assert_eq!(argmax(&[f64::NAN, f64::NAN]), Some(0));
        assert_eq!(argmax(&[f64::NEG_INFINITY, 0.0, f64::NAN]), Some(1));
        assert_eq!(argmax(&[]), None);
    }

    #[test]
    fn summary_arithmetic() {
        let r = PackingResult::with_bound(104, 100, vec![]);
        let s = fitness_and_gap(std::slice::from_ref(&r));
        assert!((s.mean_ratio - 0.961_538_461).abs() < 1e-8);
        assert!((s.mean_gap - 4.0).abs() < 1e-12);
        assert_eq!(s.fitness(), -s.mean_ratio);

        let exact = PackingResult::from_counts(&inst(&[50, 50]), 1, vec![100]);
        assert_eq!(exact.ratio, 1.0);
        assert_eq!(exact.gap, 0.0);

        let a = PackingResult::with_bound(102, 100, vec![]);
        let b = PackingResult::with_bound(104, 100, vec![]);
        assert!((fitness_and_gap(&[a, b]).mean_gap - 3.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn conservation_and_bounds(items in prop::collection::vec(1u32..=100, 1..60), which in 0usize..7) {
            let instance = inst(&items);
            let r = simulate_builtin(&instance, FitRule::AllowExact, BuiltinScorer::ALL[which]).unwrap();
            prop_assert_eq!(r.loads.iter().map(|&l| u64::from(l)).sum::<u64>(), items.iter().map(|&s| u64::from(s)).sum::<u64>());
            prop_assert!(r.loads.iter().all(|&l| l <= 100));
            prop_assert!(r.bins_used >= r.lb);
            prop_assert!(r.lb >= l1_lower_bound(&items, 100));
        }

        #[test]
        fn constant_scorer_is_first_fit(items in prop::collection::vec(1u32..=100, 1..80)) {
            let instance = inst(&items);
            let constant = simulate_online(&instance, FitRule::AllowExact, |_, r| Ok(vec![0.0; r.len()])).unwrap();
            let ff = simulate_builtin(&instance, FitRule::AllowExact, BuiltinScorer::FirstFit).unwrap();
            prop_assert_eq!(constant, ff);
        }
    }
}
