//! Martello–Toth L2 lower bound on the number of bins.

/// Trivial bound `ceil(sum / capacity)`.
pub fn l1_lower_bound(items: &[u32], capacity: u32) -> u64 {
    let total: u64 = items.iter().map(|&s| u64::from(s)).sum();
    total.div_ceil(u64::from(capacity))
}

/// L2 bound: the maximum over `alpha ∈ {0} ∪ {distinct sizes ≤ C/2}` of
///
/// `|J1| + |J2| + max(0, ceil((Σ J3 − (|J2|·C − Σ J2)) / C))`
///
/// with `J1 = {s > C − α}`, `J2 = {C − α ≥ s > C/2}`, `J3 = {C/2 ≥ s ≥ α}`.
pub fn l2_lower_bound(items: &[u32], capacity: u32) -> u64 {
    let c = i64::from(capacity);
    let mut sizes: Vec<i64> = items.iter().map(|&s| i64::from(s)).collect();
    sizes.sort_unstable();

    let mut alphas: Vec<i64> = vec![0];
    alphas.extend(sizes.iter().copied().filter(|&s| 2 * s <= c));
    alphas.dedup();

    let mut best = 0i64;
    for alpha in alphas {
        let (mut j1, mut j2, mut sum2, mut sum3) = (0i64, 0i64, 0i64, 0i64);
        for &s in &sizes {
            if s > c - alpha {
                j1 += 1;
            } else if 2 * s > c {
                j2 += 1;
                sum2 += s;
            } else if s >= alpha {
                sum3 += s;
            }
        }
        let slack = j2 * c - sum2;
        let extra = (sum3 - slack).max(0);
        let bound = j1 + j2 + (extra + c - 1) / c;
        best = best.max(bound);
    }
    best as u64
}
