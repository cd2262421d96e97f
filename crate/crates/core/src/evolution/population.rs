use std::collections::HashSet;

use super::types::{Heuristic, Population};

/// The `n` lowest-fitness members of `population ∪ feasible candidates`.
///
/// Candidates whose code text already appears (in the population or earlier
/// in `candidates`) are dropped, so the older copy survives. The sort is
/// stable, so equal fitness keeps the older member first.
pub fn manage_population(population: &Population, candidates: &[Heuristic], n: usize) -> Population {
    let mut seen: HashSet<&str> = population.members.iter().map(|h| h.code.as_str()).collect();
    let mut pool: Vec<Heuristic> = population.members.clone();
    for c in candidates {
        if c.feasible && c.fitness.is_some_and(f64::is_finite) && seen.insert(c.code.as_str()) {
            pool.push(c.clone());
        }
    }
    pool.sort_by(|a, b| a.fitness.unwrap_or(f64::INFINITY).total_cmp(&b.fitness.unwrap_or(f64::INFINITY)));
    pool.truncate(n);
    Population { members: pool, capacity: n }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::types::Strategy;
    use proptest::prelude::*;

    fn h(id: &str, code: &str, fitness: f64, feasible: bool) -> Heuristic {
        Heuristic {
            id: id.into(),
            thought: String::new(),
            code: code.into(),
            fitness: feasible.then_some(fitness),
            raw_score: None,
            generation: 1,
            strategy: Strategy::E1,
            parent_ids: vec![],
            feasible,
            error: (!feasible).then(|| "bad".to_string()),
        }
    }

    fn fits(p: &Population) -> Vec<f64> {
        p.members.iter().map(|m| m.fitness.unwrap()).collect()
    }

    #[test]
    fn examples() {
        let p = Population { members: vec![h("a", "A", 0.2, true), h("b", "B", 0.3, true)], capacity: 2 };
        let out = manage_population(&p, &[h("c", "C", 0.1, true), h("d", "D", 0.5, false)], 2);
        assert_eq!(fits(&out), vec![0.1, 0.2]);

        let out = manage_population(&p, &[h("dup", "A", 0.0, true)], 2);
        assert_eq!(out.members[0].id, "a");

        let out = manage_population(&Population::empty(5), &[h("x", "X", 1.0, true)], 5);
        assert_eq!(out.len(), 1);
        assert!(out.is_valid());
    }

    /// Brute force: filter, dedup by first occurrence, sort, take.
    fn oracle(p: &Population, c: &[Heuristic], n: usize) -> Vec<String> {
        let mut all: Vec<&Heuristic> = p.members.iter().chain(c.iter().filter(|x| x.feasible)).collect();
        let mut kept: Vec<&Heuristic> = Vec::new();
        for x in all.drain(..) {
            if !kept.iter().any(|k| k.code == x.code) {
                kept.push(x);
            }
        }
        let mut idx: Vec<usize> = (0..kept.len()).collect();
        idx.sort_by(|&a, &b| {
            kept[a].fitness.unwrap().partial_cmp(&kept[b].fitness.unwrap()).unwrap().then(a.cmp(&b))
        });
        idx.into_iter().take(n).map(|i| kept[i].id.clone()).collect()
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            base in proptest::collection::vec((0u8..6, 0u8..10), 0..5),
            cands in proptest::collection::vec((0u8..8, 0u8..10, any::<bool>()), 0..8),
            n in 1usize..6,
        ) {
            let mut members: Vec<Heuristic> = Vec::new();
            for (i, (code, f)) in base.iter().enumerate() {
                if members.iter().all(|m| m.code != code.to_string()) {
                    members.push(h(&format!("p{i}"), &code.to_string(), *f as f64, true));
                }
            }
            members.sort_by(|a, b| a.fitness.partial_cmp(&b.fitness).unwrap());
            members.truncate(n);
            let p = Population { members, capacity: n };
            let c: Vec<Heuristic> = cands
                .iter()
                .enumerate()
                .map(|(i, (code, f, ok))| h(&format!("c{i}"), &code.to_string(), *f as f64, *ok))
                .collect();
            let out = manage_population(&p, &c, n);
            prop_assert!(out.is_valid());
            prop_assert_eq!(out.members.iter().map(|m| m.id.clone()).collect::<Vec<_>>(), oracle(&p, &c, n));
            if let Some(before) = p.best_fitness() {
                prop_assert!(out.best_fitness().unwrap() <= before);
            }
        }
    }
}
