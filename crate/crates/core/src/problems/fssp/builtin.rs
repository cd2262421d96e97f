//! Native perturbation heuristics returning a matrix and the jobs to move.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FsspHeuristic {
    /// True times, every job movable.
    Identity,
    /// Randomly weighted machine subset picks the heaviest jobs; their times on
    /// those machines get noise.
    Eoh,
    /// Inflates the longest jobs by a fifth.
    ScaleLongest,
}

fn take_count(n: usize) -> usize {
    // Python's `order[-0:]` selects everything.
    match (3 * n) / 10 {
        0 => n,
        c => c,
    }
}

fn stable_argsort(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx
}

impl FsspHeuristic {
    pub const ALL: [FsspHeuristic; 3] = [FsspHeuristic::Identity, FsspHeuristic::Eoh, FsspHeuristic::ScaleLongest];

    pub fn name(self) -> &'static str {
        match self {
            FsspHeuristic::Identity => "identity",
            FsspHeuristic::Eoh => "eoh",
            FsspHeuristic::ScaleLongest => "scale_longest",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            FsspHeuristic::Identity => "Return the time matrix unchanged and allow every job to move.",
            FsspHeuristic::Eoh => {
                "Select a random subset of machines, rank jobs by their randomly weighted average time on it, and scale the top jobs' times on those machines by factors in [0.8, 1.2]."
            }
            FsspHeuristic::ScaleLongest => "Scale the longest jobs' times by 1.2 and move only those jobs.",
        }
    }

    pub fn source(self, function_name: &str) -> String {
        let body = match self {
            FsspHeuristic::Identity => concat!(
                "import numpy as np\n",
                "def {fn}(current_sequence, time_matrix, m, n):\n",
                "    return time_matrix.copy(), np.arange(n)"
            ),
            FsspHeuristic::Eoh => concat!(
                "import numpy as np\n",
                "def {fn}(current_sequence, time_matrix, m, n):\n",
                "    machine_subset = np.random.choice(m, max(1, int(0.3*m)), replace=False)\n",
                "    weighted_avg_execution_time = np.average(time_matrix[:, machine_subset], axis=1, weights=np.random.rand(len(machine_subset)))\n",
                "    perturb_jobs = np.argsort(weighted_avg_execution_time)[-int(0.3*n):]\n",
                "    new_matrix = time_matrix.copy()\n",
                "    perturbation_factors = np.random.uniform(0.8, 1.2, size=(len(perturb_jobs), len(machine_subset)))\n",
                "    new_matrix[perturb_jobs[:, np.newaxis], machine_subset] *= perturbation_factors\n",
                "    return new_matrix, perturb_jobs"
            ),
            FsspHeuristic::ScaleLongest => concat!(
                "import numpy as np\n",
                "def {fn}(current_sequence, time_matrix, m, n):\n",
                "    new_matrix = time_matrix.copy()\n",
                "    totals = time_matrix.sum(axis=1)\n",
                "    jobs = np.argsort(totals, kind=\"stable\")[-int(0.3 * n):]\n",
                "    new_matrix[jobs] *= 1.2\n",
                "    return new_matrix, jobs"
            ),
        };
        body.replace("{fn}", function_name)
    }

    pub fn apply(self, _current_sequence: &[usize], times: &Matrix, seed: u64) -> (Matrix, Vec<i64>) {
        let (n, m) = times.shape();
        match self {
            FsspHeuristic::Identity => (times.clone(), (0..n as i64).collect()),
            FsspHeuristic::Eoh => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let k = ((3 * m) / 10).max(1);
                let machines = sample(&mut rng, m, k).into_vec();
                let weights: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
                let wsum: f64 = weights.iter().sum();
                let weighted: Vec<f64> = (0..n)
                    .map(|j| machines.iter().zip(&weights).map(|(&mc, w)| times.get(j, mc) * w).sum::<f64>() / wsum)
                    .collect();
                let order = stable_argsort(&weighted);
                let jobs = &order[n - take_count(n)..];
                let mut out = times.clone();
                for &j in jobs {
                    for &mc in &machines {
                        out.set(j, mc, out.get(j, mc) * rng.random_range(0.8..1.2));
                    }
                }
                (out, jobs.iter().map(|&j| j as i64).collect())
            }
            FsspHeuristic::ScaleLongest => {
                let totals: Vec<f64> = (0..n).map(|j| times.row(j).iter().sum()).collect();
                let order = stable_argsort(&totals);
                let jobs = &order[n - take_count(n)..];
                let mut out = times.clone();
                for &j in jobs {
                    for c in 0..m {
                        out.set(j, c, out.get(j, c) * 1.2);
                    }
                }
                (out, jobs.iter().map(|&j| j as i64).collect())
            }
        }
    }
}
