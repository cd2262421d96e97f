//! Native guide-update heuristics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TspUpdate {
    /// Returns the guide unchanged.
    Identity,
    /// Adds a fixed fraction of the mean distance to every edge of the local optimum.
    PenalizeTour,
    /// Pheromone-like update with noise, usage penalty and decay.
    Eoh,
}

impl TspUpdate {
    pub const ALL: [TspUpdate; 3] = [TspUpdate::Identity, TspUpdate::PenalizeTour, TspUpdate::Eoh];

    pub fn name(self) -> &'static str {
        match self {
            TspUpdate::Identity => "identity",
            TspUpdate::PenalizeTour => "penalize_tour",
            TspUpdate::Eoh => "eoh",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            TspUpdate::Identity => "Keep the distance matrix unchanged.",
            TspUpdate::PenalizeTour => {
                "Lengthen every edge of the local optimal tour by a tenth of the mean distance."
            }
            TspUpdate::Eoh => {
                "Update tour edges with a pheromone-like term driven by edge count, distance and usage, plus a decay factor."
            }
        }
    }

    pub fn source(self, function_name: &str) -> String {
        let body = match self {
            TspUpdate::Identity => concat!(
                "import numpy as np\n",
                "def {fn}(edge_distance, local_opt_tour, edge_n_used):\n",
                "    return np.copy(edge_distance)"
            ),
            TspUpdate::PenalizeTour => concat!(
                "import numpy as np\n",
                "def {fn}(edge_distance, local_opt_tour, edge_n_used):\n",
                "    updated_edge_distance = np.copy(edge_distance)\n",
                "    penalty = 0.1 * np.mean(edge_distance)\n",
                "    n = len(local_opt_tour)\n",
                "    for i in range(n):\n",
                "        a = local_opt_tour[i]\n",
                "        b = local_opt_tour[(i + 1) % n]\n",
                "        updated_edge_distance[a][b] += penalty\n",
                "        updated_edge_distance[b][a] += penalty\n",
                "    return updated_edge_distance"
            ),
            TspUpdate::Eoh => concat!(
                "import numpy as np\n",
                "\n",
                "def {fn}(edge_distance, local_opt_tour, edge_n_used):\n",
                "    updated_edge_distance = np.copy(edge_distance)\n",
                "    edge_count = np.zeros_like(edge_distance)\n",
                "    for i in range(len(local_opt_tour) - 1):\n",
                "        start = local_opt_tour[i]\n",
                "        end = local_opt_tour[i + 1]\n",
                "        edge_count[start][end] += 1\n",
                "        edge_count[end][start] += 1\n",
                "    edge_n_used_max = np.max(edge_n_used)\n",
                "    decay_factor = 0.1\n",
                "    mean_distance = np.mean(edge_distance)\n",
                "    for i in range(edge_distance.shape[0]):\n",
                "        for j in range(edge_distance.shape[1]):\n",
                "            if edge_count[i][j] > 0:\n",
                "                noise_factor = (np.random.uniform(0.7, 1.3) / edge_count[i][j]) + (edge_distance[i][j] / mean_distance) - (0.3 / edge_n_used_max) * edge_n_used[i][j]\n",
                "                updated_edge_distance[i][j] += noise_factor * (1 + edge_count[i][j]) - decay_factor * updated_edge_distance[i][j]\n",
                "    return updated_edge_distance"
            ),
        };
        body.replace("{fn}", function_name)
    }

    /// Applies the update. `seed` drives the stochastic variants.
    pub fn apply(
        self,
        edge_distance: &Matrix,
        local_opt_tour: &[usize],
        edge_n_used: &Matrix,
        seed: u64,
    ) -> Matrix {
        match self {
            TspUpdate::Identity => edge_distance.clone(),
            TspUpdate::PenalizeTour => {
                let mut out = edge_distance.clone();
                let penalty = 0.1 * edge_distance.mean();
                let n = local_opt_tour.len();
                for i in 0..n {
                    let a = local_opt_tour[i];
                    let b = local_opt_tour[(i + 1) % n];
                    out.set(a, b, out.get(a, b) + penalty);
                    out.set(b, a, out.get(b, a) + penalty);
                }
                out
            }
            TspUpdate::Eoh => {
                let (rows, cols) = edge_distance.shape();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut out = edge_distance.clone();
                let mut count = Matrix::zeros(rows, cols);
                // The closing edge is not counted, as in the source listing.
                for w in local_opt_tour.windows(2) {
                    let (s, e) = (w[0], w[1]);
                    count.set(s, e, count.get(s, e) + 1.0);
                    count.set(e, s, count.get(e, s) + 1.0);
                }
                let used_max = edge_n_used.max();
                let decay = 0.1;
                let mean = edge_distance.mean();
                for i in 0..rows {
                    for j in 0..cols {
                        let c = count.get(i, j);
                        if c > 0.0 {
                            let noise = rng.random_range(0.7..1.3) / c
                                + edge_distance.get(i, j) / mean
                                - (0.3 / used_max) * edge_n_used.get(i, j);
                            let cur = out.get(i, j);
                            out.set(i, j, cur + (noise * (1.0 + c) - decay * cur));
                        }
                    }
                }
                out
            }
        }
    }
}
