//! Native ports of the reference bin-scoring heuristics.
//!
//! Each scorer mirrors the array semantics of its source listing in 64-bit
//! IEEE arithmetic: integer subexpressions stay exact, true divisions happen
//! once, and division by zero yields ±∞ or NaN rather than an error.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinScorer {
    FirstFit,
    BestFit,
    WorstFit,
    TwiceItem,
    Eoc,
    FunSearch,
    Eoh,
}

impl BuiltinScorer {
    pub const ALL: [BuiltinScorer; 7] = [
        BuiltinScorer::FirstFit,
        BuiltinScorer::BestFit,
        BuiltinScorer::WorstFit,
        BuiltinScorer::TwiceItem,
        BuiltinScorer::Eoc,
        BuiltinScorer::FunSearch,
        BuiltinScorer::Eoh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinScorer::FirstFit => "first_fit",
            BuiltinScorer::BestFit => "best_fit",
            BuiltinScorer::WorstFit => "worst_fit",
            BuiltinScorer::TwiceItem => "twice_item",
            BuiltinScorer::Eoc => "eoc",
            BuiltinScorer::FunSearch => "funsearch",
            BuiltinScorer::Eoh => "eoh",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    /// One-sentence description used as the heuristic's thought.
    pub fn description(self) -> &'static str {
        match self {
            BuiltinScorer::FirstFit => "Assign the item to the first bin that can hold it.",
            BuiltinScorer::BestFit => {
                "Assign the item to the feasible bin with the least remaining capacity."
            }
            BuiltinScorer::WorstFit => {
                "Assign the item to the feasible bin with the most remaining capacity."
            }
            BuiltinScorer::TwiceItem => {
                "Prefer bins whose remaining capacity is closest to twice the item size."
            }
            BuiltinScorer::Eoc => {
                "Combine a logarithmic item term with polynomial bin terms and never pick the emptiest bin."
            }
            BuiltinScorer::FunSearch => {
                "Score bins by squared distances to the largest bin, negate bins larger than the item, and difference neighbouring scores."
            }
            BuiltinScorer::Eoh => {
                "Blend a utilization ratio with a square-root term, a size-dependent adjustment and an exponentially decaying factor."
            }
        }
    }

    /// Source listing of the scorer as a function named `function_name`.
    pub fn source(self, function_name: &str) -> String {
        let body = match self {
            BuiltinScorer::FirstFit => {
                "import numpy as np\ndef {fn}(item, bins):\n    scores = -np.arange(len(bins))\n    return scores"
            }
            BuiltinScorer::BestFit => "def {fn}(item, bins):\n    scores = item - bins\n    return scores",
            BuiltinScorer::WorstFit => "def {fn}(item, bins):\n    scores = bins - item\n    return scores",
            BuiltinScorer::TwiceItem => {
                "import numpy as np\ndef {fn}(item, bins):\n    scores = -np.abs(bins - 2 * item)\n    return scores"
            }
            BuiltinScorer::Eoc => concat!(
                "import numpy as np\n",
                "def {fn}(item, bins):\n",
                "    scores = np.log(item) * (bins ** 2) / (item * np.sqrt(bins - item)) + (bins / item) ** 3\n",
                "    scores[bins == bins.max()] = -np.inf\n",
                "    return scores"
            ),
            BuiltinScorer::FunSearch => concat!(
                "def {fn}(item, bins):\n",
                "  max_bin_cap = max(bins)\n",
                "  score = (bins - max_bin_cap)**2 / item + bins**2 / (item**2)\n",
                "  score += bins**2 / item**3\n",
                "  score[bins > item] = -score[bins > item]\n",
                "  score[1:] -= score[:-1]\n",
                "  return score"
            ),
            BuiltinScorer::Eoh => concat!(
                "import numpy as np\n",
                "def {fn}(item, bins):\n",
                "  diff = bins-item  # remaining capacity\n",
                "  exp = np.exp(diff)  # exponent term\n",
                "  sqrt = np.sqrt(diff)  # square root term\n",
                "  ulti = 1-diff/bins  # utilization term\n",
                "  comb = ulti * sqrt  # combination of utilization and square root\n",
                "  adjust = np.where(diff > (item * 3), comb + 0.8, comb + 0.3)\n",
                "  # hybrid adjustment term to penalize large bins\n",
                "  hybrid_exp = bins / ((exp + 0.7) *exp)\n",
                "  # hybrid score based on exponent term\n",
                "  scores = hybrid_exp + adjust\n",
                "  # sum of hybrid score and adjustment\n",
                "  return scores"
            ),
        };
        body.replace("{fn}", function_name)
    }

    /// Scores every rest capacity in `rests` for placing `item`.
    pub fn score(self, item: u32, rests: &[u32]) -> Vec<f64> {
        let it = i64::from(item);
        let itf = f64::from(item);
        match self {
            BuiltinScorer::FirstFit => (0..rests.len()).map(|i| 0.0 - i as f64).collect(),
            BuiltinScorer::BestFit => rests.iter().map(|&b| (it - i64::from(b)) as f64).collect(),
            BuiltinScorer::WorstFit => rests.iter().map(|&b| (i64::from(b) - it) as f64).collect(),
            BuiltinScorer::TwiceItem => {
                rests.iter().map(|&b| 0.0 - (i64::from(b) - 2 * it).abs() as f64).collect()
            }
            BuiltinScorer::Eoc => {
                let max = rests.iter().copied().max().unwrap_or(0);
                let log_item = itf.ln();
                rests
                    .iter()
                    .map(|&b| {
                        if b == max {
                            return f64::NEG_INFINITY;
                        }
                        let bf = f64::from(b);
                        let sq = (i64::from(b) * i64::from(b)) as f64;
                        let root = ((i64::from(b) - it) as f64).sqrt();
                        log_item * sq / (itf * root) + (bf / itf).powf(3.0)
                    })
                    .collect()
            }
            BuiltinScorer::FunSearch => {
                let max = i64::from(rests.iter().copied().max().unwrap_or(0));
                let raw: Vec<f64> = rests
                    .iter()
                    .map(|&b| {
                        let b = i64::from(b);
                        let mut s = ((b - max) * (b - max)) as f64 / itf
                            + (b * b) as f64 / ((it * it) as f64);
                        s += (b * b) as f64 / ((it * it * it) as f64);
                        if b > it {
                            -s
                        } else {
                            s
                        }
                    })
                    .collect();
                let mut out = raw.clone();
                for i in 1..raw.len() {
                    out[i] = raw[i] - raw[i - 1];
                }
                out
            }
            BuiltinScorer::Eoh => rests
                .iter()
                .map(|&b| {
                    let diff = i64::from(b) - it;
                    let df = diff as f64;
                    let bf = f64::from(b);
                    let exp = df.exp();
                    let sqrt = df.sqrt();
                    let ulti = 1.0 - df / bf;
                    let comb = ulti * sqrt;
                    let adjust = if diff > it * 3 { comb + 0.8 } else { comb + 0.3 };
                    let hybrid_exp = bf / ((exp + 0.7) * exp);
                    hybrid_exp + adjust
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn best_fit_prefers_tightest() {
        assert_eq!(BuiltinScorer::BestFit.score(4, &[10, 7]), vec![-6.0, -3.0]);
    }

    #[test]
    fn first_fit_is_negated_index() {
        let s = BuiltinScorer::FirstFit.score(3, &[50, 20, 90]);
        assert_eq!(s, vec![0.0, -1.0, -2.0]);
        assert!(s[0].is_sign_positive());
    }

    #[test]
    fn eoh_small_case() {
        // diff = [1, 5]: 6/((e+0.7)e) + (5/6)·1 + 0.3 and 10/((e^5+0.7)e^5) + 0.5·√5 + 0.3
        let s = BuiltinScorer::Eoh.score(5, &[6, 10]);
        assert!((s[0] - 1.7792).abs() < 1e-3, "{s:?}");
        assert!((s[1] - 1.4185).abs() < 1e-3, "{s:?}");
        assert!(s[0] > s[1]);
    }

    #[test]
    fn eoc_marks_largest_bin_and_exact_fit() {
        let s = BuiltinScorer::Eoc.score(5, &[5, 20, 100]);
        assert_eq!(s[0], f64::INFINITY);
        assert!(s[1].is_finite());
        assert_eq!(s[2], f64::NEG_INFINITY);
    }

    #[test]
    fn funsearch_differences_neighbours() {
        let item = 10i64;
        let rests = [10u32, 40, 100];
        let raw: Vec<f64> = rests
            .iter()
            .map(|&b| {
                let b = i64::from(b);
                let s = ((b - 100) * (b - 100)) as f64 / 10.0
                    + (b * b) as f64 / 100.0
                    + (b * b) as f64 / 1000.0;
                if b > item {
                    -s
                } else {
                    s
                }
            })
            .collect();
        let s = BuiltinScorer::FunSearch.score(10, &rests);
        assert_eq!(s[0], raw[0]);
        assert_eq!(s[1], raw[1] - raw[0]);
        assert_eq!(s[2], raw[2] - raw[1]);
    }

    #[test]
    fn sources_define_requested_name() {
        for s in BuiltinScorer::ALL {
            assert!(s.source("score").contains("def score(item, bins):"), "{}", s.name());
            assert_eq!(BuiltinScorer::from_name(s.name()), Some(s));
        }
    }
}
