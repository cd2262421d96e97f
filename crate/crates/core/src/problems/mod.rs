pub mod binpacking;
pub mod fssp;
mod handle;
pub mod registry;
pub mod tsp;

pub use handle::{
    BinPackingSettings, EvalConfig, Evaluation, FsspSettings, InstanceSet, Problem, ProblemSettings, Timeouts,
    TspSettings,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::prompt::FunctionSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemKind {
    #[serde(rename = "binpacking")]
    BinPacking,
    #[serde(rename = "tsp")]
    Tsp,
    #[serde(rename = "fssp")]
    Fssp,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 3] = [ProblemKind::BinPacking, ProblemKind::Tsp, ProblemKind::Fssp];

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::BinPacking => "binpacking",
            ProblemKind::Tsp => "tsp",
            ProblemKind::Fssp => "fssp",
        }
    }

    pub fn function_spec(self) -> FunctionSpec {
        match self {
            ProblemKind::BinPacking => FunctionSpec::new(
                "score",
                &[("item", "size of the current item"), ("bins", "rest capacities of feasible bins")],
                &[("scores", "score of each bin")],
            ),
            ProblemKind::Tsp => FunctionSpec::new(
                "update_edge_distance",
                &[
                    ("edge_distance", "current guide distance matrix"),
                    ("local_opt_tour", "city order of the current local optimum"),
                    ("edge_n_used", "per-edge count of appearances in local optima"),
                ],
                &[("updated_edge_distance", "next guide distance matrix")],
            ),
            ProblemKind::Fssp => FunctionSpec::new(
                "get_matrix_and_jobs",
                &[
                    ("current_sequence", "current job order"),
                    ("time_matrix", "processing times, jobs by machines"),
                    ("m", "number of machines"),
                    ("n", "number of jobs"),
                ],
                &[("new_matrix", "perturbed time matrix"), ("perturb_jobs", "jobs to perturb")],
            ),
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "binpacking" | "bp" => Ok(ProblemKind::BinPacking),
            "tsp" => Ok(ProblemKind::Tsp),
            "fssp" | "pfsp" => Ok(ProblemKind::Fssp),
            other => Err(format!("unknown problem {other:?}")),
        }
    }
}
