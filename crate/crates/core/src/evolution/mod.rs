//! Individuals, rank-based selection, elitist population management and the
//! generational loop.

mod population;
mod run;
mod selection;
mod types;

pub use population::manage_population;
pub use run::{
    Candidate, Engine, GenerationStats, NoObserver, Observer, RequestSettings, RunConfig, RunError, RunResult,
};
pub use selection::{rank_weights, select_parents, EmptyPopulation};
pub use types::{Heuristic, Population, RepresentationMode, Strategy};
