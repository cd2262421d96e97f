use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Strategy {
    Init,
    E1,
    E2,
    M1,
    M2,
    M3,
}

impl Strategy {
    pub const EVOLUTION: [Strategy; 5] = [Strategy::E1, Strategy::E2, Strategy::M1, Strategy::M2, Strategy::M3];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Init => "INIT",
            Strategy::E1 => "E1",
            Strategy::E2 => "E2",
            Strategy::M1 => "M1",
            Strategy::M2 => "M2",
            Strategy::M3 => "M3",
        }
    }

    /// Number of parents the strategy's prompt takes, given `p` for E1/E2.
    pub fn arity(self, p: usize) -> usize {
        match self {
            Strategy::Init => 0,
            Strategy::E1 | Strategy::E2 => p,
            Strategy::M1 | Strategy::M2 | Strategy::M3 => 1,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "INIT" => Ok(Strategy::Init),
            "E1" => Ok(Strategy::E1),
            "E2" => Ok(Strategy::E2),
            "M1" => Ok(Strategy::M1),
            "M2" => Ok(Strategy::M2),
            "M3" => Ok(Strategy::M3),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

/// Which parts of a heuristic go into prompts and come back in replies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RepresentationMode {
    /// Thought and code in, thought and code out.
    #[default]
    #[serde(rename = "FULL")]
    Full,
    /// Code only.
    C2C,
    /// Parent thoughts in, a thought out, then a second call for code.
    T2T2C,
    /// Parent thoughts and code in, a thought out, then a second call for code.
    TC2T2C,
}

impl RepresentationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RepresentationMode::Full => "FULL",
            RepresentationMode::C2C => "C2C",
            RepresentationMode::T2T2C => "T2T2C",
            RepresentationMode::TC2T2C => "TC2T2C",
        }
    }

    pub fn shows_parent_thought(self) -> bool {
        self != RepresentationMode::C2C
    }

    pub fn shows_parent_code(self) -> bool {
        self != RepresentationMode::T2T2C
    }

    /// Whether the first reply carries only a description and code comes from
    /// a follow-up prompt.
    pub fn two_call(self) -> bool {
        matches!(self, RepresentationMode::T2T2C | RepresentationMode::TC2T2C)
    }

    pub fn queries_per_attempt(self) -> u64 {
        if self.two_call() {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for RepresentationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RepresentationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().replace('&', "").as_str() {
            "FULL" => Ok(RepresentationMode::Full),
            "C2C" => Ok(RepresentationMode::C2C),
            "T2T2C" => Ok(RepresentationMode::T2T2C),
            "TC2T2C" => Ok(RepresentationMode::TC2T2C),
            other => Err(format!("unknown representation mode {other:?}")),
        }
    }
}

/// One individual: a thought, its code, and how it scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heuristic {
    pub id: String,
    pub thought: String,
    pub code: String,
    /// Lower is better.
    pub fitness: Option<f64>,
    /// Problem-native score, e.g. mean lb/n for bin packing.
    pub raw_score: Option<f64>,
    pub generation: u32,
    pub strategy: Strategy,
    pub parent_ids: Vec<String>,
    pub feasible: bool,
    pub error: Option<String>,
}

impl Heuristic {
    pub fn infeasible(
        id: String,
        generation: u32,
        strategy: Strategy,
        parent_ids: Vec<String>,
        error: String,
    ) -> Self {
        Self {
            id,
            thought: String::new(),
            code: String::new(),
            fitness: None,
            raw_score: None,
            generation,
            strategy,
            parent_ids,
            feasible: false,
            error: Some(error),
        }
    }

    /// Checks the feasibility invariants.
    pub fn is_consistent(&self) -> bool {
        if self.feasible {
            self.fitness.is_some_and(f64::is_finite) && !self.code.is_empty()
        } else {
            self.error.is_some()
        }
    }
}

/// Elitist set of feasible heuristics kept sorted by ascending fitness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub members: Vec<Heuristic>,
    pub capacity: usize,
}

impl Population {
    pub fn empty(capacity: usize) -> Self {
        assert!(capacity >= 1, "population capacity must be at least 1");
        Self { members: Vec::new(), capacity }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn best(&self) -> Option<&Heuristic> {
        self.members.first()
    }

    pub fn best_fitness(&self) -> Option<f64> {
        self.best().and_then(|h| h.fitness)
    }

    pub fn mean_fitness(&self) -> Option<f64> {
        if self.members.is_empty() {
            return None;
        }
        let sum: f64 = self.members.iter().filter_map(|h| h.fitness).sum();
        Some(sum / self.members.len() as f64)
    }

    /// Checks the population invariants.
    pub fn is_valid(&self) -> bool {
        let mut ids = std::collections::HashSet::new();
        self.members.len() <= self.capacity
            && self.members.iter().all(|h| h.feasible && h.is_consistent() && ids.insert(h.id.as_str()))
            && self.members.windows(2).all(|w| w[0].fitness <= w[1].fitness)
    }
}
