use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::evolution::Strategy;
use crate::problems::ProblemKind;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("template {0} is empty")]
    Empty(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Analysis,
    Describe,
    Code,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub kind: StepKind,
    pub text: String,
}

/// A strategy instruction: one preamble sentence followed by numbered steps.
///
/// File format: unprefixed lines form the preamble; lines starting with
/// `analysis:`, `describe:` or `code:` are steps. Modes drop describe or code
/// steps, so the kinds must be explicit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyTemplate {
    pub preamble: String,
    pub steps: Vec<Step>,
}

impl StrategyTemplate {
    pub fn parse(text: &str) -> Self {
        let mut preamble = Vec::new();
        let mut steps = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let step = [("analysis:", StepKind::Analysis), ("describe:", StepKind::Describe), ("code:", StepKind::Code)]
                .into_iter()
                .find_map(|(prefix, kind)| line.strip_prefix(prefix).map(|rest| Step { kind, text: rest.trim().to_string() }));
            match step {
                Some(s) => steps.push(s),
                None => preamble.push(line),
            }
        }
        Self { preamble: preamble.join(" "), steps }
    }
}

/// Every text fragment a prompt is assembled from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplateSet {
    pub task_description: String,
    pub io_description: String,
    pub note: String,
    pub output_spec: String,
    pub parent_header: String,
    pub parent_header_single: String,
    pub materialize: String,
    pub strategies: BTreeMap<Strategy, StrategyTemplate>,
}

const STRATEGY_FILES: [(Strategy, &str); 6] = [
    (Strategy::Init, "init.txt"),
    (Strategy::E1, "e1.txt"),
    (Strategy::E2, "e2.txt"),
    (Strategy::M1, "m1.txt"),
    (Strategy::M2, "m2.txt"),
    (Strategy::M3, "m3.txt"),
];

fn builtin_strategy(s: Strategy) -> &'static str {
    match s {
        Strategy::Init => include_str!("../../templates/common/init.txt"),
        Strategy::E1 => include_str!("../../templates/common/e1.txt"),
        Strategy::E2 => include_str!("../../templates/common/e2.txt"),
        Strategy::M1 => include_str!("../../templates/common/m1.txt"),
        Strategy::M2 => include_str!("../../templates/common/m2.txt"),
        Strategy::M3 => include_str!("../../templates/common/m3.txt"),
    }
}

impl PromptTemplateSet {
    pub fn builtin(kind: ProblemKind) -> Self {
        let (task, io, note) = match kind {
            ProblemKind::BinPacking => (
                include_str!("../../templates/binpacking/task_description.txt"),
                include_str!("../../templates/binpacking/io_description.txt"),
                include_str!("../../templates/binpacking/note.txt"),
            ),
            ProblemKind::Tsp => (
                include_str!("../../templates/tsp/task_description.txt"),
                include_str!("../../templates/tsp/io_description.txt"),
                include_str!("../../templates/tsp/note.txt"),
            ),
            ProblemKind::Fssp => (
                include_str!("../../templates/fssp/task_description.txt"),
                include_str!("../../templates/fssp/io_description.txt"),
                include_str!("../../templates/fssp/note.txt"),
            ),
        };
        Self {
            task_description: task.to_string(),
            io_description: io.to_string(),
            note: note.to_string(),
            output_spec: include_str!("../../templates/common/output_spec.txt").to_string(),
            parent_header: include_str!("../../templates/common/parents.txt").to_string(),
            parent_header_single: include_str!("../../templates/common/parent.txt").to_string(),
            materialize: include_str!("../../templates/common/materialize.txt").to_string(),
            strategies: STRATEGY_FILES.iter().map(|&(s, _)| (s, StrategyTemplate::parse(builtin_strategy(s)))).collect(),
        }
    }

    /// Builtin set with any file present in `dir` replacing its counterpart.
    /// File names match the shipped `templates/<problem>` and
    /// `templates/common` layout, flattened into one directory.
    pub fn load_dir(kind: ProblemKind, dir: &Path) -> Result<Self, TemplateError> {
        let mut set = Self::builtin(kind);
        let read = |name: &str| -> Result<Option<String>, TemplateError> {
            let path = dir.join(name);
            if !path.exists() {
                return Ok(None);
            }
            let text = std::fs::read_to_string(&path)
                .map_err(|source| TemplateError::Io { path: path.display().to_string(), source })?;
            if text.trim().is_empty() {
                return Err(TemplateError::Empty(name.to_string()));
            }
            Ok(Some(text))
        };
        let fields: [(&str, &mut String); 7] = [
            ("task_description.txt", &mut set.task_description),
            ("io_description.txt", &mut set.io_description),
            ("note.txt", &mut set.note),
            ("output_spec.txt", &mut set.output_spec),
            ("parents.txt", &mut set.parent_header),
            ("parent.txt", &mut set.parent_header_single),
            ("materialize.txt", &mut set.materialize),
        ];
        for (name, slot) in fields {
            if let Some(text) = read(name)? {
                *slot = text;
            }
        }
        for (s, name) in STRATEGY_FILES {
            if let Some(text) = read(name)? {
                set.strategies.insert(s, StrategyTemplate::parse(&text));
            }
        }
        Ok(set)
    }

    pub fn strategy(&self, s: Strategy) -> &StrategyTemplate {
        &self.strategies[&s]
    }
}
