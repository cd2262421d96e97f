//! Prompt construction from per-problem template files and reply parsing.

mod parse;
mod templates;

pub use parse::{parse_response, Expect, ParseError, ParsedReply};
pub use templates::{PromptTemplateSet, StrategyTemplate, TemplateError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::{Heuristic, RepresentationMode, Strategy};

/// Name, inputs and outputs of the function candidates must define.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub function_name: String,
    pub inputs: Vec<(String, String)>,
    pub outputs: Vec<(String, String)>,
    pub language_name: String,
}

impl FunctionSpec {
    pub fn new(function_name: &str, inputs: &[(&str, &str)], outputs: &[(&str, &str)]) -> Self {
        let own = |v: &[(&str, &str)]| v.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        Self {
            function_name: function_name.to_string(),
            inputs: own(inputs),
            outputs: own(outputs),
            language_name: "Python".to_string(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let ident = regex::Regex::new(r"^[A-Za-z_][A-Za-z0-9_]*$").expect("static regex");
        if !ident.is_match(&self.function_name) {
            return Err(format!("invalid function name {:?}", self.function_name));
        }
        if self.inputs.is_empty() || self.outputs.is_empty() {
            return Err("inputs and outputs must be non-empty".into());
        }
        for (name, _) in self.inputs.iter().chain(&self.outputs) {
            if !ident.is_match(name) {
                return Err(format!("invalid identifier {name:?}"));
            }
        }
        Ok(())
    }

    pub fn input_names(&self) -> Vec<&str> {
        self.inputs.iter().map(|(n, _)| n.as_str()).collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("{strategy} takes {expected} parents, got {got}")]
    ArityMismatch { strategy: Strategy, expected: usize, got: usize },
}

fn count_word(n: usize) -> String {
    const WORDS: [&str; 11] =
        ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"];
    WORDS.get(n).map_or_else(|| n.to_string(), |w| w.to_string())
}

/// `two inputs: 'item' and 'bins'`
fn name_list(names: &[(String, String)], noun: &str) -> String {
    let quoted: Vec<String> = names.iter().map(|(n, _)| format!("'{n}'")).collect();
    let joined = match quoted.len() {
        1 => quoted[0].clone(),
        2 => format!("{} and {}", quoted[0], quoted[1]),
        k => format!("{}, and {}", quoted[..k - 1].join(", "), quoted[k - 1]),
    };
    let plural = if names.len() == 1 { "" } else { "s" };
    format!("{} {noun}{plural}: {joined}", count_word(names.len()))
}

fn ordinal(step: usize, total: usize) -> &'static str {
    if total == 2 && step == 1 {
        return "Next";
    }
    match step {
        0 => "Firstly",
        1 => "Secondly",
        2 => "Thirdly",
        3 => "Fourthly",
        _ => "Then",
    }
}

/// The code-request sentence with the function signature filled in.
pub fn render_output_spec(templates: &PromptTemplateSet, spec: &FunctionSpec) -> String {
    templates
        .output_spec
        .replace("{language}", &spec.language_name)
        .replace("{function_name}", &spec.function_name)
        .replace("{inputs}", &name_list(&spec.inputs, "input"))
        .replace("{outputs}", &name_list(&spec.outputs, "output"))
        .replace("{io_description}", templates.io_description.trim())
        .trim()
        .to_string()
}

fn parent_block(templates: &PromptTemplateSet, parents: &[Heuristic], mode: RepresentationMode) -> String {
    let mut out = if parents.len() == 1 {
        templates.parent_header_single.trim().to_string()
    } else {
        templates.parent_header.trim().replace("{count}", &count_word(parents.len()))
    };
    for (k, h) in parents.iter().enumerate() {
        out.push('\n');
        let mut entry = format!("No.{}", k + 1);
        if mode.shows_parent_thought() {
            entry.push_str(&format!(" Heuristic description: {}", h.thought.trim()));
        }
        if mode.shows_parent_code() {
            if mode.shows_parent_thought() {
                entry.push('\n');
            } else {
                entry.push(' ');
            }
            entry.push_str(&format!("Code:\n{}", h.code.trim()));
        }
        out.push_str(&entry);
    }
    out
}

fn instruction(templates: &PromptTemplateSet, spec: &FunctionSpec, strategy: Strategy, mode: RepresentationMode) -> String {
    let t = templates.strategy(strategy);
    let output_spec = render_output_spec(templates, spec);
    let steps: Vec<&str> = t
        .steps
        .iter()
        .filter(|s| match s.kind {
            templates::StepKind::Describe => mode != RepresentationMode::C2C,
            templates::StepKind::Code => !mode.two_call(),
            templates::StepKind::Analysis => true,
        })
        .map(|s| s.text.as_str())
        .collect();
    let mut out = t.preamble.trim().to_string();
    for (i, text) in steps.iter().enumerate() {
        out.push('\n');
        out.push_str(&format!("{}, {}", ordinal(i, steps.len()), text.replace("{output_spec}", &output_spec)));
    }
    out
}

/// Assembles task description, parent block, strategy instruction (ending in
/// the output spec) and note, separated by blank lines.
pub fn build_prompt(
    templates: &PromptTemplateSet,
    spec: &FunctionSpec,
    strategy: Strategy,
    parents: &[Heuristic],
    mode: RepresentationMode,
    p: usize,
) -> Result<String, PromptError> {
    let expected = strategy.arity(p);
    let arity_ok = match strategy {
        Strategy::E1 | Strategy::E2 => (1..=expected).contains(&parents.len()),
        _ => parents.len() == expected,
    };
    if !arity_ok {
        return Err(PromptError::ArityMismatch { strategy, expected, got: parents.len() });
    }
    let mut sections = vec![templates.task_description.trim().to_string()];
    if !parents.is_empty() {
        sections.push(parent_block(templates, parents, mode));
    }
    sections.push(instruction(templates, spec, strategy, mode));
    sections.push(templates.note.trim().to_string());
    Ok(sections.join("\n\n") + "\n")
}

/// Follow-up prompt that asks for code implementing `thought`.
pub fn build_materialize_prompt(templates: &PromptTemplateSet, spec: &FunctionSpec, thought: &str) -> String {
    let body = templates
        .materialize
        .trim()
        .replace("{thought}", thought.trim())
        .replace("{output_spec}", &render_output_spec(templates, spec));
    [templates.task_description.trim(), body.as_str(), templates.note.trim()].join("\n\n") + "\n"
}

/// What a reply to a prompt built under `mode` must contain.
pub fn expectation(mode: RepresentationMode) -> Expect {
    match mode {
        RepresentationMode::Full => Expect::ThoughtAndCode,
        RepresentationMode::C2C => Expect::CodeOnly,
        RepresentationMode::T2T2C | RepresentationMode::TC2T2C => Expect::ThoughtOnly,
    }
}
