use regex::Regex;
use thiserror::Error;

use super::FunctionSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    ThoughtAndCode,
    CodeOnly,
    ThoughtOnly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedReply {
    pub thought: String,
    pub code: Option<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("reply contains no fenced code block")]
    MissingCode,
    #[error("no fenced code block defines '{0}'")]
    MissingFunctionName(String),
    #[error("reply contains no heuristic description")]
    MissingThought,
}

struct Fence {
    start: usize,
    end: usize,
    body: String,
}

fn fences(reply: &str) -> Vec<Fence> {
    let re = Regex::new(r"(?s)```[^\n]*\n(.*?)```").expect("static regex");
    re.captures_iter(reply)
        .map(|c| {
            let all = c.get(0).expect("whole match");
            Fence { start: all.start(), end: all.end(), body: c[1].to_string() }
        })
        .collect()
}

/// Content of the first balanced `{...}` outside code fences.
fn braced(reply: &str, fences: &[Fence]) -> Option<String> {
    let inside = |i: usize| fences.iter().any(|f| i >= f.start && i < f.end);
    let mut open: Option<usize> = None;
    let mut depth = 0usize;
    for (i, ch) in reply.char_indices() {
        if inside(i) {
            open = None;
            depth = 0;
            continue;
        }
        match ch {
            '{' => {
                if depth == 0 {
                    open = Some(i);
                }
                depth += 1;
            }
            '}' if depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    let body = reply[open.take()? + 1..i].trim();
                    if !body.is_empty() {
                        return Some(body.to_string());
                    }
                }
            }
            _ => {}
        }
    }
    None
}

fn first_line_before(reply: &str, limit: usize) -> Option<String> {
    reply[..limit]
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with("```"))
        .map(str::to_string)
}

/// Splits a reply into description and code.
///
/// The description is the first brace-delimited segment outside code fences,
/// falling back to the first non-empty line ahead of the code. The code is
/// the first fenced block that defines `spec.function_name`.
pub fn parse_response(reply: &str, spec: &FunctionSpec, expect: Expect) -> Result<ParsedReply, ParseError> {
    let blocks = fences(reply);
    let def = Regex::new(&format!(r"\b(def|fn|function)\s+{}\s*\(", regex::escape(&spec.function_name)))
        .expect("escaped name");
    let chosen = blocks.iter().find(|f| def.is_match(&f.body));
    let code = chosen.map(|f| f.body.trim().to_string());

    if expect != Expect::ThoughtOnly && code.is_none() {
        return Err(if blocks.is_empty() {
            ParseError::MissingCode
        } else {
            ParseError::MissingFunctionName(spec.function_name.clone())
        });
    }
    if expect == Expect::CodeOnly {
        return Ok(ParsedReply { thought: String::new(), code });
    }
    let limit = chosen.or(blocks.first()).map_or(reply.len(), |f| f.start);
    let thought = braced(reply, &blocks).or_else(|| first_line_before(reply, limit)).ok_or(ParseError::MissingThought)?;
    Ok(ParsedReply { thought, code })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec() -> FunctionSpec {
        FunctionSpec::new("score", &[("item", ""), ("bins", "")], &[("scores", "")])
    }

    #[test]
    fn brace_and_fence() {
        let r = parse_response("{Pack tightly.}\n```\ndef score(item, bins): ...\n```", &spec(), Expect::ThoughtAndCode)
            .unwrap();
        assert_eq!(r.thought, "Pack tightly.");
        assert_eq!(r.code.as_deref(), Some("def score(item, bins): ..."));
    }

    #[test]
    fn prose_only_is_missing_code() {
        assert_eq!(
            parse_response("Just use best fit.", &spec(), Expect::ThoughtAndCode),
            Err(ParseError::MissingCode)
        );
    }

    #[test]
    fn wrong_name() {
        assert_eq!(
            parse_response("{x}\n```python\ndef rate(item, bins):\n    return bins\n```", &spec(), Expect::ThoughtAndCode),
            Err(ParseError::MissingFunctionName("score".into()))
        );
        // `def scorer(` must not satisfy `score(`.
        assert!(parse_response("{x}\n```\ndef scorer(a):\n  pass\n```", &spec(), Expect::ThoughtAndCode).is_err());
    }

    #[test]
    fn fallback_line_and_later_block() {
        let reply = "Sure.\nPrefer bins that end nearly full.\n```text\nnot code\n```\n```python\nimport numpy as np\ndef score(item, bins):\n    return -bins\n```";
        let r = parse_response(reply, &spec(), Expect::ThoughtAndCode).unwrap();
        assert_eq!(r.thought, "Sure.");
        assert!(r.code.unwrap().starts_with("import numpy"));
    }

    #[test]
    fn braces_inside_code_ignored() {
        let reply = "Use a dict.\n```python\ndef score(item, bins):\n    d = {1: 2}\n    return bins\n```\n{Dictionary lookup.}";
        let r = parse_response(reply, &spec(), Expect::ThoughtAndCode).unwrap();
        assert_eq!(r.thought, "Dictionary lookup.");
    }

    #[test]
    fn modes() {
        let code_only = parse_response("```\ndef score(i, b):\n  return b\n```", &spec(), Expect::CodeOnly).unwrap();
        assert_eq!(code_only.thought, "");
        assert_eq!(
            parse_response("```\ndef score(i, b):\n  return b\n```", &spec(), Expect::ThoughtAndCode),
            Err(ParseError::MissingThought)
        );
        let t = parse_response("{Only an idea.}", &spec(), Expect::ThoughtOnly).unwrap();
        assert_eq!(t, ParsedReply { thought: "Only an idea.".into(), code: None });
        assert_eq!(parse_response("   \n", &spec(), Expect::ThoughtOnly), Err(ParseError::MissingThought));
    }

    proptest! {
        #[test]
        fn roundtrip(
            thought in "[A-Za-z][A-Za-z0-9 ,.;()-]{0,60}[A-Za-z.]",
            expr in "[a-z0-9 +*/-]{1,30}",
            lead in "[A-Za-z ]{0,20}",
            tail in "[A-Za-z .]{0,20}",
            tag in prop_oneof![Just(""), Just("python"), Just("py")],
        ) {
            let code = format!("import numpy as np\n\ndef score(item, bins):\n    return {expr}");
            let reply = format!("{lead}\n{{{thought}}}\n```{tag}\n{code}\n```\n{tail}");
            let r = parse_response(&reply, &spec(), Expect::ThoughtAndCode).unwrap();
            prop_assert_eq!(r.thought, thought.trim().to_string());
            prop_assert_eq!(r.code, Some(code.trim().to_string()));
        }
    }
}
