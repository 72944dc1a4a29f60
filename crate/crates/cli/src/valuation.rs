//! Valuation files.
//!
//! ```text
//! agents: 2
//! agent Alice: 0 1 1
//! agent Bob: 0 2 1/2 0 1
//! ```
//!
//! Each agent line alternates breakpoints and densities, starting and
//! ending with a breakpoint. `#` starts a comment.

use envyfree::measure::{fmt_rat, parse_rat, MeasureError, Rat, ValueMeasure};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValuationError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: agent {name}: {source}")]
    Measure { line: usize, name: String, source: MeasureError },
    #[error("missing `agents: <n>` header")]
    MissingHeader,
    #[error("header announces {expected} agents, file lists {found}")]
    AgentCount { expected: usize, found: usize },
    #[error("agent name {0} appears twice")]
    DuplicateName(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Valuation {
    pub names: Vec<String>,
    pub measures: Vec<ValueMeasure>,
}

impl Valuation {
    pub fn parse(text: &str, normalize: bool) -> Result<Self, ValuationError> {
        let mut expected = None;
        let mut names = Vec::new();
        let mut measures = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let syntax = |msg: String| ValuationError::Syntax { line, msg };
            if let Some(rest) = content.strip_prefix("agents:") {
                if expected.is_some() {
                    return Err(syntax("second `agents:` header".into()));
                }
                let n: usize = rest.trim().parse().map_err(|_| syntax(format!("bad agent count `{}`", rest.trim())))?;
                expected = Some(n);
                continue;
            }
            let Some(rest) = content.strip_prefix("agent ") else {
                return Err(syntax(format!("expected `agents:` or `agent <name>:`, found `{content}`")));
            };
            if expected.is_none() {
                return Err(ValuationError::MissingHeader);
            }
            let (name, numbers) = rest.split_once(':').ok_or_else(|| syntax("missing `:` after the agent name".into()))?;
            let name = name.trim().to_string();
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(syntax(format!("bad agent name `{name}`")));
            }
            if names.contains(&name) {
                return Err(ValuationError::DuplicateName(name));
            }
            let values: Vec<Rat> = numbers
                .split_whitespace()
                .map(|tok| parse_rat(tok).ok_or_else(|| syntax(format!("malformed rational `{tok}`"))))
                .collect::<Result<_, _>>()?;
            if values.len() < 3 || values.len().is_multiple_of(2) {
                return Err(syntax(format!(
                    "expected b0 d1 b1 ... bk (an odd count of at least 3), found {} numbers",
                    values.len()
                )));
            }
            let breakpoints: Vec<Rat> = values.iter().step_by(2).cloned().collect();
            let densities: Vec<Rat> = values.iter().skip(1).step_by(2).cloned().collect();
            let built = if normalize {
                ValueMeasure::normalized(breakpoints, densities)
            } else {
                ValueMeasure::new(breakpoints, densities)
            };
            let m = built.map_err(|source| ValuationError::Measure { line, name: name.clone(), source })?;
            names.push(name);
            measures.push(m);
        }
        let expected = expected.ok_or(ValuationError::MissingHeader)?;
        if expected != names.len() {
            return Err(ValuationError::AgentCount { expected, found: names.len() });
        }
        Ok(Valuation { names, measures })
    }

    pub fn agent(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Serializes back to the file format.
    pub fn render(&self) -> String {
        let mut out = format!("agents: {}\n", self.names.len());
        for (name, m) in self.names.iter().zip(&self.measures) {
            let mut parts = vec![fmt_rat(&m.breakpoints()[0])];
            for (d, b) in m.densities().iter().zip(&m.breakpoints()[1..]) {
                parts.push(fmt_rat(d));
                parts.push(fmt_rat(b));
            }
            out.push_str(&format!("agent {name}: {}\n", parts.join(" ")));
        }
        out
    }
}
