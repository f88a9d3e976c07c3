//! The JSON object a planner answers with.

use serde::Serialize;
use serde_json::{Map, Value as J};

use crate::logic::ops::OpTable;
use crate::logic::parser::{read_terms, ReadTerm, SyntaxError};

pub const FIELDS: [&str; 7] = ["explanation", "gaps", "findings", "plan", "action", "result", "evaluation"];

#[derive(Clone, Debug, Serialize)]
pub struct PlanEnvelope {
    pub explanation: String,
    pub gaps: Vec<String>,
    pub findings: Vec<String>,
    pub plan: Vec<String>,
    pub action: Vec<String>,
    pub result: String,
    /// The score the planner claims for its own program.
    pub evaluation: f64,
    /// `action` read as program text, one entry per clause or goal.
    #[serde(skip)]
    pub units: Vec<ReadTerm>,
}

#[derive(Debug, thiserror::Error)]
pub enum EnvelopeError {
    #[error("response is not JSON: {0}")]
    NotJson(String),
    #[error("response must be a JSON object")]
    NotObject,
    #[error("missing field \"{0}\"")]
    MissingField(&'static str),
    #[error("field \"{field}\" must be {expected}")]
    FieldType { field: &'static str, expected: &'static str },
    #[error("action does not parse: {0}")]
    Action(#[from] SyntaxError),
}

/// The JSON object inside `text`: the body of the first code fence if
/// there is one, otherwise the span from the first `{` to the last `}`.
pub fn json_body(text: &str) -> &str {
    if let Some(start) = text.find("```") {
        let rest = &text[start + 3..];
        let rest = rest.find('\n').map_or(rest, |nl| {
            let tag = rest[..nl].trim();
            if tag.chars().all(|c| c.is_ascii_alphanumeric()) {
                &rest[nl + 1..]
            } else {
                rest
            }
        });
        if let Some(end) = rest.find("```") {
            return rest[..end].trim();
        }
    }
    match (text.find('{'), text.rfind('}')) {
        (Some(a), Some(b)) if a < b => &text[a..=b],
        _ => text.trim(),
    }
}

/// Drops commas directly before a closing bracket or brace, outside strings.
fn strip_trailing_commas(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_str = false;
    let mut escaped = false;
    let chars: Vec<char> = s.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if in_str {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_str = false;
            }
        } else if c == '"' {
            in_str = true;
        } else if c == ',' {
            let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
            if matches!(next, Some('}') | Some(']')) {
                continue;
            }
        }
        out.push(c);
    }
    out
}

fn field<'a>(obj: &'a Map<String, J>, name: &'static str) -> Result<&'a J, EnvelopeError> {
    obj.get(name).ok_or(EnvelopeError::MissingField(name))
}

fn text_field(obj: &Map<String, J>, name: &'static str) -> Result<String, EnvelopeError> {
    match field(obj, name)? {
        J::String(s) => Ok(s.clone()),
        J::Null => Ok(String::new()),
        J::Number(n) => Ok(n.to_string()),
        J::Bool(b) => Ok(b.to_string()),
        _ => Err(EnvelopeError::FieldType {
            field: name,
            expected: "a string",
        }),
    }
}

/// A list of strings; a lone string counts as a one-element list.
fn list_field(obj: &Map<String, J>, name: &'static str) -> Result<Vec<String>, EnvelopeError> {
    let bad = || EnvelopeError::FieldType {
        field: name,
        expected: "a list of strings",
    };
    match field(obj, name)? {
        J::String(s) => Ok(vec![s.clone()]),
        J::Null => Ok(Vec::new()),
        J::Array(items) => items
            .iter()
            .map(|i| match i {
                J::String(s) => Ok(s.clone()),
                _ => Err(bad()),
            })
            .collect(),
        _ => Err(bad()),
    }
}

fn number_field(obj: &Map<String, J>, name: &'static str) -> Result<f64, EnvelopeError> {
    let bad = || EnvelopeError::FieldType {
        field: name,
        expected: "a number",
    };
    match field(obj, name)? {
        J::Number(n) => n.as_f64().ok_or_else(bad),
        J::String(s) => s.trim().parse().map_err(|_| bad()),
        _ => Err(bad()),
    }
}

/// The action lines as one program text. A line that does not end a term
/// and does not visibly continue onto the next one gets a closing period.
pub fn action_text(lines: &[String]) -> String {
    const CONTINUES: [&str; 8] = [",", ":-", "(", "[", "|", ";", "->", "{"];
    let mut out = Vec::with_capacity(lines.len());
    for line in lines {
        let t = line.trim_end();
        if t.is_empty() || t.ends_with('.') || CONTINUES.iter().any(|c| t.ends_with(c)) || t.trim_start().starts_with('%') {
            out.push(t.to_string());
        } else {
            out.push(format!("{t}."));
        }
    }
    out.join("\n")
}

pub fn parse_plan_envelope(text: &str) -> Result<PlanEnvelope, EnvelopeError> {
    let body = json_body(text);
    let json: J = match serde_json::from_str(body) {
        Ok(j) => j,
        Err(first) => serde_json::from_str(&strip_trailing_commas(body)).map_err(|_| EnvelopeError::NotJson(first.to_string()))?,
    };
    let J::Object(obj) = json else {
        return Err(EnvelopeError::NotObject);
    };
    // Report the first missing field in template order.
    if let Some(missing) = FIELDS.iter().find(|f| !obj.contains_key(**f)) {
        return Err(EnvelopeError::MissingField(missing));
    }
    let action = list_field(&obj, "action")?;
    let units = read_terms(&action_text(&action), &OpTable::default())?;
    Ok(PlanEnvelope {
        explanation: text_field(&obj, "explanation")?,
        gaps: list_field(&obj, "gaps")?,
        findings: list_field(&obj, "findings")?,
        plan: list_field(&obj, "plan")?,
        action,
        result: text_field(&obj, "result")?,
        evaluation: number_field(&obj, "evaluation")?,
        units,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn envelope(action: &str) -> String {
        format!(
            r#"{{"explanation": "e", "gaps": [], "findings": ["f"], "plan": ["p"], "action": {action}, "result": "C", "evaluation": 1.0}}"#
        )
    }

    #[test]
    fn two_units() {
        let env = parse_plan_envelope(&envelope(r#"["query_data(payments, [], [], R)", "count(R, C)."]"#)).unwrap();
        assert_eq!(env.units.len(), 2);
        assert_eq!(env.units[1].line, 2);
        assert_eq!(env.result, "C");
    }

    #[test]
    fn fenced_with_trailing_comma() {
        let text = format!("Here it is:\n```json\n{}\n```\n", envelope(r#"["true",]"#).replace("1.0}", "1.0,}"));
        let env = parse_plan_envelope(&text).unwrap();
        assert_eq!(env.action, vec!["true"]);
    }

    #[test]
    fn missing_field_is_named() {
        let text = envelope("[]").replace(r#""gaps": [], "#, "");
        match parse_plan_envelope(&text) {
            Err(EnvelopeError::MissingField(f)) => assert_eq!(f, "gaps"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn action_syntax_error_has_line() {
        match parse_plan_envelope(&envelope(r#"["true.", "foo("]"#)) {
            Err(EnvelopeError::Action(e)) => assert_eq!(e.line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lenient_types() {
        let text = envelope(r#""count(R, C)""#).replace("1.0}", "\"0.8\"}");
        let env = parse_plan_envelope(&text).unwrap();
        assert_eq!(env.evaluation, 0.8);
        assert_eq!(env.action.len(), 1);
    }
}
