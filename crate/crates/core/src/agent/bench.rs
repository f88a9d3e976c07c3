//! Question/guidance/answer task files and exact-match scoring.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::exec::Execution;

use super::provider::{CompletionProvider, ScriptedProvider};
use super::runtime::Agent;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchTask {
    pub question: String,
    #[serde(default)]
    pub guidance: String,
    pub answer: String,
    /// A planner response to use instead of the provider, either as text or
    /// as the JSON object itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<serde_json::Value>,
}

impl BenchTask {
    /// The query handed to the agent.
    pub fn query(&self) -> String {
        if self.guidance.trim().is_empty() {
            self.question.clone()
        } else {
            format!("{}\n{}", self.question.trim_end(), self.guidance.trim())
        }
    }

    pub fn plan_text(&self) -> Option<String> {
        self.plan.as_ref().map(|p| match p {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },
}

pub fn load_tasks(path: &Path) -> Result<Vec<BenchTask>, BenchError> {
    let err = |message: String| BenchError::Read {
        path: path.display().to_string(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| err(e.to_string()))
}

/// Lowercases and collapses whitespace runs to single spaces.
pub fn normalize_answer(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

pub fn exact_match(got: &str, expected: &str) -> bool {
    normalize_answer(got) == normalize_answer(expected)
}

#[derive(Clone, Debug, Serialize)]
pub struct TaskResult {
    pub question: String,
    pub expected: String,
    pub got: Option<String>,
    pub correct: bool,
    pub error: Option<String>,
    pub attempts: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub results: Vec<TaskResult>,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

/// Runs every task in a fresh session. Tasks carrying a plan are answered
/// from it; the rest go to `provider`.
pub fn run_bench(agent: &Agent, tasks: &[BenchTask], provider: &dyn CompletionProvider, exec: Execution) -> BenchReport {
    let results = exec.map(tasks, |task| {
        let started = Instant::now();
        let scripted = task.plan_text().map(|p| ScriptedProvider::new([p]));
        let p: &dyn CompletionProvider = match &scripted {
            Some(s) => s,
            None => provider,
        };
        let mut session = agent.session();
        let (got, error, attempts) = match session.run_task(&task.query(), p) {
            Ok(out) => (Some(out.answer), None, out.attempts),
            Err(e) => {
                let attempts = e
                    .trace()
                    .iter()
                    .filter(|t| matches!(t, super::runtime::TraceEvent::Prompt { .. }))
                    .count();
                (None, Some(e.to_string()), attempts)
            }
        };
        TaskResult {
            question: task.question.clone(),
            expected: task.answer.clone(),
            correct: got.as_deref().is_some_and(|g| exact_match(g, &task.answer)),
            got,
            error,
            attempts,
            seconds: started.elapsed().as_secs_f64(),
        }
    });
    let correct = results.iter().filter(|r| r.correct).count();
    let total = results.len();
    BenchReport {
        results,
        correct,
        total,
        accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        assert!(exact_match("  SwiftCharge\n", "swiftcharge"));
        assert!(exact_match("E:346.49", "e:346.49"));
        assert!(exact_match("a   b", "A b"));
        assert!(!exact_match("ab", "a b"));
        assert!(!exact_match("346.5", "346.49"));
    }

    #[test]
    fn task_file_shape() {
        let tasks: Vec<BenchTask> = serde_json::from_str(r#"[{"question": "q", "guidance": "g", "answer": "a"}]"#).unwrap();
        assert_eq!(tasks[0].query(), "q\ng");
        assert!(tasks[0].plan.is_none());
    }
}
