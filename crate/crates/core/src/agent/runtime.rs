//! Prompt, score, retry, execute.

use std::sync::Arc;

use serde::Serialize;

use crate::data::Dataset;
use crate::eval::{Plan, PlanError, Rubric, ScoreReport};
use crate::logic::{solve, KnowledgeBase, SolveBudget, Term};
use crate::tools::{install_tools, InstallError, Relation, ToolContext, ToolRegistry, Value};

use super::history::SessionHistory;
use super::prompt::{build_prompt, PromptAssets, PromptContext};
use super::provider::{prompt_hash, CompletionProvider, GenParams, ProviderError};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Policy {
    /// Plans scoring below this are not executed.
    pub threshold: f64,
    pub max_retries: usize,
    pub params: GenParams,
    #[serde(skip)]
    pub budget: SolveBudget,
}

impl Default for Policy {
    fn default() -> Policy {
        Policy {
            threshold: 0.8,
            max_retries: 3,
            params: GenParams::default(),
            budget: SolveBudget {
                max_depth: 100_000,
                max_steps: 50_000_000,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Prompt { attempt: usize, hash: String, bytes: usize },
    Response { attempt: usize, text: String },
    Rejected { attempt: usize, reason: String },
    Scored { attempt: usize, report: ScoreReport },
    Executed { steps: u64, answer_var: Option<String> },
    ExecutionFailed { message: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct TaskOutcome {
    pub answer: String,
    pub report: ScoreReport,
    pub attempts: usize,
    pub trace: Vec<TraceEvent>,
}

#[derive(Debug, thiserror::Error)]
pub enum TaskError {
    #[error("provider failed: {source}")]
    Provider { source: ProviderError, trace: Vec<TraceEvent> },
    #[error("no plan reached the threshold after {attempts} attempts{}", last.as_ref().map(|r| format!(" (last score {})", r.score)).unwrap_or_default())]
    NoAcceptablePlan {
        attempts: usize,
        last: Option<ScoreReport>,
        trace: Vec<TraceEvent>,
    },
    #[error("plan execution failed: {message}")]
    Execution { message: String, trace: Vec<TraceEvent> },
}

impl TaskError {
    pub fn trace(&self) -> &[TraceEvent] {
        match self {
            TaskError::Provider { trace, .. } | TaskError::NoAcceptablePlan { trace, .. } | TaskError::Execution { trace, .. } => trace,
        }
    }
}

/// Shared, read-only parts of the agent: the database with tools
/// installed, the registry, and the prompt material.
#[derive(Clone)]
pub struct Agent {
    pub kb: Arc<KnowledgeBase>,
    pub registry: Arc<ToolRegistry>,
    pub rubric: Rubric,
    pub assets: PromptAssets,
    pub policy: Policy,
}

impl Agent {
    pub fn new(kb: KnowledgeBase, registry: ToolRegistry) -> Agent {
        Agent {
            kb: Arc::new(kb),
            registry: Arc::new(registry),
            rubric: Rubric::default(),
            assets: PromptAssets::default(),
            policy: Policy::default(),
        }
    }

    /// A knowledge base holding the dataset's facts and every tool of
    /// `registry` bound to `ctx`.
    pub fn knowledge_base(ds: &Dataset, registry: &ToolRegistry, ctx: ToolContext) -> Result<KnowledgeBase, InstallError> {
        let mut kb = KnowledgeBase::new();
        ds.assert_facts(&mut kb)?;
        install_tools(&mut kb, registry, Arc::new(ctx))?;
        Ok(kb)
    }

    pub fn from_dataset(ds: &Dataset) -> Result<Agent, InstallError> {
        let registry = ToolRegistry::builtin();
        let kb = Agent::knowledge_base(ds, &registry, ToolContext::from_dataset(ds))?;
        Ok(Agent::new(kb, registry))
    }

    pub fn session(&self) -> Session<'_> {
        Session {
            agent: self,
            history: SessionHistory::default(),
        }
    }

    pub fn prompt(&self, query: &str, history: &SessionHistory) -> String {
        let ctx = PromptContext::new(query, history, &self.kb, &self.registry, &self.assets, &self.rubric);
        build_prompt(&ctx, &self.assets.template)
    }

    /// Runs an accepted plan and formats the answer variable.
    pub fn execute(&self, plan: &Plan) -> Result<(String, u64), String> {
        let kb = plan.program.extend(&self.kb).map_err(|e| e.to_string())?;
        let query = plan.program.query();
        let mut sols = solve(&kb, query, self.policy.budget);
        let first = sols.next();
        let steps = sols.steps();
        match first {
            None => Err("the plan has no solution".into()),
            Some(Err(e)) => Err(e.to_string()),
            Some(Ok(ans)) => {
                let text = match plan.program.answer.as_deref().and_then(|n| ans.get(n)) {
                    Some(t) => format_answer(t),
                    None => "true".to_string(),
                };
                Ok((text, steps))
            }
        }
    }
}

/// A single cell prints as its bare value, any other relation as an
/// aligned table, and other terms in plain text.
pub fn format_answer(t: &Term) -> String {
    if let Ok(rel) = Relation::from_term(t) {
        if rel.header().len() == 1 && rel.len() == 1 {
            return rel.rows()[0][0].to_string();
        }
        return rel.to_string();
    }
    match Value::from_term(t) {
        Some(v) => v.to_string(),
        None => t.to_string(),
    }
}

/// One user's conversation: the agent plus a short-term history.
pub struct Session<'a> {
    agent: &'a Agent,
    pub history: SessionHistory,
}

impl Session<'_> {
    pub fn run_task(&mut self, query: &str, provider: &dyn CompletionProvider) -> Result<TaskOutcome, TaskError> {
        let agent = self.agent;
        let mut trace = Vec::new();
        let mut feedback = String::new();
        let mut last_report = None;
        let attempts = 1 + agent.policy.max_retries;
        for attempt in 1..=attempts {
            let q = if feedback.is_empty() {
                query.to_string()
            } else {
                format!("{query}\n\n{feedback}")
            };
            let prompt = agent.prompt(&q, &self.history);
            trace.push(TraceEvent::Prompt {
                attempt,
                hash: prompt_hash(&prompt),
                bytes: prompt.len(),
            });
            let text = match provider.complete(&prompt, &agent.policy.params) {
                Ok(t) => t,
                Err(source) => return Err(TaskError::Provider { source, trace }),
            };
            trace.push(TraceEvent::Response {
                attempt,
                text: text.clone(),
            });
            let scored = Plan::parse(&text, &agent.kb, &agent.registry)
                .and_then(|plan| plan.evaluate(&agent.kb, &agent.registry, &agent.rubric).map(|r| (plan, r)));
            let (plan, report) = match scored {
                Ok(x) => x,
                Err(e) => {
                    trace.push(TraceEvent::Rejected {
                        attempt,
                        reason: e.to_string(),
                    });
                    feedback = retry_note_for_error(&e);
                    continue;
                }
            };
            trace.push(TraceEvent::Scored {
                attempt,
                report: report.clone(),
            });
            if report.score < agent.policy.threshold {
                feedback = retry_note(&report);
                last_report = Some(report);
                continue;
            }
            return match agent.execute(&plan) {
                Ok((answer, steps)) => {
                    trace.push(TraceEvent::Executed {
                        steps,
                        answer_var: plan.program.answer.clone(),
                    });
                    self.history.append(query, &answer);
                    Ok(TaskOutcome {
                        answer,
                        report,
                        attempts: attempt,
                        trace,
                    })
                }
                Err(message) => {
                    trace.push(TraceEvent::ExecutionFailed { message: message.clone() });
                    Err(TaskError::Execution { message, trace })
                }
            };
        }
        Err(TaskError::NoAcceptablePlan {
            attempts,
            last: last_report,
            trace,
        })
    }
}

fn retry_note(r: &ScoreReport) -> String {
    let mut s = format!("Your previous plan scored {} under the evaluation rules:", r.score);
    for v in &r.violations {
        s.push_str(&format!("\n- {v}"));
    }
    s.push_str("\nWrite a new plan that avoids these problems.");
    s
}

fn retry_note_for_error(e: &PlanError) -> String {
    format!("Your previous reply could not be used: {e}\nReply again with a valid JSON object and program.")
}
