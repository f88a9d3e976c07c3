//! The planning loop: prompt, score, retry, execute.

pub mod bench;
pub mod history;
pub mod prompt;
pub mod provider;
pub mod runtime;

pub use bench::{exact_match, load_tasks, normalize_answer, run_bench, BenchError, BenchReport, BenchTask, TaskResult};
pub use history::{SessionHistory, Turn, DEFAULT_CAPACITY};
pub use prompt::{build_prompt, PromptAssets, PromptContext, SECTION_TAGS};
#[cfg(feature = "http")]
pub use provider::HttpProvider;
pub use provider::{prompt_hash, CompletionProvider, GenParams, ProviderError, RejectingProvider, ReplayProvider, ScriptedProvider};
pub use runtime::{format_answer, Agent, Policy, Session, TaskError, TaskOutcome, TraceEvent};
