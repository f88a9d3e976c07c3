//! The fixed prompt context behind the checked-in golden prompt.

use logiplan::agent::{PromptAssets, PromptContext, SessionHistory};
use logiplan::data::{generate, FixtureSpec};
use logiplan::eval::Rubric;
use logiplan::logic::KnowledgeBase;
use logiplan::tools::ToolRegistry;

pub const GOLDEN_PATH: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/prompt.txt");

pub fn context() -> PromptContext {
    let mut kb = KnowledgeBase::new();
    generate(FixtureSpec::default()).assert_facts(&mut kb).unwrap();
    let mut history = SessionHistory::new(10);
    history.append("How many merchants are there?", "5");
    history.append("Which acquirer does Rafa_AI use?", "tellsons_bank");
    PromptContext::new(
        "How many payments were issued in GB and made from a French IP address?",
        &history,
        &kb,
        &ToolRegistry::builtin(),
        &PromptAssets::default(),
        &Rubric::default(),
    )
}

pub fn render() -> String {
    logiplan::agent::build_prompt(&context(), logiplan::agent::prompt::DEFAULT_TEMPLATE)
}
