//! Planner prompt rendering.

use std::fmt::Write as _;
use std::path::Path;

use crate::eval::Rubric;
use crate::logic::{KnowledgeBase, Provenance};
use crate::tools::ToolRegistry;

use super::history::SessionHistory;

/// Section tags in the order they appear in every prompt.
pub const SECTION_TAGS: [&str; 7] = [
    "query",
    "history",
    "assert",
    "foreign-functions",
    "database-schema-description",
    "examples",
    "json-format",
];

pub const DEFAULT_TEMPLATE: &str = include_str!("../../assets/prompt/template.txt");
pub const DEFAULT_SCHEMA: &str = include_str!("../../assets/prompt/schema.txt");
pub const DEFAULT_EXAMPLES: [&str; 3] = [
    include_str!("../../assets/prompt/examples/01_count.txt"),
    include_str!("../../assets/prompt/examples/02_top.txt"),
    include_str!("../../assets/prompt/examples/03_compare.txt"),
];

/// Template text with `{{name}}` slots, plus the schema description and
/// worked examples that fill two of them.
#[derive(Clone, Debug)]
pub struct PromptAssets {
    pub template: String,
    pub schema_doc: String,
    pub examples: Vec<String>,
}

impl Default for PromptAssets {
    fn default() -> PromptAssets {
        PromptAssets {
            template: DEFAULT_TEMPLATE.to_string(),
            schema_doc: DEFAULT_SCHEMA.to_string(),
            examples: DEFAULT_EXAMPLES.iter().map(|e| e.to_string()).collect(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AssetError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("template is missing the {{{{{0}}}}} slot")]
    MissingSlot(&'static str),
}

const SLOTS: [&str; 7] = ["query", "history", "assert", "foreign_functions", "schema", "examples", "rubric"];

impl PromptAssets {
    /// Reads `template.txt`, `schema.txt` and every file of `examples/` in
    /// name order; missing files fall back to the bundled text.
    pub fn from_dir(dir: &Path) -> Result<PromptAssets, AssetError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|source| AssetError::Io {
                path: p.display().to_string(),
                source,
            })
        };
        let mut assets = PromptAssets::default();
        let template = dir.join("template.txt");
        if template.exists() {
            assets.template = read(&template)?;
        }
        let schema = dir.join("schema.txt");
        if schema.exists() {
            assets.schema_doc = read(&schema)?;
        }
        let examples = dir.join("examples");
        if examples.is_dir() {
            let mut paths: Vec<_> = std::fs::read_dir(&examples)
                .map_err(|source| AssetError::Io {
                    path: examples.display().to_string(),
                    source,
                })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            paths.sort();
            assets.examples = paths.iter().map(|p| read(p)).collect::<Result<_, _>>()?;
        }
        assets.check()?;
        Ok(assets)
    }

    pub fn check(&self) -> Result<(), AssetError> {
        for slot in SLOTS {
            if !self.template.contains(&format!("{{{{{slot}}}}}")) {
                return Err(AssetError::MissingSlot(slot));
            }
        }
        Ok(())
    }
}

/// Everything that varies between prompts.
#[derive(Clone, Debug)]
pub struct PromptContext {
    pub query: String,
    pub history: SessionHistory,
    pub assert_listing: String,
    pub foreign_listing: String,
    pub schema_doc: String,
    pub examples: Vec<String>,
    pub rubric: Rubric,
}

impl PromptContext {
    pub fn new(
        query: &str,
        history: &SessionHistory,
        kb: &KnowledgeBase,
        registry: &ToolRegistry,
        assets: &PromptAssets,
        rubric: &Rubric,
    ) -> PromptContext {
        PromptContext {
            query: query.to_string(),
            history: history.clone(),
            assert_listing: assert_listing(kb),
            foreign_listing: registry.listing(),
            schema_doc: assets.schema_doc.clone(),
            examples: assets.examples.clone(),
            rubric: rubric.clone(),
        }
    }
}

/// Database predicates a plan may call, in source syntax. Tool definitions
/// are left out; they appear with the foreign functions.
pub fn assert_listing(kb: &KnowledgeBase) -> String {
    let mut out = String::new();
    for key in kb.user_predicates() {
        let clauses: Vec<_> = kb.clauses(key).iter().filter(|c| c.provenance() != Provenance::Builtin).collect();
        if clauses.is_empty() {
            continue;
        }
        for c in clauses {
            out.push_str(&c.render(kb.ops()));
            out.push('\n');
        }
    }
    out
}

fn fmt_penalty(x: f64) -> String {
    let s = format!("{x:.2}");
    let s = s.trim_end_matches('0');
    if s.ends_with('.') {
        format!("{s}0")
    } else {
        s.to_string()
    }
}

/// The scoring rules as prompt lines, following the rubric in force.
pub fn rubric_lines(r: &Rubric) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "  - Start from {} once the program is written.", fmt_penalty(r.start));
    if r.uninstantiated_is_fatal {
        let _ = writeln!(
            out,
            "  - If any `-` argument of a foreign function can still be unbound when it is called, the evaluation is 0.0."
        );
    } else {
        let _ = writeln!(
            out,
            "  - Subtract {} for each foreign function called with a `-` argument that can still be unbound.",
            fmt_penalty(r.uninstantiated)
        );
    }
    let _ = writeln!(
        out,
        "  - Subtract {} for each predicate you define yourself in the action list.",
        fmt_penalty(r.llm_assert)
    );
    let _ = write!(
        out,
        "  - Subtract {} for each call of sort, msort, findall, bagof, setof or aggregate_all that receives a whole [Header | Data] relation.",
        fmt_penalty(r.relation_misuse)
    );
    out
}

fn numbered(examples: &[String]) -> String {
    examples
        .iter()
        .enumerate()
        .map(|(i, e)| format!("Example {}:\n{}", i + 1, e.trim_end()))
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Renders the prompt. Slot values have trailing newlines trimmed so that
/// every section closes on its own line.
pub fn build_prompt(ctx: &PromptContext, template: &str) -> String {
    let slots: [(&str, String); 7] = [
        ("query", ctx.query.trim_end().to_string()),
        ("history", ctx.history.render()),
        ("assert", ctx.assert_listing.trim_end().to_string()),
        ("foreign_functions", ctx.foreign_listing.trim_end().to_string()),
        ("schema", ctx.schema_doc.trim_end().to_string()),
        ("examples", numbered(&ctx.examples)),
        ("rubric", rubric_lines(&ctx.rubric)),
    ];
    // One pass over the template so that slot values are never rescanned.
    let mut out = String::with_capacity(template.len() + slots.iter().map(|(_, v)| v.len()).sum::<usize>());
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        match after.find("}}").map(|end| (&after[..end], end)) {
            Some((name, end)) if slots.iter().any(|(n, _)| *n == name) => {
                let value = &slots.iter().find(|(n, _)| *n == name).expect("slot exists").1;
                out.push_str(value);
                rest = &after[end + 2..];
            }
            _ => {
                out.push_str("{{");
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Whether each tag opens and closes exactly once, in the standard order.
pub fn sections_in_order(prompt: &str) -> bool {
    let mut last = 0;
    for tag in SECTION_TAGS {
        let open = format!("<{tag}>");
        let close = format!("</{tag}>");
        if prompt.matches(&open).count() != 1 || prompt.matches(&close).count() != 1 {
            return false;
        }
        let (Some(o), Some(c)) = (prompt.find(&open), prompt.find(&close)) else {
            return false;
        };
        if o < last || c < o {
            return false;
        }
        last = c;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(history: &[(&str, &str)]) -> PromptContext {
        let mut h = SessionHistory::new(10);
        for (q, a) in history {
            h.append(q, a);
        }
        let mut kb = KnowledgeBase::new();
        kb.consult("acquirer_country(gringotts, gb).", Provenance::Dataset).unwrap();
        PromptContext::new(
            "How many payments?",
            &h,
            &kb,
            &ToolRegistry::builtin(),
            &PromptAssets::default(),
            &Rubric::default(),
        )
    }

    #[test]
    fn sections_and_order() {
        let p = build_prompt(&ctx(&[]), DEFAULT_TEMPLATE);
        assert!(sections_in_order(&p));
        assert!(p.find("<query>").unwrap() < p.find("<history>").unwrap());
        assert!(p.find("<history>").unwrap() < p.find("<assert>").unwrap());
        assert!(p.contains("<history>\n\n</history>"));
        assert!(p.contains("acquirer_country(gringotts, gb)."));
        assert!(!p.contains("{{"));
    }

    #[test]
    fn history_turns_rendered() {
        let p = build_prompt(&ctx(&[("q1", "a1"), ("q2", "a2")]), DEFAULT_TEMPLATE);
        let h = &p[p.find("<history>").unwrap()..p.find("</history>").unwrap()];
        assert!(h.find("q1").unwrap() < h.find("q2").unwrap());
        assert!(h.contains("a2"));
    }

    #[test]
    fn stable_and_complete() {
        let c = ctx(&[("q", "a")]);
        assert_eq!(build_prompt(&c, DEFAULT_TEMPLATE), build_prompt(&c, DEFAULT_TEMPLATE));
        let p = build_prompt(&c, DEFAULT_TEMPLATE);
        let ff = &p[p.find("<foreign-functions>").unwrap()..p.find("</foreign-functions>").unwrap()];
        for t in ToolRegistry::builtin().tools() {
            assert!(ff.contains(&format!("{}(", t.name)), "{} missing", t.name);
        }
    }

    #[test]
    fn rubric_values_follow_config() {
        let r = Rubric {
            llm_assert: 0.25,
            ..Rubric::default()
        };
        let lines = rubric_lines(&r);
        assert!(lines.contains("Subtract 0.25 for each predicate"));
        assert!(rubric_lines(&Rubric::default()).contains("Subtract 0.4 for each call"));
    }

    #[test]
    fn slot_values_are_not_rescanned() {
        let mut c = ctx(&[]);
        c.query = "literal {{history}} text".into();
        let p = build_prompt(&c, DEFAULT_TEMPLATE);
        assert!(p.contains("literal {{history}} text"));
    }

    #[test]
    fn default_assets_pass_check() {
        PromptAssets::default().check().unwrap();
    }
}
