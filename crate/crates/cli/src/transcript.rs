//! Solutions in the usual top-level style: `Y = a ;` between answers, a
//! period after the last one, `false.` when there are none.

use logiplan::logic::{Answer, KnowledgeBase, Query, SolveBudget, SolveError, Term};

pub const BUDGET: SolveBudget = SolveBudget {
    max_depth: 1_000_000,
    max_steps: 100_000_000,
};

pub struct Collected {
    /// Each answer with the text its goals printed before it.
    pub answers: Vec<(String, Answer)>,
    pub trailing_output: String,
    pub error: Option<SolveError>,
}

pub fn collect(kb: &KnowledgeBase, query: Query, limit: Option<usize>) -> Collected {
    let mut sols = logiplan::logic::solve(kb, query, BUDGET);
    let mut answers = Vec::new();
    let mut error = None;
    while limit.is_none_or(|n| answers.len() < n) {
        match sols.next() {
            Some(Ok(a)) => answers.push((sols.take_output(), a)),
            Some(Err(e)) => {
                error = Some(e);
                break;
            }
            None => break,
        }
    }
    Collected {
        answers,
        trailing_output: sols.take_output(),
        error,
    }
}

pub fn render(c: &Collected) -> String {
    let mut out = String::new();
    let n = c.answers.len();
    for (i, (printed, a)) in c.answers.iter().enumerate() {
        out.push_str(printed);
        out.push_str(&a.render());
        out.push_str(if i + 1 < n { " ;\n" } else { ".\n" });
    }
    out.push_str(&c.trailing_output);
    if n == 0 && c.error.is_none() {
        out.push_str("false.\n");
    }
    out
}

pub fn to_json(c: &Collected) -> serde_json::Value {
    let answers: Vec<serde_json::Value> = c
        .answers
        .iter()
        .map(|(_, a)| {
            let mut m = serde_json::Map::new();
            for (name, _) in &a.names {
                if let Some(t) = a.get(name) {
                    if !matches!(t, Term::Var(_)) {
                        m.insert(name.clone(), t.to_string().into());
                    }
                }
            }
            serde_json::Value::Object(m)
        })
        .collect();
    serde_json::json!({
        "answers": answers,
        "error": c.error.as_ref().map(|e| e.to_string()),
    })
}
