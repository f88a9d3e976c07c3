//! Splits an action list into planner-written clauses and the goals to run.

use std::collections::HashMap;

use crate::logic::kb::flatten_conjunction;
use crate::logic::parser::ReadTerm;
use crate::logic::{Clause, KbError, KnowledgeBase, PredKey, Provenance, Query, Term, VarId};
use crate::tools::ToolRegistry;

/// A goal of the plan with its position among the goals (1-based) and the
/// action line it starts on.
#[derive(Clone, Debug)]
pub struct PlanGoal {
    pub term: Term,
    pub index: usize,
    pub line: usize,
}

#[derive(Clone, Debug)]
pub struct PlanClause {
    pub clause: Clause,
    pub line: usize,
}

#[derive(Clone, Debug)]
pub struct ActionProgram {
    /// Clauses the planner defines, all with `llm` provenance.
    pub clauses: Vec<PlanClause>,
    pub goals: Vec<PlanGoal>,
    /// Goal variables by name, shared across action lines.
    pub var_names: Vec<(String, VarId)>,
    pub var_count: usize,
    /// The variable whose value is the answer, if any goal names one.
    pub answer: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ProgramError {
    #[error("line {line}: {source}")]
    Clause { line: usize, source: KbError },
}

const ASSERTS: [&str; 3] = ["assert", "asserta", "assertz"];
const CONNECTIVES: [(&str, usize); 4] = [(",", 2), (";", 2), ("->", 2), ("\\+", 1)];

/// Whether a bare action term reads as something to run rather than a
/// definition: anything already callable in `kb` or named in `registry`.
fn is_goal(t: &Term, kb: &KnowledgeBase, registry: &ToolRegistry) -> bool {
    let Some(key) = t.key() else { return false };
    CONNECTIVES.iter().any(|(n, a)| *n == &*key.name && *a == key.arity) || kb.is_known(&key) || registry.get(&key).is_some()
}

fn unwrap_prefix<'a>(t: &'a Term, op: &str) -> Option<&'a Term> {
    match t {
        Term::Compound(c) if &*c.functor == op && c.args.len() == 1 => Some(&c.args[0]),
        _ => None,
    }
}

impl ActionProgram {
    /// Classifies each unit. `?- G` and `:- G` are goals, as is any bare
    /// term naming a known predicate or tool; `assert(C)` and every other
    /// term define a clause.
    pub fn from_units(units: &[ReadTerm], kb: &KnowledgeBase, registry: &ToolRegistry) -> Result<ActionProgram, ProgramError> {
        let mut names: HashMap<String, VarId> = HashMap::new();
        let mut var_names = Vec::new();
        let mut next: VarId = 0;
        let mut clauses = Vec::new();
        let mut goals = Vec::new();
        let mut last_named: Option<String> = None;
        for unit in units {
            let t = &unit.term;
            let goal = unwrap_prefix(t, "?-")
                .or_else(|| unwrap_prefix(t, ":-"))
                .or_else(|| (!is_clause_form(t) && is_goal(t, kb, registry)).then_some(t));
            let Some(goal) = goal else {
                let body = t
                    .key()
                    .filter(|k| k.arity == 1 && ASSERTS.contains(&&*k.name))
                    .map_or(t, |_| &t.args()[0]);
                let clause = Clause::from_term(body, Provenance::Llm).map_err(|source| ProgramError::Clause { line: unit.line, source })?;
                clauses.push(PlanClause { clause, line: unit.line });
                continue;
            };
            // Renumber into the shared query space.
            let local: HashMap<VarId, &str> = unit.var_names.iter().map(|(n, v)| (*v, n.as_str())).collect();
            let mut fresh: HashMap<VarId, VarId> = HashMap::new();
            let term = goal.map_vars(&mut |v| {
                let id = match local.get(&v) {
                    Some(name) => *names.entry(name.to_string()).or_insert_with(|| {
                        var_names.push((name.to_string(), next));
                        next += 1;
                        next - 1
                    }),
                    None => *fresh.entry(v).or_insert_with(|| {
                        next += 1;
                        next - 1
                    }),
                };
                Term::Var(id)
            });
            if let Some((name, _)) = rightmost_named(goal, &unit.var_names) {
                last_named = Some(name);
            }
            goals.push(PlanGoal {
                term,
                index: goals.len() + 1,
                line: unit.line,
            });
        }
        Ok(ActionProgram {
            clauses,
            goals,
            var_names,
            var_count: next,
            answer: last_named,
        })
    }

    /// Picks the answer variable: `result` if it names a goal variable,
    /// otherwise the rightmost named variable of the last goal that has one.
    pub fn with_result_field(mut self, result: &str) -> ActionProgram {
        let r = result.trim();
        if self.var_names.iter().any(|(n, _)| n == r) {
            self.answer = Some(r.to_string());
        }
        self
    }

    /// All goals as one conjunction.
    pub fn query(&self) -> Query {
        let goal = self
            .goals
            .iter()
            .rev()
            .map(|g| g.term.clone())
            .reduce(|acc, g| Term::compound(",", vec![g, acc]))
            .unwrap_or_else(|| Term::atom("true"));
        Query {
            goal,
            var_names: self.var_names.clone(),
            var_count: self.var_count,
        }
    }

    /// Distinct predicates the planner defines, in order of first clause.
    pub fn defined(&self) -> Vec<PredKey> {
        let mut keys: Vec<PredKey> = Vec::new();
        for c in &self.clauses {
            let k = c.clause.key();
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        keys
    }

    /// `kb` extended with the planner's clauses.
    pub fn extend(&self, kb: &KnowledgeBase) -> Result<KnowledgeBase, ProgramError> {
        let mut kb = kb.clone();
        for c in &self.clauses {
            kb.assert_clause(c.clause.clone())
                .map_err(|source| ProgramError::Clause { line: c.line, source })?;
        }
        Ok(kb)
    }
}

fn is_clause_form(t: &Term) -> bool {
    matches!(t, Term::Compound(c) if &*c.functor == ":-" && c.args.len() == 2)
}

fn rightmost_named(t: &Term, names: &[(String, VarId)]) -> Option<(String, VarId)> {
    let mut goals = Vec::new();
    flatten_conjunction(t, &mut goals);
    let vars: Vec<VarId> = goals.iter().flat_map(|g| g.variables()).collect();
    vars.iter().rev().find_map(|v| names.iter().find(|(_, id)| id == v).cloned())
}
