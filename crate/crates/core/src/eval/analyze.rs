//! Left-to-right groundness analysis of a plan against the rubric.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::logic::{ArgMode, KnowledgeBase, PredKey, Provenance, Term, VarId};
use crate::tools::ToolRegistry;

use super::program::{ActionProgram, ProgramError};
use super::score::Rubric;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ViolationKind {
    UninstantiatedInput,
    LlmAssert,
    RelationMisuse,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Where a violation was found: a goal of the plan, or a goal inside a
/// clause reached from it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Location {
    /// Predicate and 1-based clause number.
    pub clause: Option<(PredKey, usize)>,
    /// 1-based goal number within the plan or the clause body.
    pub goal: Option<usize>,
    /// The predicate called by that goal.
    pub callee: Option<PredKey>,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some((key, n)) = &self.clause {
            parts.push(format!("{key} clause {n}"));
        }
        if let Some(g) = self.goal {
            parts.push(format!("goal {g}"));
        }
        if let Some(c) = &self.callee {
            parts.push(c.to_string());
        }
        f.write_str(&parts.join(" "))
    }
}

impl Serialize for Location {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub location: Location,
    pub penalty: f64,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}", self.kind, self.location)?;
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AnalyzeError {
    #[error("unknown predicate {key} at {location}")]
    UnknownPredicate { key: PredKey, location: Location },
    #[error(transparent)]
    Program(#[from] ProgramError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Inst {
    Free,
    Ground,
    /// Ground, and holds a whole `[Header|Data]` relation.
    Relation,
}

/// Abstract value of each variable at a program point; absent means free.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InstantiationState {
    vars: HashMap<VarId, Inst>,
}

impl InstantiationState {
    pub fn get(&self, v: VarId) -> Inst {
        self.vars.get(&v).copied().unwrap_or(Inst::Free)
    }

    pub fn is_ground(&self, t: &Term) -> bool {
        t.is_ground() || t.variables().iter().all(|v| self.get(*v) != Inst::Free)
    }

    fn holds_relation(&self, t: &Term) -> bool {
        !t.is_ground() && t.variables().iter().any(|v| self.get(*v) == Inst::Relation)
    }

    fn of(&self, t: &Term) -> Inst {
        match t {
            Term::Var(v) => self.get(*v),
            t if self.is_ground(t) => Inst::Ground,
            _ => Inst::Free,
        }
    }

    fn ground(&mut self, t: &Term) {
        for v in t.variables() {
            self.vars
                .entry(v)
                .and_modify(|i| {
                    if *i == Inst::Free {
                        *i = Inst::Ground
                    }
                })
                .or_insert(Inst::Ground);
        }
    }

    fn set_relation(&mut self, v: VarId) {
        if self.get(v) == Inst::Free {
            self.vars.insert(v, Inst::Relation);
        }
    }

    /// What holds after either of two branches.
    fn join(&self, other: &InstantiationState) -> InstantiationState {
        let vars = self
            .vars
            .iter()
            .filter_map(|(v, a)| {
                let joined = match (*a, other.get(*v)) {
                    (Inst::Free, _) | (_, Inst::Free) => return None,
                    (Inst::Relation, Inst::Relation) => Inst::Relation,
                    _ => Inst::Ground,
                };
                Some((*v, joined))
            })
            .collect();
        InstantiationState { vars }
    }
}

type Rule = (&'static [usize], &'static [usize]);

/// Instantiation behaviour of library predicates: when every argument in
/// the first set is ground on entry, those in the second are ground on
/// success. An empty rule list binds nothing. Predicates not listed ground
/// their last free argument once all others are ground.
const MODES: &[(&str, usize, &[Rule])] = &[
    ("length", 2, &[(&[0], &[1])]),
    ("functor", 3, &[(&[0], &[1, 2])]),
    ("copy_term", 2, &[(&[0], &[1])]),
    ("arg", 3, &[(&[1], &[0, 2])]),
    ("term_variables", 2, &[(&[0], &[1])]),
    ("atom_concat", 3, &[(&[0, 1], &[2]), (&[2], &[0, 1])]),
    ("string_concat", 3, &[(&[0, 1], &[2]), (&[2], &[0, 1])]),
    ("sub_atom", 5, &[(&[0], &[1, 2, 3, 4])]),
    ("sub_string", 5, &[(&[0], &[1, 2, 3, 4])]),
    ("nth0", 3, &[(&[1], &[0, 2])]),
    ("nth1", 3, &[(&[1], &[0, 2])]),
    ("member", 2, &[(&[1], &[0])]),
    ("memberchk", 2, &[(&[1], &[0])]),
    ("select", 3, &[(&[1], &[0, 2]), (&[0, 2], &[1])]),
    ("append", 3, &[(&[0, 1], &[2]), (&[2], &[0, 1])]),
    ("pairs_keys_values", 3, &[(&[0], &[1, 2]), (&[1, 2], &[0])]),
    ("pairs_keys", 2, &[(&[0], &[1])]),
    ("pairs_values", 2, &[(&[0], &[1])]),
    ("between", 3, &[(&[0, 1], &[2])]),
    ("=..", 2, &[(&[0], &[1]), (&[1], &[0])]),
    ("sum_list", 2, &[(&[0], &[1])]),
    ("sumlist", 2, &[(&[0], &[1])]),
    ("max_list", 2, &[(&[0], &[1])]),
    ("min_list", 2, &[(&[0], &[1])]),
    ("last", 2, &[(&[0], &[1])]),
    ("max_member", 2, &[(&[1], &[0])]),
    ("min_member", 2, &[(&[1], &[0])]),
    ("list_to_set", 2, &[(&[0], &[1])]),
    ("sort", 2, &[(&[0], &[1])]),
    ("msort", 2, &[(&[0], &[1])]),
    ("keysort", 2, &[(&[0], &[1])]),
    ("predsort", 3, &[(&[1], &[2])]),
    ("sort", 4, &[(&[2], &[3])]),
    ("include", 3, &[(&[1], &[2])]),
    ("exclude", 3, &[(&[1], &[2])]),
    ("delete", 3, &[(&[0, 1], &[2])]),
    ("subtract", 3, &[(&[0, 1], &[2])]),
    ("intersection", 3, &[(&[0, 1], &[2])]),
    ("union", 3, &[(&[0, 1], &[2])]),
    ("numlist", 3, &[(&[0, 1], &[2])]),
    ("foldl", 4, &[(&[1, 2], &[3])]),
    ("current_op", 3, &[(&[], &[0, 1, 2])]),
    ("current_predicate", 1, &[(&[], &[0])]),
    ("==", 2, &[]),
    ("\\==", 2, &[]),
    ("\\=", 2, &[]),
    ("@<", 2, &[]),
    ("@>", 2, &[]),
    ("@=<", 2, &[]),
    ("@>=", 2, &[]),
    ("<", 2, &[]),
    (">", 2, &[]),
    ("=<", 2, &[]),
    (">=", 2, &[]),
    ("=:=", 2, &[]),
    ("=\\=", 2, &[]),
    ("var", 1, &[]),
    ("nonvar", 1, &[]),
    ("atom", 1, &[]),
    ("number", 1, &[]),
    ("integer", 1, &[]),
    ("float", 1, &[]),
    ("string", 1, &[]),
    ("atomic", 1, &[]),
    ("compound", 1, &[]),
    ("callable", 1, &[]),
    ("is_list", 1, &[]),
    ("ground", 1, &[]),
    ("write", 1, &[]),
    ("print", 1, &[]),
    ("writeq", 1, &[]),
    ("write_canonical", 1, &[]),
    ("writeln", 1, &[]),
    ("nl", 0, &[]),
    ("tab", 1, &[]),
    ("format", 1, &[]),
    ("format", 2, &[]),
    ("format", 3, &[]),
    ("dynamic", 1, &[]),
];

/// Predicates that must not receive a whole relation, with the argument
/// holding the list.
const LIST_ARG: &[(&str, usize, usize)] = &[
    ("sort", 2, 0),
    ("msort", 2, 0),
    ("keysort", 2, 0),
    ("predsort", 3, 1),
    ("sort", 4, 2),
    ("list_to_set", 2, 0),
];

/// Collectors: (name, arity, template arg, goal arg, result arg).
const COLLECTORS: &[(&str, usize, usize, usize, usize)] = &[
    ("findall", 3, 0, 1, 2),
    ("findall", 4, 0, 1, 2),
    ("bagof", 3, 0, 1, 2),
    ("setof", 3, 0, 1, 2),
    ("aggregate_all", 3, 0, 1, 2),
];

const MAX_CALL_DEPTH: usize = 32;

struct Walker<'a> {
    kb: &'a KnowledgeBase,
    registry: &'a ToolRegistry,
    rubric: &'a Rubric,
    violations: Vec<Violation>,
    seen: HashSet<(ViolationKind, Location)>,
    calls: Vec<(PredKey, Vec<Inst>)>,
}

/// Where the walker is: which clause body (if any) and which goal of it.
#[derive(Clone)]
struct Site {
    clause: Option<(PredKey, usize)>,
    goal: usize,
}

impl Site {
    fn at(&self, callee: &PredKey) -> Location {
        Location {
            clause: self.clause.clone(),
            goal: Some(self.goal),
            callee: Some(callee.clone()),
        }
    }
}

fn strip_carets(t: &Term) -> &Term {
    let mut cur = t;
    while let Term::Compound(c) = cur {
        if &*c.functor == "^" && c.args.len() == 2 {
            cur = &c.args[1];
        } else {
            break;
        }
    }
    cur
}

/// `G` extended with extra arguments, as `call/N` does.
fn add_args(g: &Term, extra: &[Term]) -> Option<Term> {
    match g {
        Term::Atom(a) => Some(Term::compound_arc(a.clone(), extra.to_vec())),
        Term::Compound(c) => {
            let mut args = c.args.clone();
            args.extend_from_slice(extra);
            Some(Term::compound_arc(c.functor.clone(), args))
        }
        _ => None,
    }
}

impl Walker<'_> {
    fn report(&mut self, kind: ViolationKind, location: Location, detail: String) {
        if self.seen.insert((kind, location.clone())) {
            self.violations.push(Violation {
                kind,
                penalty: self.rubric.penalty(kind),
                location,
                detail,
            });
        }
    }

    fn tool_modes(&self, key: &PredKey) -> Option<Vec<ArgMode>> {
        self.registry
            .modes(key)
            .or_else(|| self.kb.foreign(key).map(|f| f.modes().to_vec()))
    }

    fn goal(&mut self, g: &Term, st: &mut InstantiationState, site: &Site) -> Result<(), AnalyzeError> {
        let key = match g.key() {
            Some(k) => k,
            // A variable goal is a meta-call we cannot see into.
            None => return Ok(()),
        };
        let args = g.args();
        match (&*key.name, key.arity) {
            (",", 2) => {
                self.goal(&args[0], st, site)?;
                self.goal(&args[1], st, site)
            }
            (";", 2) => {
                let mut left = st.clone();
                match args[0].key() {
                    Some(k) if &*k.name == "->" && k.arity == 2 => {
                        let ite = args[0].args();
                        self.goal(&ite[0], &mut left, site)?;
                        self.goal(&ite[1], &mut left, site)?;
                    }
                    _ => self.goal(&args[0], &mut left, site)?,
                }
                let mut right = st.clone();
                self.goal(&args[1], &mut right, site)?;
                *st = left.join(&right);
                Ok(())
            }
            ("->", 2) => {
                self.goal(&args[0], st, site)?;
                self.goal(&args[1], st, site)
            }
            ("\\+", 1) | ("not", 1) => self.goal(&args[0], &mut st.clone(), site),
            ("forall", 2) => {
                let mut inner = st.clone();
                self.goal(&args[0], &mut inner, site)?;
                self.goal(&args[1], &mut inner, site)
            }
            ("once", 1) => self.goal(&args[0], st, site),
            ("ignore", 1) => {
                let mut inner = st.clone();
                self.goal(&args[0], &mut inner, site)?;
                *st = inner.join(st);
                Ok(())
            }
            ("call", n) if n >= 1 => match add_args(&args[0], &args[1..]) {
                Some(inner) => self.goal(&inner, st, site),
                None => Ok(()),
            },
            ("is", 2) => {
                if !st.is_ground(&args[1]) {
                    self.report(
                        ViolationKind::UninstantiatedInput,
                        site.at(&key),
                        format!("{} is not instantiated", args[1]),
                    );
                }
                st.ground(&args[0]);
                Ok(())
            }
            ("=", 2) => {
                self.unify(&args[0], &args[1], st);
                Ok(())
            }
            _ => {
                if let Some(&(_, _, t, goal, result)) = COLLECTORS.iter().find(|(n, a, ..)| *n == &*key.name && *a == key.arity) {
                    return self.collector(&key, &args[t], strip_carets(&args[goal]), &args[result], st, site);
                }
                if let Some(modes) = self.tool_modes(&key) {
                    self.tool_call(&key, args, &modes, st, site);
                    return Ok(());
                }
                if self.kb.is_builtin(&key) {
                    self.builtin(&key, args, st, site);
                    return Ok(());
                }
                if self.kb.predicate(&key).is_some() {
                    return self.user_call(&key, args, st);
                }
                Err(AnalyzeError::UnknownPredicate {
                    location: site.at(&key),
                    key,
                })
            }
        }
    }

    fn unify(&mut self, a: &Term, b: &Term, st: &mut InstantiationState) {
        for (x, y) in [(a, b), (b, a)] {
            match (x, st.of(y)) {
                (Term::Var(v), Inst::Relation) => st.set_relation(*v),
                (_, Inst::Ground | Inst::Relation) => st.ground(x),
                _ => {}
            }
        }
    }

    fn tool_call(&mut self, key: &PredKey, args: &[Term], modes: &[ArgMode], st: &mut InstantiationState, site: &Site) {
        let spec = self.registry.get(key);
        for (i, (a, m)) in args.iter().zip(modes).enumerate() {
            if *m == ArgMode::In && !st.is_ground(a) {
                let name = spec
                    .and_then(|s| s.args.get(i))
                    .map_or_else(|| format!("argument {}", i + 1), |n| n.clone());
                self.report(
                    ViolationKind::UninstantiatedInput,
                    site.at(key),
                    format!("input {name} is not instantiated"),
                );
            }
        }
        for (a, m) in args.iter().zip(modes) {
            if *m == ArgMode::Out {
                match a {
                    Term::Var(v) => st.set_relation(*v),
                    other => st.ground(other),
                }
            }
        }
    }

    fn builtin(&mut self, key: &PredKey, args: &[Term], st: &mut InstantiationState, site: &Site) {
        if let Some(&(_, _, i)) = LIST_ARG.iter().find(|(n, a, _)| *n == &*key.name && *a == key.arity) {
            if st.holds_relation(&args[i]) {
                self.report(
                    ViolationKind::RelationMisuse,
                    site.at(key),
                    format!("{} holds a whole relation", args[i]),
                );
            }
        }
        match MODES.iter().find(|(n, a, _)| *n == &*key.name && *a == key.arity) {
            Some((_, _, rules)) => {
                // Apply until nothing changes; one rule can enable another.
                loop {
                    let before = st.clone();
                    for (ins, outs) in rules.iter() {
                        if ins.iter().all(|&i| st.is_ground(&args[i])) {
                            for &o in outs.iter() {
                                st.ground(&args[o]);
                            }
                        }
                    }
                    if *st == before {
                        break;
                    }
                }
            }
            None => {
                let free: Vec<usize> = (0..args.len()).filter(|&i| !st.is_ground(&args[i])).collect();
                if let [only] = free.as_slice() {
                    st.ground(&args[*only]);
                }
            }
        }
    }

    /// findall and friends: the goal is analyzed but binds nothing
    /// outside; the result is ground.
    fn collector(
        &mut self,
        key: &PredKey,
        template: &Term,
        goal: &Term,
        result: &Term,
        st: &mut InstantiationState,
        site: &Site,
    ) -> Result<(), AnalyzeError> {
        let mut inner = st.clone();
        self.goal(goal, &mut inner, site)?;
        if inner.holds_relation(template) {
            self.report(
                ViolationKind::RelationMisuse,
                site.at(key),
                format!("template {template} holds a whole relation"),
            );
        }
        if let Some(culprit) = self.relation_outside_tools(goal, &inner) {
            self.report(
                ViolationKind::RelationMisuse,
                site.at(key),
                format!("goal {culprit} receives a whole relation"),
            );
        }
        st.ground(result);
        Ok(())
    }

    /// A goal inside `g`, other than a tool call, with a relation argument.
    fn relation_outside_tools(&self, g: &Term, st: &InstantiationState) -> Option<Term> {
        let key = g.key()?;
        match (&*key.name, key.arity) {
            (",", 2) | (";", 2) | ("->", 2) => g.args().iter().find_map(|a| self.relation_outside_tools(a, st)),
            ("\\+", 1) | ("not", 1) | ("once", 1) | ("ignore", 1) => self.relation_outside_tools(&g.args()[0], st),
            _ if self.tool_modes(&key).is_some() => None,
            _ => g.args().iter().any(|a| st.holds_relation(a)).then(|| g.clone()),
        }
    }

    /// Analyzes each clause of a user predicate for this call pattern; an
    /// argument is ground afterwards if every clause grounds it.
    fn user_call(&mut self, key: &PredKey, args: &[Term], st: &mut InstantiationState) -> Result<(), AnalyzeError> {
        let pattern: Vec<Inst> = args.iter().map(|a| st.of(a)).collect();
        let frame = (key.clone(), pattern.clone());
        if self.calls.contains(&frame) || self.calls.len() >= MAX_CALL_DEPTH {
            // Recursive call: assume it succeeds with everything ground,
            // which is what the non-recursive clauses decide.
            for a in args {
                st.ground(a);
            }
            return Ok(());
        }
        self.calls.push(frame);
        let mut grounded = vec![true; args.len()];
        for (n, clause) in self.kb.clauses(key).iter().enumerate() {
            let mut local = InstantiationState::default();
            for (h, p) in clause.head.args().iter().zip(&pattern) {
                match (h, p) {
                    (Term::Var(v), Inst::Relation) => local.set_relation(*v),
                    (_, Inst::Ground | Inst::Relation) => local.ground(h),
                    _ => {}
                }
            }
            for (i, g) in clause.body.iter().enumerate() {
                let inner = Site {
                    clause: Some((key.clone(), n + 1)),
                    goal: i + 1,
                };
                if let Err(e) = self.goal(g, &mut local, &inner) {
                    self.calls.pop();
                    return Err(e);
                }
            }
            for (flag, h) in grounded.iter_mut().zip(clause.head.args()) {
                *flag &= local.is_ground(h);
            }
        }
        self.calls.pop();
        for (a, g) in args.iter().zip(grounded) {
            if g {
                st.ground(a);
            }
        }
        Ok(())
    }

    /// Every predicate a clause body refers to must exist, called or not.
    fn check_known(&self, g: &Term, site: &Site) -> Result<(), AnalyzeError> {
        let Some(key) = g.key() else { return Ok(()) };
        let args = g.args();
        match (&*key.name, key.arity) {
            (",", 2) | (";", 2) | ("->", 2) => {
                self.check_known(&args[0], site)?;
                self.check_known(&args[1], site)
            }
            ("\\+", 1) | ("not", 1) | ("once", 1) | ("ignore", 1) => self.check_known(&args[0], site),
            ("forall", 2) => {
                self.check_known(&args[0], site)?;
                self.check_known(&args[1], site)
            }
            _ => {
                if let Some(&(_, _, _, goal, _)) = COLLECTORS.iter().find(|(n, a, ..)| *n == &*key.name && *a == key.arity) {
                    return self.check_known(strip_carets(&args[goal]), site);
                }
                if self.kb.is_known(&key) || self.kb.is_builtin(&key) || self.registry.get(&key).is_some() {
                    Ok(())
                } else {
                    Err(AnalyzeError::UnknownPredicate {
                        location: site.at(&key),
                        key,
                    })
                }
            }
        }
    }
}

/// Analyzes `program` against `kb` (which must not yet contain the
/// program's own clauses) and the tool `registry`.
pub fn analyze_program(
    program: &ActionProgram,
    kb: &KnowledgeBase,
    registry: &ToolRegistry,
    rubric: &Rubric,
) -> Result<Vec<Violation>, AnalyzeError> {
    let extended = program.extend(kb)?;
    let mut w = Walker {
        kb: &extended,
        registry,
        rubric,
        violations: Vec::new(),
        seen: HashSet::new(),
        calls: Vec::new(),
    };
    for key in program.defined() {
        w.report(
            ViolationKind::LlmAssert,
            Location {
                clause: Some((key.clone(), 1)),
                goal: None,
                callee: None,
            },
            format!("{key} is defined by the plan"),
        );
    }
    for (n, c) in program.clauses.iter().enumerate() {
        let n = program.clauses[..n].iter().filter(|d| d.clause.key() == c.clause.key()).count();
        for (i, g) in c.clause.body.iter().enumerate() {
            w.check_known(
                g,
                &Site {
                    clause: Some((c.clause.key(), n + 1)),
                    goal: i + 1,
                },
            )?;
        }
    }
    let mut st = InstantiationState::default();
    for g in &program.goals {
        w.goal(
            &g.term,
            &mut st,
            &Site {
                clause: None,
                goal: g.index,
            },
        )?;
    }
    debug_assert!(program.clauses.iter().all(|c| c.clause.provenance() == Provenance::Llm));
    Ok(w.violations)
}
