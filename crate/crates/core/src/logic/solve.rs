//! Depth-first SLD resolution with backtracking, cut and negation as failure.
//!
//! The machine keeps a continuation (a linked list of pending goals) and a
//! stack of choice points. Bindings live in a trail-backed store; undoing to
//! a choice point's trail mark restores the bindings it saw. Cut truncates
//! the choice-point stack to the height recorded when the enclosing clause
//! was entered.

use std::rc::Rc;
use std::sync::Arc;

use super::builtins;
use super::kb::{ArgMode, Clause, KnowledgeBase};
use super::parser::{read_goal, SyntaxError};
use super::subst::{unify_in, Bindings, Substitution};
use super::term::{PredKey, Term, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveBudget {
    /// Maximum number of pending goals in the continuation.
    pub max_depth: usize,
    /// Maximum number of goals executed.
    pub max_steps: u64,
}

impl Default for SolveBudget {
    fn default() -> SolveBudget {
        SolveBudget {
            max_depth: 10_000,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("unknown procedure {0}")]
    UnknownPredicate(PredKey),
    #[error("depth budget of {0} exceeded")]
    DepthExceeded(usize),
    #[error("step budget of {0} exceeded")]
    StepsExceeded(u64),
    #[error("instantiation error in {context}")]
    Instantiation { context: String },
    #[error("type error in {context}: expected {expected}, got {culprit}")]
    Type {
        context: String,
        expected: String,
        culprit: String,
    },
    #[error("evaluation error in {context}: {reason}")]
    Evaluation { context: String, reason: String },
    #[error("domain error in {context}: {culprit}")]
    Domain { context: String, culprit: String },
    #[error("foreign tool {pred} failed: {message}")]
    Foreign { pred: PredKey, message: String },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

impl SolveError {
    pub fn is_instantiation(&self) -> bool {
        matches!(self, SolveError::Instantiation { .. })
    }
}

/// Binding store with a trail for undo.
#[derive(Default)]
pub(crate) struct Store {
    cells: Vec<Option<Term>>,
    trail: Vec<VarId>,
}

impl Bindings for Store {
    fn lookup(&self, v: VarId) -> Option<&Term> {
        self.cells.get(v).and_then(Option::as_ref)
    }

    fn bind(&mut self, v: VarId, t: Term) {
        if v >= self.cells.len() {
            self.cells.resize(v + 1, None);
        }
        self.cells[v] = Some(t);
        self.trail.push(v);
    }
}

impl Store {
    /// Reserves `n` fresh variables and returns the first id.
    pub(crate) fn alloc(&mut self, n: usize) -> VarId {
        let base = self.cells.len();
        self.cells.resize(base + n, None);
        base
    }

    pub(crate) fn fresh(&mut self) -> Term {
        Term::Var(self.alloc(1))
    }

    pub(crate) fn mark(&self) -> (usize, usize) {
        (self.trail.len(), self.cells.len())
    }

    pub(crate) fn undo(&mut self, (trail_len, cells_len): (usize, usize)) {
        while self.trail.len() > trail_len {
            let v = self.trail.pop().unwrap();
            if v < self.cells.len() {
                self.cells[v] = None;
            }
        }
        self.cells.truncate(cells_len);
    }
}

pub(crate) enum Instr {
    Goal(Term),
    CutTo(usize),
    Collect { slot: usize, template: Term },
}

pub(crate) struct Frame {
    instr: Instr,
    cut_barrier: usize,
    next: Cont,
    len: usize,
}

pub(crate) type Cont = Option<Rc<Frame>>;

impl Drop for Frame {
    fn drop(&mut self) {
        let mut next = self.next.take();
        while let Some(rc) = next {
            match Rc::try_unwrap(rc) {
                Ok(mut f) => next = f.next.take(),
                Err(_) => break,
            }
        }
    }
}

fn cont_len(c: &Cont) -> usize {
    c.as_ref().map_or(0, |f| f.len)
}

pub(crate) enum Alt<'kb> {
    Clauses {
        goal: Term,
        clauses: &'kb [Arc<Clause>],
        next: usize,
        cont: Cont,
    },
    Resume(Cont),
    Candidates {
        target: Term,
        values: Rc<Vec<Term>>,
        next: usize,
        cont: Cont,
    },
    Members {
        elem: Term,
        rest: Term,
        cont: Cont,
    },
    Between {
        target: Term,
        next: i64,
        high: Option<i64>,
        cont: Cont,
    },
    FindallEnd {
        slot: usize,
        result: Term,
        cont: Cont,
    },
}

struct ChoicePoint<'kb> {
    mark: (usize, usize),
    alt: Alt<'kb>,
}

/// Solver state for one query.
pub struct Machine<'kb> {
    pub(crate) kb: &'kb KnowledgeBase,
    pub(crate) store: Store,
    choices: Vec<ChoicePoint<'kb>>,
    cont: Cont,
    budget: SolveBudget,
    steps: u64,
    collectors: Vec<Vec<(Term, usize)>>,
    /// Text written by `write/1` and friends.
    pub output: String,
}

impl<'kb> Machine<'kb> {
    pub(crate) fn occurs_check(&self) -> bool {
        self.kb.flags.occurs_check
    }

    pub(crate) fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let oc = self.occurs_check();
        unify_in(&mut self.store, a, b, oc)
    }

    pub(crate) fn deref(&self, t: &Term) -> Term {
        self.store.deref(t).clone()
    }

    pub(crate) fn resolve(&self, t: &Term) -> Term {
        self.store.resolve(t)
    }

    pub(crate) fn height(&self) -> usize {
        self.choices.len()
    }

    /// Pushes an alternative that is tried when execution backtracks.
    pub(crate) fn push_alt(&mut self, alt: Alt<'kb>) {
        let mark = self.store.mark();
        self.choices.push(ChoicePoint { mark, alt });
    }

    fn cut_to(&mut self, height: usize) {
        self.choices.truncate(height);
    }

    pub(crate) fn push_goal(&mut self, goal: Term, cut_barrier: usize, next: Cont) -> Result<Cont, SolveError> {
        self.push_instr(Instr::Goal(goal), cut_barrier, next)
    }

    fn push_instr(&mut self, instr: Instr, cut_barrier: usize, next: Cont) -> Result<Cont, SolveError> {
        let len = cont_len(&next) + 1;
        if len > self.budget.max_depth {
            return Err(SolveError::DepthExceeded(self.budget.max_depth));
        }
        Ok(Some(Rc::new(Frame {
            instr,
            cut_barrier,
            next,
            len,
        })))
    }

    /// Runs `goal` as an opaque call (cut inside is local) before `next`.
    pub(crate) fn call_goal(&mut self, goal: Term, next: Cont) -> Result<(), SolveError> {
        let h = self.height();
        self.cont = self.push_goal(goal, h, next)?;
        Ok(())
    }

    /// Stores a copy of `template` for a running findall.
    fn collect(&mut self, slot: usize, template: &Term) {
        let resolved = self.resolve(template);
        let mut map: Vec<VarId> = Vec::new();
        let canon = resolved.map_vars(&mut |v| {
            let i = match map.iter().position(|&m| m == v) {
                Some(i) => i,
                None => {
                    map.push(v);
                    map.len() - 1
                }
            };
            Term::Var(i)
        });
        self.collectors[slot].push((canon, map.len()));
    }

    fn finish_collect(&mut self, slot: usize) -> Term {
        let items = std::mem::take(&mut self.collectors[slot]);
        let mut out = Vec::with_capacity(items.len());
        for (t, n) in items {
            if n == 0 {
                out.push(t);
            } else {
                let base = self.store.alloc(n);
                out.push(t.offset_vars(base));
            }
        }
        Term::list(out)
    }

    pub(crate) fn start_findall(&mut self, template: Term, goal: Term, result: Term, next: Cont) -> Result<(), SolveError> {
        let slot = self.collectors.len();
        self.collectors.push(Vec::new());
        self.push_alt(Alt::FindallEnd { slot, result, cont: next });
        let h = self.height();
        let fail = self.push_goal(Term::atom("fail"), h, None)?;
        let collect = self.push_instr(Instr::Collect { slot, template }, h, fail)?;
        self.cont = self.push_goal(goal, h, collect)?;
        Ok(())
    }

    /// `\+ goal`: succeeds with `next` only if `goal` has no solution.
    pub(crate) fn start_negation(&mut self, goal: Term, next: Cont) -> Result<(), SolveError> {
        let b = self.height();
        self.push_alt(Alt::Resume(next));
        let h = self.height();
        let fail = self.push_goal(Term::atom("fail"), h, None)?;
        let cut = self.push_instr(Instr::CutTo(b), h, fail)?;
        self.cont = self.push_goal(goal, h, cut)?;
        Ok(())
    }

    /// `(cond -> then ; else)`; `else_` is `None` for a bare `->`.
    fn start_if_then_else(
        &mut self,
        cond: Term,
        then: Term,
        else_: Option<Term>,
        cut_barrier: usize,
        next: Cont,
    ) -> Result<(), SolveError> {
        let b = self.height();
        if let Some(e) = else_ {
            let alt = self.push_goal(e, cut_barrier, next.clone())?;
            self.push_alt(Alt::Resume(alt));
        }
        let h = self.height();
        let then = self.push_goal(then, cut_barrier, next)?;
        let cut = self.push_instr(Instr::CutTo(b), h, then)?;
        self.cont = self.push_goal(cond, h, cut)?;
        Ok(())
    }

    /// Tries clauses of a user predicate starting at index `start`.
    fn try_clauses(&mut self, goal: &Term, clauses: &'kb [Arc<Clause>], start: usize, cont: Cont) -> Result<bool, SolveError> {
        let height = self.height();
        let goal_args: Vec<Term> = goal.args().iter().map(|a| self.deref(a)).collect();
        let mut i = start;
        while i < clauses.len() {
            let clause = &clauses[i];
            if !quick_match(&goal_args, clause.head.args()) {
                i += 1;
                continue;
            }
            let mark = self.store.mark();
            let base = self.store.alloc(clause.var_count());
            let head = clause.head.offset_vars(base);
            if self.unify(goal, &head) {
                if let Some(j) = (i + 1..clauses.len()).find(|&j| quick_match(&goal_args, clauses[j].head.args())) {
                    self.choices.push(ChoicePoint {
                        mark,
                        alt: Alt::Clauses {
                            goal: goal.clone(),
                            clauses,
                            next: j,
                            cont: cont.clone(),
                        },
                    });
                }
                let mut next = cont;
                for g in clause.body.iter().rev() {
                    next = self.push_goal(g.offset_vars(base), height, next)?;
                }
                self.cont = next;
                return Ok(true);
            }
            self.store.undo(mark);
            i += 1;
        }
        Ok(false)
    }

    /// Pops choice points until one yields a new continuation.
    fn backtrack(&mut self) -> Result<bool, SolveError> {
        while let Some(cp) = self.choices.pop() {
            self.store.undo(cp.mark);
            match cp.alt {
                Alt::Clauses { goal, clauses, next, cont } => {
                    if self.try_clauses(&goal, clauses, next, cont)? {
                        return Ok(true);
                    }
                }
                Alt::Resume(cont) => {
                    self.cont = cont;
                    return Ok(true);
                }
                Alt::Candidates {
                    target,
                    values,
                    next,
                    cont,
                } => {
                    if next + 1 < values.len() {
                        self.push_alt(Alt::Candidates {
                            target: target.clone(),
                            values: values.clone(),
                            next: next + 1,
                            cont: cont.clone(),
                        });
                    }
                    if self.unify(&target, &values[next]) {
                        self.cont = cont;
                        return Ok(true);
                    }
                }
                Alt::Members { elem, rest, cont } => {
                    let rest = self.deref(&rest);
                    let Some((h, t)) = rest.as_cons() else {
                        continue;
                    };
                    let (h, t) = (h.clone(), t.clone());
                    if self.deref(&t).as_cons().is_some() {
                        self.push_alt(Alt::Members {
                            elem: elem.clone(),
                            rest: t,
                            cont: cont.clone(),
                        });
                    }
                    if self.unify(&elem, &h) {
                        self.cont = cont;
                        return Ok(true);
                    }
                }
                Alt::Between { target, next, high, cont } => {
                    if high.is_none_or(|h| next < h) {
                        self.push_alt(Alt::Between {
                            target: target.clone(),
                            next: next + 1,
                            high,
                            cont: cont.clone(),
                        });
                    }
                    if self.unify(&target, &Term::Int(next)) {
                        self.cont = cont;
                        return Ok(true);
                    }
                }
                Alt::FindallEnd { slot, result, cont } => {
                    let list = self.finish_collect(slot);
                    if slot + 1 == self.collectors.len() {
                        self.collectors.pop();
                    }
                    if self.unify(&result, &list) {
                        self.cont = cont;
                        return Ok(true);
                    }
                }
            }
        }
        Ok(false)
    }

    fn tick(&mut self) -> Result<(), SolveError> {
        self.steps += 1;
        if self.steps > self.budget.max_steps {
            return Err(SolveError::StepsExceeded(self.budget.max_steps));
        }
        Ok(())
    }

    /// Executes one frame. Returns `false` when execution must backtrack.
    fn step(&mut self, frame: Rc<Frame>) -> Result<bool, SolveError> {
        let next = frame.next.clone();
        let barrier = frame.cut_barrier;
        let goal = match &frame.instr {
            Instr::CutTo(h) => {
                self.cut_to(*h);
                self.cont = next;
                return Ok(true);
            }
            Instr::Collect { slot, template } => {
                self.collect(*slot, template);
                self.cont = next;
                return Ok(true);
            }
            Instr::Goal(g) => self.deref(g),
        };
        drop(frame);
        self.tick()?;
        let key = match &goal {
            Term::Var(_) => return Err(SolveError::Instantiation { context: "call/1".into() }),
            Term::Atom(_) | Term::Compound(_) => goal.key().unwrap(),
            other => {
                return Err(SolveError::Type {
                    context: "call/1".into(),
                    expected: "callable".into(),
                    culprit: other.to_string(),
                })
            }
        };
        let args = goal.args();
        match (&*key.name, key.arity) {
            ("true", 0) => {
                self.cont = next;
                Ok(true)
            }
            ("fail", 0) | ("false", 0) => Ok(false),
            ("!", 0) => {
                self.cut_to(barrier);
                self.cont = next;
                Ok(true)
            }
            (",", 2) => {
                let rest = self.push_goal(args[1].clone(), barrier, next)?;
                self.cont = self.push_goal(args[0].clone(), barrier, rest)?;
                Ok(true)
            }
            (";", 2) => {
                let left = self.deref(&args[0]);
                if let Term::Compound(c) = &left {
                    if &*c.functor == "->" && c.args.len() == 2 {
                        let (cond, then) = (c.args[0].clone(), c.args[1].clone());
                        self.start_if_then_else(cond, then, Some(args[1].clone()), barrier, next)?;
                        return Ok(true);
                    }
                }
                {
                    let alt = self.push_goal(args[1].clone(), barrier, next.clone())?;
                    self.push_alt(Alt::Resume(alt));
                    self.cont = self.push_goal(left, barrier, next)?;
                }
                Ok(true)
            }
            ("->", 2) => {
                self.start_if_then_else(args[0].clone(), args[1].clone(), None, barrier, next)?;
                Ok(true)
            }
            ("\\+", 1) | ("not", 1) => {
                self.start_negation(args[0].clone(), next)?;
                Ok(true)
            }
            ("call", n) if n >= 1 => {
                let target = add_args(&self.deref(&args[0]), &args[1..])?;
                self.call_goal(target, next)?;
                Ok(true)
            }
            ("findall", 3) => {
                self.start_findall(args[0].clone(), args[1].clone(), args[2].clone(), next)?;
                Ok(true)
            }
            _ => {
                if let Some(f) = builtins::lookup(&key) {
                    let ok = f(self, args, &next)?;
                    if ok {
                        self.cont = next;
                    }
                    return Ok(ok);
                }
                if let Some(pred) = self.kb.predicate(&key) {
                    let clauses: &'kb [Arc<Clause>] = &pred.clauses;
                    return self.try_clauses(&goal, clauses, 0, next);
                }
                if let Some(foreign) = self.kb.foreign(&key) {
                    let ok = self.call_foreign(&key, foreign.as_ref(), args)?;
                    if ok {
                        self.cont = next;
                    }
                    return Ok(ok);
                }
                Err(SolveError::UnknownPredicate(key))
            }
        }
    }

    fn call_foreign(&mut self, key: &PredKey, pred: &dyn super::kb::ForeignPredicate, args: &[Term]) -> Result<bool, SolveError> {
        let mut resolved = Vec::with_capacity(args.len());
        for (i, (a, mode)) in args.iter().zip(pred.modes()).enumerate() {
            let r = self.resolve(a);
            if *mode == ArgMode::In && !r.is_ground() {
                return Err(SolveError::Instantiation {
                    context: format!("{key} argument {}", i + 1),
                });
            }
            resolved.push(r);
        }
        let outputs = pred.call(&resolved).map_err(|e| SolveError::Foreign {
            pred: key.clone(),
            message: e.0,
        })?;
        let Some(outputs) = outputs else {
            return Ok(false);
        };
        let out_args = args
            .iter()
            .zip(pred.modes())
            .filter(|(_, m)| **m == ArgMode::Out)
            .map(|(a, _)| a.clone());
        for (arg, value) in out_args.zip(outputs) {
            if !self.unify(&arg, &value) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn run(&mut self) -> Result<bool, SolveError> {
        loop {
            let Some(frame) = self.cont.take() else {
                return Ok(true);
            };
            if !self.step(frame)? && !self.backtrack()? {
                return Ok(false);
            }
        }
    }
}

/// Shallow pre-unification check on clause head arguments.
fn quick_match(goal_args: &[Term], head_args: &[Term]) -> bool {
    goal_args.iter().zip(head_args).all(|(g, h)| match (g, h) {
        (Term::Var(_), _) | (_, Term::Var(_)) => true,
        (Term::Atom(a), Term::Atom(b)) => a == b,
        (Term::Int(a), Term::Int(b)) => a == b,
        (Term::Compound(a), Term::Compound(b)) => a.functor == b.functor && a.args.len() == b.args.len(),
        (Term::Float(a), Term::Float(b)) => a == b,
        (Term::Str(a), Term::Str(b)) => a == b,
        _ => false,
    })
}

/// `call/N`: appends extra arguments to a callable.
pub(crate) fn add_args(goal: &Term, extra: &[Term]) -> Result<Term, SolveError> {
    if extra.is_empty() {
        return Ok(goal.clone());
    }
    match goal {
        Term::Atom(a) => Ok(Term::compound_arc(a.clone(), extra.to_vec())),
        Term::Compound(c) => {
            let mut args = c.args.clone();
            args.extend_from_slice(extra);
            Ok(Term::compound_arc(c.functor.clone(), args))
        }
        Term::Var(_) => Err(SolveError::Instantiation {
            context: format!("call/{}", extra.len() + 1),
        }),
        other => Err(SolveError::Type {
            context: format!("call/{}", extra.len() + 1),
            expected: "callable".into(),
            culprit: other.to_string(),
        }),
    }
}

/// A parsed query with its variable names.
#[derive(Clone, Debug)]
pub struct Query {
    pub goal: Term,
    pub var_names: Vec<(String, VarId)>,
    pub var_count: usize,
}

impl Query {
    pub fn parse(text: &str, kb: &KnowledgeBase) -> Result<Query, SolveError> {
        let r = read_goal(text, kb.ops())?;
        Ok(Query {
            goal: r.term,
            var_names: r.var_names,
            var_count: r.var_count,
        })
    }

    /// Wraps an existing term; variables keep their ids and have no names.
    pub fn from_term(goal: Term) -> Query {
        let var_count = goal.max_var().map_or(0, |m| m + 1);
        Query {
            goal,
            var_names: Vec::new(),
            var_count,
        }
    }
}

/// One answer: the resolved value of each query variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Answer {
    pub subst: Substitution,
    pub names: Vec<(String, VarId)>,
}

impl Answer {
    pub fn get(&self, name: &str) -> Option<&Term> {
        self.names.iter().find(|(n, _)| n == name).and_then(|(_, v)| self.subst.get(*v))
    }

    /// `X = a, Y = b` in name order, skipping unbound names; `true` when empty.
    pub fn render(&self) -> String {
        let parts: Vec<String> = self
            .names
            .iter()
            .filter_map(|(n, v)| match self.subst.get(*v) {
                Some(Term::Var(w)) if w == v => None,
                Some(t) => Some(format!("{n} = {t}")),
                None => None,
            })
            .collect();
        if parts.is_empty() {
            "true".to_string()
        } else {
            parts.join(",\n")
        }
    }
}

/// Lazy stream of answers to a query.
pub struct Solutions<'kb> {
    machine: Machine<'kb>,
    query: Query,
    started: bool,
    done: bool,
}

impl<'kb> Solutions<'kb> {
    /// Text written by output builtins so far.
    pub fn take_output(&mut self) -> String {
        std::mem::take(&mut self.machine.output)
    }

    pub fn steps(&self) -> u64 {
        self.machine.steps
    }
}

impl Iterator for Solutions<'_> {
    type Item = Result<Answer, SolveError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let found = if self.started {
            self.machine
                .backtrack()
                .and_then(|ok| if ok { self.machine.run() } else { Ok(false) })
        } else {
            self.started = true;
            self.machine.run()
        };
        match found {
            Ok(true) => {
                let mut subst = Substitution::new();
                for v in 0..self.query.var_count {
                    subst.insert(v, self.machine.resolve(&Term::Var(v)));
                }
                Some(Ok(Answer {
                    subst,
                    names: self.query.var_names.clone(),
                }))
            }
            Ok(false) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Starts solving `query` against `kb`.
pub fn solve<'kb>(kb: &'kb KnowledgeBase, query: Query, budget: SolveBudget) -> Solutions<'kb> {
    let mut machine = Machine {
        kb,
        store: Store::default(),
        choices: Vec::new(),
        cont: None,
        budget,
        steps: 0,
        collectors: Vec::new(),
        output: String::new(),
    };
    machine.store.alloc(query.var_count);
    machine.cont = Some(Rc::new(Frame {
        instr: Instr::Goal(query.goal.clone()),
        cut_barrier: 0,
        next: None,
        len: 1,
    }));
    Solutions {
        machine,
        query,
        started: false,
        done: false,
    }
}

/// Parses and solves `text`, collecting every answer.
pub fn solve_all(kb: &KnowledgeBase, text: &str, budget: SolveBudget) -> Result<Vec<Answer>, SolveError> {
    let q = Query::parse(text, kb)?;
    solve(kb, q, budget).collect()
}
