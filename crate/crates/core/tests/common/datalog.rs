//! Random hierarchical programs with negation, and a bottom-up evaluator.
//!
//! Rules of predicate `p_i` only call predicates `p_j` with `j < i`, so
//! top-down search terminates and one pass in index order is a fixpoint.

use std::collections::HashSet;

use rand::Rng;

use logiplan::logic::{solve_all, KnowledgeBase, Provenance, SolveBudget, Term};

pub const CONSTS: usize = 5;
pub const VARS: usize = 4;

/// Joins of three body literals over 30 facts can produce tens of thousands
/// of duplicate answers, well past the default step budget.
pub const BUDGET: SolveBudget = SolveBudget {
    max_depth: 100_000,
    max_steps: 50_000_000,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Arg {
    Var(usize),
    Const(usize),
}

#[derive(Clone, Debug)]
pub struct Lit {
    pub pred: usize,
    pub args: Vec<Arg>,
}

#[derive(Clone, Debug)]
pub struct Rule {
    pub head: Lit,
    pub pos: Vec<Lit>,
    pub neq: Option<(usize, usize)>,
    pub neg: Option<Lit>,
}

#[derive(Clone, Debug)]
pub struct Program {
    pub arity: Vec<usize>,
    pub facts: Vec<(usize, Vec<usize>)>,
    pub rules: Vec<Rule>,
}

fn arg_text(a: Arg) -> String {
    match a {
        Arg::Var(v) => format!("V{v}"),
        Arg::Const(c) => format!("c{c}"),
    }
}

fn lit_text(l: &Lit) -> String {
    let args: Vec<String> = l.args.iter().map(|a| arg_text(*a)).collect();
    format!("p{}({})", l.pred, args.join(", "))
}

impl Program {
    pub fn generate<R: Rng>(rng: &mut R) -> Program {
        let npreds = rng.random_range(2..=6);
        let arity: Vec<usize> = (0..npreds).map(|_| rng.random_range(1..=2)).collect();
        let nfacts = rng.random_range(0..=30);
        let facts = (0..nfacts)
            .map(|_| {
                let p = rng.random_range(0..npreds);
                (p, (0..arity[p]).map(|_| rng.random_range(0..CONSTS)).collect())
            })
            .collect();
        let nrules = rng.random_range(0..=4);
        let mut rules = Vec::new();
        for _ in 0..nrules {
            let h = rng.random_range(1..npreds);
            let npos = rng.random_range(1..=3);
            let mut bound: Vec<usize> = Vec::new();
            let mut pos = Vec::new();
            for _ in 0..npos {
                let p = rng.random_range(0..h);
                let args = (0..arity[p])
                    .map(|_| {
                        if rng.random_bool(0.75) {
                            let v = rng.random_range(0..VARS);
                            if !bound.contains(&v) {
                                bound.push(v);
                            }
                            Arg::Var(v)
                        } else {
                            Arg::Const(rng.random_range(0..CONSTS))
                        }
                    })
                    .collect();
                pos.push(Lit { pred: p, args });
            }
            let pick = |rng: &mut R| {
                if !bound.is_empty() && rng.random_bool(0.8) {
                    Arg::Var(bound[rng.random_range(0..bound.len())])
                } else {
                    Arg::Const(rng.random_range(0..CONSTS))
                }
            };
            let head = Lit {
                pred: h,
                args: (0..arity[h]).map(|_| pick(rng)).collect(),
            };
            let neg = if rng.random_bool(0.4) {
                let p = rng.random_range(0..h);
                Some(Lit {
                    pred: p,
                    args: (0..arity[p]).map(|_| pick(rng)).collect(),
                })
            } else {
                None
            };
            let neq = if bound.len() >= 2 && rng.random_bool(0.3) {
                Some((bound[0], bound[1]))
            } else {
                None
            };
            rules.push(Rule { head, pos, neq, neg });
        }
        Program { arity, facts, rules }
    }

    pub fn source(&self) -> String {
        let mut s = String::new();
        for (p, a) in self.arity.iter().enumerate() {
            s.push_str(&format!(":- dynamic p{p}/{a}.\n"));
        }
        for (p, args) in &self.facts {
            let args: Vec<String> = args.iter().map(|c| format!("c{c}")).collect();
            s.push_str(&format!("p{p}({}).\n", args.join(", ")));
        }
        for r in &self.rules {
            let mut body: Vec<String> = r.pos.iter().map(lit_text).collect();
            if let Some((a, b)) = r.neq {
                body.push(format!("V{a} \\= V{b}"));
            }
            if let Some(n) = &r.neg {
                body.push(format!("\\+ {}", lit_text(n)));
            }
            s.push_str(&format!("{} :- {}.\n", lit_text(&r.head), body.join(", ")));
        }
        s
    }

    pub fn knowledge_base(&self) -> KnowledgeBase {
        let mut kb = KnowledgeBase::new();
        kb.consult(&self.source(), Provenance::Program)
            .unwrap_or_else(|e| panic!("{e}\n{}", self.source()));
        kb
    }

    /// Every true tuple of every predicate.
    pub fn fixpoint(&self) -> Vec<HashSet<Vec<usize>>> {
        let n = self.arity.len();
        let mut rel: Vec<HashSet<Vec<usize>>> = vec![HashSet::new(); n];
        for (p, args) in &self.facts {
            rel[*p].insert(args.clone());
        }
        for p in 0..n {
            for r in self.rules.iter().filter(|r| r.head.pred == p) {
                let mut env = [0usize; VARS];
                for code in 0..CONSTS.pow(VARS as u32) {
                    let mut c = code;
                    for slot in env.iter_mut() {
                        *slot = c % CONSTS;
                        c /= CONSTS;
                    }
                    let val = |a: &Arg| match a {
                        Arg::Var(v) => env[*v],
                        Arg::Const(k) => *k,
                    };
                    let tuple = |l: &Lit| l.args.iter().map(val).collect::<Vec<usize>>();
                    if !r.pos.iter().all(|l| rel[l.pred].contains(&tuple(l))) {
                        continue;
                    }
                    if let Some((a, b)) = r.neq {
                        if env[a] == env[b] {
                            continue;
                        }
                    }
                    if let Some(l) = &r.neg {
                        if rel[l.pred].contains(&tuple(l)) {
                            continue;
                        }
                    }
                    let t = tuple(&r.head);
                    rel[p].insert(t);
                }
            }
        }
        rel
    }
}

/// Constant index of a solution term `cN`.
pub fn const_index(t: &Term) -> usize {
    let name = t.as_atom().unwrap_or_else(|| panic!("not a constant: {t}"));
    name[1..].parse().unwrap()
}

/// Solutions of `p(A0, ...)` found by the solver, as a set.
pub fn solved(kb: &KnowledgeBase, pred: usize, arity: usize) -> HashSet<Vec<usize>> {
    let vars: Vec<String> = (0..arity).map(|i| format!("A{i}")).collect();
    let goal = format!("p{pred}({})", vars.join(", "));
    solve_all(kb, &goal, BUDGET)
        .unwrap_or_else(|e| panic!("{goal}: {e}"))
        .iter()
        .map(|a| vars.iter().map(|v| const_index(a.get(v).unwrap())).collect())
        .collect()
}

/// A ground goal over the program's predicates, built from conjunction,
/// disjunction and negation, and its truth value in `model`.
pub fn ground_goal<R: Rng>(rng: &mut R, prog: &Program, model: &[HashSet<Vec<usize>>], depth: usize) -> (String, bool) {
    if depth == 0 || rng.random_bool(0.5) {
        let p = rng.random_range(0..prog.arity.len());
        let args: Vec<usize> = (0..prog.arity[p]).map(|_| rng.random_range(0..CONSTS)).collect();
        let text: Vec<String> = args.iter().map(|c| format!("c{c}")).collect();
        return (format!("p{p}({})", text.join(", ")), model[p].contains(&args));
    }
    let (g1, t1) = ground_goal(rng, prog, model, depth - 1);
    let (g2, t2) = ground_goal(rng, prog, model, depth - 1);
    match rng.random_range(0..3) {
        0 => (format!("({g1}, {g2})"), t1 && t2),
        1 => (format!("({g1} ; {g2})"), t1 || t2),
        _ => (format!("\\+ {g1}"), !t1),
    }
}

/// Every predicate's solution set equals the bottom-up model.
pub fn check_program(prog: &Program) -> Result<(), String> {
    let kb = prog.knowledge_base();
    let model = prog.fixpoint();
    for (p, a) in prog.arity.iter().enumerate() {
        let got = solved(&kb, p, *a);
        if got != model[p] {
            return Err(format!("p{p}: solver {got:?}, model {:?}\n{}", model[p], prog.source()));
        }
    }
    Ok(())
}

fn count(kb: &KnowledgeBase, goal: &str) -> Result<Vec<logiplan::logic::Answer>, String> {
    solve_all(kb, goal, BUDGET).map_err(|e| format!("{goal}: {e}"))
}

/// findall over each predicate collects one element per solution.
pub fn check_findall(prog: &Program) -> Result<(), String> {
    let kb = prog.knowledge_base();
    for (p, a) in prog.arity.iter().enumerate() {
        let args: Vec<String> = (0..*a).map(|i| format!("A{i}")).collect();
        let goal = format!("p{p}({})", args.join(", "));
        let direct = count(&kb, &goal)?;
        let found = count(&kb, &format!("findall(t({}), {goal}, L), length(L, N)", args.join(", ")))?;
        if found.len() != 1 {
            return Err(format!("findall over {goal} gave {} answers", found.len()));
        }
        let items = found[0].get("L").unwrap().list_items().ok_or("findall result is not a list")?;
        let n = found[0].get("N").unwrap().to_string();
        if n != direct.len().to_string() || items.len() != direct.len() {
            return Err(format!("findall over {goal}: {n} items, {} solutions", direct.len()));
        }
        for (item, ans) in items.iter().zip(&direct) {
            let want: Vec<String> = args.iter().map(|v| ans.get(v).unwrap().to_string()).collect();
            if *item.to_string() != format!("t({})", want.join(", ")) {
                return Err(format!("findall over {goal}: {item} out of order"));
            }
        }
    }
    Ok(())
}

/// negate/1, defined by cut-fail, and the builtin \+ both agree with the
/// model on `n` random ground goals.
pub fn check_negation<R: Rng>(rng: &mut R, prog: &Program, n: usize) -> Result<(), String> {
    let mut kb = prog.knowledge_base();
    kb.consult("negate(P) :- call(P), !, fail.\nnegate(_).", Provenance::Program)
        .map_err(|e| e.to_string())?;
    let model = prog.fixpoint();
    for _ in 0..n {
        let (goal, truth) = ground_goal(rng, prog, &model, 2);
        let naf = !count(&kb, &format!("\\+ ({goal})"))?.is_empty();
        let neg = !count(&kb, &format!("negate(({goal}))"))?.is_empty();
        if naf != !truth || neg != !truth {
            return Err(format!("{goal}: model {truth}, \\+ {naf}, negate {neg}\n{}", prog.source()));
        }
    }
    Ok(())
}
