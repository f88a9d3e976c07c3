//! Random terms and a textbook unifier, plus the cut-scoping check.

use std::collections::HashMap;

use rand::Rng;

use logiplan::logic::subst::Bindings;
use logiplan::logic::{solve_all, unify, KnowledgeBase, Provenance, SolveBudget, Substitution, Term};

pub fn random_term<R: Rng>(rng: &mut R, depth: usize) -> Term {
    let leaf = depth == 0 || rng.random_bool(0.4);
    if leaf {
        return match rng.random_range(0..4) {
            0 | 1 => Term::Var(rng.random_range(0..4)),
            2 => Term::atom(["a", "b"][rng.random_range(0..2)]),
            _ => Term::Int(rng.random_range(0..2)),
        };
    }
    let (f, n) = [("f", 1), ("g", 2), ("h", 3)][rng.random_range(0..3)];
    Term::compound(f, (0..n).map(|_| random_term(rng, depth - 1)).collect())
}

fn walk(t: &Term, s: &HashMap<usize, Term>) -> Term {
    match t {
        Term::Var(v) => match s.get(v) {
            Some(x) => walk(x, s),
            None => t.clone(),
        },
        _ => t.clone(),
    }
}

pub fn apply(t: &Term, s: &HashMap<usize, Term>) -> Term {
    match walk(t, s) {
        Term::Compound(c) => Term::compound(&c.functor, c.args.iter().map(|a| apply(a, s)).collect()),
        other => other,
    }
}

fn occurs(v: usize, t: &Term, s: &HashMap<usize, Term>) -> bool {
    match walk(t, s) {
        Term::Var(w) => w == v,
        Term::Compound(c) => c.args.iter().any(|a| occurs(v, a, s)),
        _ => false,
    }
}

/// Unification with occurs check on an explicit binding map.
pub fn reference_unify(a: &Term, b: &Term, s: &mut HashMap<usize, Term>) -> bool {
    let (a, b) = (walk(a, s), walk(b, s));
    match (&a, &b) {
        (Term::Var(x), Term::Var(y)) if x == y => true,
        (Term::Var(x), _) => !occurs(*x, &b, s) && s.insert(*x, b.clone()).is_none(),
        (_, Term::Var(y)) => !occurs(*y, &a, s) && s.insert(*y, a.clone()).is_none(),
        (Term::Compound(p), Term::Compound(q)) => {
            p.functor == q.functor && p.args.len() == q.args.len() && p.args.iter().zip(&q.args).all(|(x, y)| reference_unify(x, y, s))
        }
        _ => a == b,
    }
}

/// The engine unifies exactly when the reference does, and its result
/// equals the reference's up to renaming of the remaining variables.
pub fn check_mgu(a: &Term, b: &Term) -> Result<(), String> {
    let mut s = HashMap::new();
    let expected = reference_unify(a, b, &mut s);
    let got = unify(a, b, &Substitution::new(), true);
    if got.is_some() != expected {
        return Err(format!("{a} = {b}: engine {}, reference {expected}", got.is_some()));
    }
    if let Some(sub) = got {
        let (ra, rb) = (sub.resolve(a), sub.resolve(b));
        if ra != rb {
            return Err(format!("{a} = {b}: sides differ after unification: {ra} vs {rb}"));
        }
        let want = apply(a, &s);
        if !ra.is_variant(&want) {
            return Err(format!("{a} = {b}: {ra} is not a variant of {want}"));
        }
    }
    Ok(())
}

fn answers(kb: &KnowledgeBase, goal: &str, var: &str) -> Result<Vec<String>, String> {
    Ok(solve_all(kb, goal, SolveBudget::default())
        .map_err(|e| format!("{goal}: {e}"))?
        .iter()
        .map(|a| a.get(var).unwrap().to_string())
        .collect())
}

/// `t(X, Y) :- p1(X), !, p2(X, Y)` yields the p2 rows of the first p1 fact
/// only, and the cut does not reach into a caller's own choices.
pub fn check_cut(p1: &[i64], p2: &[(i64, i64)]) -> Result<(), String> {
    let mut src = String::from(":- dynamic p1/1.\n:- dynamic p2/2.\n");
    for x in p1 {
        src.push_str(&format!("p1({x}).\n"));
    }
    for (x, y) in p2 {
        src.push_str(&format!("p2({x}, {y}).\n"));
    }
    src.push_str("t(X, Y) :- p1(X), !, p2(X, Y).\nv(X, Y) :- p1(X), t(_, Y).\n");
    let mut kb = KnowledgeBase::new();
    kb.consult(&src, Provenance::Program).map_err(|e| e.to_string())?;
    let expected: Vec<String> = match p1.first() {
        Some(first) => p2.iter().filter(|(x, _)| x == first).map(|(_, y)| y.to_string()).collect(),
        None => Vec::new(),
    };
    let got = answers(&kb, "t(X, Y)", "Y")?;
    if got != expected {
        return Err(format!("t/2 over p1={p1:?} p2={p2:?}: {got:?}, expected {expected:?}"));
    }
    let expected_v: Vec<String> = p1.iter().flat_map(|_| expected.clone()).collect();
    let got = answers(&kb, "v(X, Y)", "Y")?;
    if got != expected_v {
        return Err(format!("v/2 over p1={p1:?} p2={p2:?}: {got:?}, expected {expected_v:?}"));
    }
    Ok(())
}
