//! Deterministic and nondeterministic builtins implemented in Rust.
//!
//! Control constructs (`,`, `;`, `->`, `\+`, `call/N`, `findall/3`, cut) are
//! handled by the solver itself; everything else is looked up here. A
//! builtin returns `Ok(true)` to continue, `Ok(false)` to backtrack. A
//! nondeterministic builtin pushes its alternatives as a choice point and
//! returns `Ok(false)` so that the first alternative is taken by the normal
//! backtracking path.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::rc::Rc;

use super::arith::{self, Num};
use super::parser::read_goal;
use super::solve::{Alt, Cont, Machine, SolveError};
use super::term::{standard_order, PredKey, Term, VarId};
use super::write::{format_float, TermWriter};

pub(crate) type BuiltinFn = fn(&mut Machine<'_>, &[Term], &Cont) -> Result<bool, SolveError>;

type R = Result<bool, SolveError>;

const CONTROL: &[(&str, usize)] = &[
    ("true", 0),
    ("fail", 0),
    ("false", 0),
    ("!", 0),
    (",", 2),
    (";", 2),
    ("->", 2),
    ("\\+", 1),
    ("not", 1),
    ("findall", 3),
];

/// Whether `key` names a control construct or a Rust builtin.
pub fn is_builtin(key: &PredKey) -> bool {
    if &*key.name == "call" && (1..=8).contains(&key.arity) {
        return true;
    }
    CONTROL.iter().any(|(n, a)| *n == &*key.name && *a == key.arity) || lookup(key).is_some()
}

/// Indicators of every Rust builtin, for listings and the evaluator.
pub fn builtin_keys() -> Vec<PredKey> {
    let mut keys: Vec<PredKey> = CONTROL.iter().map(|(n, a)| PredKey::new(n, *a)).collect();
    keys.extend((1..=8).map(|a| PredKey::new("call", a)));
    keys.extend(TABLE.iter().map(|(n, a, _)| PredKey::new(n, *a)));
    keys
}

pub(crate) fn lookup(key: &PredKey) -> Option<BuiltinFn> {
    TABLE
        .iter()
        .find(|(n, a, _)| *n == &*key.name && *a == key.arity)
        .map(|(_, _, f)| *f)
}

const TABLE: &[(&str, usize, BuiltinFn)] = &[
    ("=", 2, unify2),
    ("\\=", 2, not_unify),
    ("==", 2, identical),
    ("\\==", 2, not_identical),
    ("@<", 2, |m, a, _| order_test(m, a, |o| o == Ordering::Less)),
    ("@>", 2, |m, a, _| order_test(m, a, |o| o == Ordering::Greater)),
    ("@=<", 2, |m, a, _| order_test(m, a, |o| o != Ordering::Greater)),
    ("@>=", 2, |m, a, _| order_test(m, a, |o| o != Ordering::Less)),
    ("compare", 3, compare3),
    ("is", 2, is2),
    ("=:=", 2, |m, a, _| num_test(m, a, |o| o == Ordering::Equal)),
    ("=\\=", 2, |m, a, _| num_test(m, a, |o| o != Ordering::Equal)),
    ("<", 2, |m, a, _| num_test(m, a, |o| o == Ordering::Less)),
    (">", 2, |m, a, _| num_test(m, a, |o| o == Ordering::Greater)),
    ("=<", 2, |m, a, _| num_test(m, a, |o| o != Ordering::Greater)),
    (">=", 2, |m, a, _| num_test(m, a, |o| o != Ordering::Less)),
    ("succ", 2, succ2),
    ("plus", 3, plus3),
    ("var", 1, |m, a, _| Ok(matches!(m.deref(&a[0]), Term::Var(_)))),
    ("nonvar", 1, |m, a, _| Ok(!matches!(m.deref(&a[0]), Term::Var(_)))),
    ("atom", 1, |m, a, _| Ok(matches!(m.deref(&a[0]), Term::Atom(_)))),
    ("number", 1, |m, a, _| Ok(m.deref(&a[0]).is_number())),
    ("integer", 1, |m, a, _| Ok(matches!(m.deref(&a[0]), Term::Int(_)))),
    ("float", 1, |m, a, _| Ok(matches!(m.deref(&a[0]), Term::Float(_)))),
    ("string", 1, |m, a, _| Ok(matches!(m.deref(&a[0]), Term::Str(_)))),
    ("atomic", 1, |m, a, _| {
        Ok(!matches!(m.deref(&a[0]), Term::Var(_) | Term::Compound(_)))
    }),
    ("compound", 1, |m, a, _| Ok(matches!(m.deref(&a[0]), Term::Compound(_)))),
    ("callable", 1, |m, a, _| Ok(m.deref(&a[0]).is_callable())),
    ("is_list", 1, |m, a, _| Ok(proper_list(m, &a[0]).is_some())),
    ("ground", 1, |m, a, _| Ok(m.resolve(&a[0]).is_ground())),
    ("functor", 3, functor3),
    ("arg", 3, arg3),
    ("=..", 2, univ),
    ("copy_term", 2, copy_term2),
    ("term_variables", 2, term_variables2),
    ("between", 3, between3),
    ("length", 2, length2),
    ("member", 2, member2),
    ("memberchk", 2, memberchk2),
    ("reverse", 2, reverse2),
    ("sort", 2, |m, a, _| {
        sort_generic(m, &a[0], &a[1], 0, Ordering::Less, true, "sort/2")
    }),
    ("msort", 2, |m, a, _| {
        sort_generic(m, &a[0], &a[1], 0, Ordering::Less, false, "msort/2")
    }),
    ("sort", 4, sort4),
    ("keysort", 2, keysort2),
    ("list_to_set", 2, list_to_set2),
    ("sum_list", 2, sum_list2),
    ("max_list", 2, |m, a, _| extreme_list(m, a, Ordering::Greater, "max_list/2")),
    ("min_list", 2, |m, a, _| extreme_list(m, a, Ordering::Less, "min_list/2")),
    ("current_op", 3, current_op3),
    ("current_predicate", 1, current_predicate1),
    ("atom_length", 2, |m, a, _| text_length(m, a, "atom_length/2")),
    ("string_length", 2, |m, a, _| text_length(m, a, "string_length/2")),
    ("atom_concat", 3, |m, a, k| concat3(m, a, k, false, "atom_concat/3")),
    ("string_concat", 3, |m, a, k| concat3(m, a, k, true, "string_concat/3")),
    ("atom_number", 2, atom_number2),
    ("number_string", 2, number_string2),
    ("atom_string", 2, atom_string2),
    ("atom_chars", 2, |m, a, _| chars2(m, a, false, false, "atom_chars/2")),
    ("atom_codes", 2, |m, a, _| chars2(m, a, false, true, "atom_codes/2")),
    ("string_chars", 2, |m, a, _| chars2(m, a, true, false, "string_chars/2")),
    ("string_codes", 2, |m, a, _| chars2(m, a, true, true, "string_codes/2")),
    ("char_code", 2, char_code2),
    ("string_to_atom", 2, string_to_atom2),
    ("number_codes", 2, number_codes2),
    ("upcase_atom", 2, |m, a, _| case_map(m, a, true, false, "upcase_atom/2")),
    ("downcase_atom", 2, |m, a, _| case_map(m, a, false, false, "downcase_atom/2")),
    ("string_upper", 2, |m, a, _| case_map(m, a, true, true, "string_upper/2")),
    ("string_lower", 2, |m, a, _| case_map(m, a, false, true, "string_lower/2")),
    ("sub_atom", 5, |m, a, k| sub_text(m, a, k, false, "sub_atom/5")),
    ("sub_string", 5, |m, a, k| sub_text(m, a, k, true, "sub_string/5")),
    ("split_string", 4, split_string4),
    ("term_to_atom", 2, |m, a, _| term_text(m, a, false, "term_to_atom/2")),
    ("term_string", 2, |m, a, _| term_text(m, a, true, "term_string/2")),
    ("atomic_list_concat", 2, atomic_list_concat2),
    ("atomic_list_concat", 3, atomic_list_concat3),
    ("format", 1, |m, a, _| format_out(m, &a[0], &Term::nil())),
    ("format", 2, |m, a, _| format_out(m, &a[0], &a[1])),
    ("format", 3, format3),
    ("write", 1, |m, a, _| write_out(m, &a[0], false, false)),
    ("print", 1, |m, a, _| write_out(m, &a[0], true, false)),
    ("writeq", 1, |m, a, _| write_out(m, &a[0], true, false)),
    ("write_canonical", 1, |m, a, _| write_out(m, &a[0], true, false)),
    ("writeln", 1, |m, a, _| write_out(m, &a[0], false, true)),
    ("nl", 0, |m, _, _| {
        m.output.push('\n');
        Ok(true)
    }),
    ("tab", 1, tab1),
    ("dynamic", 1, |_, _, _| Ok(true)),
];

fn inst(ctx: &str) -> SolveError {
    SolveError::Instantiation { context: ctx.into() }
}

fn type_err(ctx: &str, expected: &str, culprit: &Term) -> SolveError {
    SolveError::Type {
        context: ctx.into(),
        expected: expected.into(),
        culprit: culprit.to_string(),
    }
}

fn dom_err(ctx: &str, culprit: impl ToString) -> SolveError {
    SolveError::Domain {
        context: ctx.into(),
        culprit: culprit.to_string(),
    }
}

fn is_var(t: &Term) -> bool {
    matches!(t, Term::Var(_))
}

/// Items of a proper list (each dereferenced), or `None` for a partial or
/// non-list term.
fn proper_list(m: &Machine<'_>, t: &Term) -> Option<Vec<Term>> {
    let mut out = Vec::new();
    let mut cur = m.deref(t);
    loop {
        match cur.as_cons() {
            Some((h, tl)) => {
                out.push(m.deref(h));
                let next = m.deref(tl);
                cur = next;
            }
            None => return if cur.is_nil() { Some(out) } else { None },
        }
    }
}

/// Like `proper_list` but raises the conventional errors.
fn list_arg(m: &Machine<'_>, t: &Term, ctx: &str) -> Result<Vec<Term>, SolveError> {
    let mut out = Vec::new();
    let mut cur = m.deref(t);
    loop {
        match cur.as_cons() {
            Some((h, tl)) => {
                out.push(m.deref(h));
                let next = m.deref(tl);
                cur = next;
            }
            None if cur.is_nil() => return Ok(out),
            None if is_var(&cur) => return Err(inst(ctx)),
            None => return Err(type_err(ctx, "list", &m.resolve(t))),
        }
    }
}

fn int_arg(m: &Machine<'_>, t: &Term, ctx: &str) -> Result<i64, SolveError> {
    match m.deref(t) {
        Term::Int(i) => Ok(i),
        Term::Var(_) => Err(inst(ctx)),
        other => Err(type_err(ctx, "integer", &other)),
    }
}

/// Text of an atomic term (atom, string or number).
fn text_arg(m: &Machine<'_>, t: &Term, ctx: &str) -> Result<String, SolveError> {
    match m.deref(t) {
        Term::Atom(a) => Ok(a.to_string()),
        Term::Str(s) => Ok(s.to_string()),
        Term::Int(i) => Ok(i.to_string()),
        Term::Float(f) => Ok(format_float(f)),
        Term::Var(_) => Err(inst(ctx)),
        other => Err(type_err(ctx, "atomic", &m.resolve(&other))),
    }
}

fn make_text(s: &str, string: bool) -> Term {
    if string {
        Term::string(s)
    } else {
        Term::atom(s)
    }
}

/// Pushes a choice over `values` unified against `target`.
fn choose(m: &mut Machine<'_>, target: Term, values: Vec<Term>, next: &Cont) -> R {
    match values.len() {
        0 => Ok(false),
        1 => Ok(m.unify(&target, &values[0])),
        _ => {
            m.push_alt(Alt::Candidates {
                target,
                values: Rc::new(values),
                next: 0,
                cont: next.clone(),
            });
            Ok(false)
        }
    }
}

fn unify2(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    Ok(m.unify(&a[0], &a[1]))
}

fn not_unify(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let mark = m.store.mark();
    let ok = m.unify(&a[0], &a[1]);
    m.store.undo(mark);
    Ok(!ok)
}

fn identical(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    Ok(standard_order(&m.resolve(&a[0]), &m.resolve(&a[1])) == Ordering::Equal)
}

fn not_identical(m: &mut Machine<'_>, a: &[Term], k: &Cont) -> R {
    identical(m, a, k).map(|b| !b)
}

fn order_test(m: &mut Machine<'_>, a: &[Term], f: fn(Ordering) -> bool) -> R {
    Ok(f(standard_order(&m.resolve(&a[0]), &m.resolve(&a[1]))))
}

fn compare3(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let o = standard_order(&m.resolve(&a[1]), &m.resolve(&a[2]));
    let sym = match o {
        Ordering::Less => "<",
        Ordering::Equal => "=",
        Ordering::Greater => ">",
    };
    Ok(m.unify(&a[0], &Term::atom(sym)))
}

fn is2(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let v = arith::eval(&m.store, &a[1])?;
    Ok(m.unify(&a[0], &v.to_term()))
}

fn num_test(m: &mut Machine<'_>, a: &[Term], f: fn(Ordering) -> bool) -> R {
    let x = arith::eval(&m.store, &a[0])?;
    let y = arith::eval(&m.store, &a[1])?;
    if let (Num::Float(p), _) | (_, Num::Float(p)) = (x, y) {
        if p.is_nan() {
            return Ok(false);
        }
    }
    Ok(f(x.compare(y)))
}

fn succ2(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let ctx = "succ/2";
    match (m.deref(&a[0]), m.deref(&a[1])) {
        (Term::Int(x), _) => {
            if x < 0 {
                return Err(type_err(ctx, "not_less_than_zero", &Term::Int(x)));
            }
            let y = x.checked_add(1).ok_or_else(|| dom_err(ctx, "overflow"))?;
            Ok(m.unify(&a[1], &Term::Int(y)))
        }
        (Term::Var(_), Term::Int(y)) => {
            if y < 0 {
                return Err(type_err(ctx, "not_less_than_zero", &Term::Int(y)));
            }
            Ok(y > 0 && m.unify(&a[0], &Term::Int(y - 1)))
        }
        (Term::Var(_), Term::Var(_)) => Err(inst(ctx)),
        (Term::Var(_), other) | (other, _) => Err(type_err(ctx, "integer", &other)),
    }
}

fn plus3(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let ctx = "plus/3";
    let [x, y, z] = [&a[0], &a[1], &a[2]].map(|t| m.deref(t));
    let num = |t: &Term| match t {
        Term::Int(i) => Ok(Some(*i)),
        Term::Var(_) => Ok(None),
        other => Err(type_err(ctx, "integer", other)),
    };
    match (num(&x)?, num(&y)?, num(&z)?) {
        (Some(p), Some(q), _) => Ok(m.unify(&z, &Term::Int(p.checked_add(q).ok_or_else(|| dom_err(ctx, "overflow"))?))),
        (Some(p), None, Some(r)) => Ok(m.unify(&y, &Term::Int(r - p))),
        (None, Some(q), Some(r)) => Ok(m.unify(&x, &Term::Int(r - q))),
        _ => Err(inst(ctx)),
    }
}

fn functor3(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let ctx = "functor/3";
    let t = m.deref(&a[0]);
    match &t {
        Term::Var(_) => {
            let name = m.deref(&a[1]);
            let arity = int_arg(m, &a[2], ctx)?;
            if is_var(&name) {
                return Err(inst(ctx));
            }
            if arity < 0 {
                return Err(dom_err(ctx, arity));
            }
            let built = if arity == 0 {
                if matches!(name, Term::Compound(_)) {
                    return Err(type_err(ctx, "atomic", &name));
                }
                name
            } else {
                let Term::Atom(f) = &name else {
                    return Err(type_err(ctx, "atom", &name));
                };
                let base = m.store.alloc(arity as usize);
                Term::compound_arc(f.clone(), (0..arity as usize).map(|i| Term::Var(base + i)).collect())
            };
            Ok(m.unify(&t, &built))
        }
        Term::Compound(c) => {
            let f = Term::Atom(c.functor.clone());
            let n = Term::Int(c.args.len() as i64);
            Ok(m.unify(&a[1], &f) && m.unify(&a[2], &n))
        }
        atomic => Ok(m.unify(&a[1], atomic) && m.unify(&a[2], &Term::Int(0))),
    }
}

fn arg3(m: &mut Machine<'_>, a: &[Term], k: &Cont) -> R {
    let ctx = "arg/3";
    let t = m.deref(&a[1]);
    let Term::Compound(c) = &t else {
        return if is_var(&t) {
            Err(inst(ctx))
        } else {
            Err(type_err(ctx, "compound", &t))
        };
    };
    match m.deref(&a[0]) {
        Term::Int(n) => {
            if n < 1 || n as usize > c.args.len() {
                return Ok(false);
            }
            Ok(m.unify(&a[2], &c.args[n as usize - 1]))
        }
        Term::Var(_) => {
            let target = Term::compound("-", vec![a[0].clone(), a[2].clone()]);
            let values = c
                .args
                .iter()
                .enumerate()
                .map(|(i, x)| Term::compound("-", vec![Term::Int(i as i64 + 1), x.clone()]))
                .collect();
            choose(m, target, values, k)
        }
        other => Err(type_err(ctx, "integer", &other)),
    }
}

fn univ(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let ctx = "=../2";
    let t = m.deref(&a[0]);
    match &t {
        Term::Var(_) => {
            let items = list_arg(m, &a[1], ctx)?;
            let Some((head, rest)) = items.split_first() else {
                return Err(dom_err(ctx, "[]"));
            };
            let built = if rest.is_empty() {
                if matches!(head, Term::Compound(_)) {
                    return Err(type_err(ctx, "atomic", head));
                }
                if is_var(head) {
                    return Err(inst(ctx));
                }
                head.clone()
            } else {
                match head {
                    Term::Atom(f) => Term::compound_arc(f.clone(), rest.to_vec()),
                    Term::Var(_) => return Err(inst(ctx)),
                    other => return Err(type_err(ctx, "atom", other)),
                }
            };
            Ok(m.unify(&t, &built))
        }
        Term::Compound(c) => {
            let list = Term::list(std::iter::once(Term::Atom(c.functor.clone())).chain(c.args.iter().cloned()));
            Ok(m.unify(&a[1], &list))
        }
        atomic => {
            let list = Term::list([atomic.clone()]);
            Ok(m.unify(&a[1], &list))
        }
    }
}

fn copy_term2(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let t = m.resolve(&a[0]);
    let mut fresh: HashMap<VarId, Term> = HashMap::new();
    let store = &mut m.store;
    let copy = t.map_vars(&mut |v| fresh.entry(v).or_insert_with(|| store.fresh()).clone());
    Ok(m.unify(&a[1], &copy))
}

fn term_variables2(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let t = m.resolve(&a[0]);
    let vars = Term::list(t.variables().into_iter().map(Term::Var));
    Ok(m.unify(&a[1], &vars))
}

fn between3(m: &mut Machine<'_>, a: &[Term], k: &Cont) -> R {
    let ctx = "between/3";
    let low = int_arg(m, &a[0], ctx)?;
    let high = match m.deref(&a[1]) {
        Term::Int(h) => Some(h),
        Term::Atom(x) if matches!(&*x, "inf" | "infinite") => None,
        Term::Var(_) => return Err(inst(ctx)),
        other => return Err(type_err(ctx, "integer", &other)),
    };
    match m.deref(&a[2]) {
        Term::Int(x) => Ok(x >= low && high.is_none_or(|h| x <= h)),
        Term::Var(_) => {
            if high.is_some_and(|h| low > h) {
                return Ok(false);
            }
            if high == Some(low) {
                return Ok(m.unify(&a[2], &Term::Int(low)));
            }
            m.push_alt(Alt::Between {
                target: a[2].clone(),
                next: low,
                high,
                cont: k.clone(),
            });
            Ok(false)
        }
        other => Err(type_err(ctx, "integer", &other)),
    }
}

fn length2(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let ctx = "length/2";
    let mut n = 0i64;
    let mut cur = m.deref(&a[0]);
    while let Some((_, tl)) = cur.as_cons() {
        n += 1;
        let next = m.deref(tl);
        cur = next;
    }
    if cur.is_nil() {
        return Ok(m.unify(&a[1], &Term::Int(n)));
    }
    if !is_var(&cur) {
        return Err(type_err(ctx, "list", &m.resolve(&a[0])));
    }
    match m.deref(&a[1]) {
        Term::Int(want) => {
            if want < n {
                return Ok(false);
            }
            let extra = (want - n) as usize;
            let base = m.store.alloc(extra);
            let tail = Term::list((0..extra).map(|i| Term::Var(base + i)));
            Ok(m.unify(&cur, &tail))
        }
        Term::Var(_) => Err(inst(ctx)),
        other => Err(type_err(ctx, "integer", &other)),
    }
}

fn member2(m: &mut Machine<'_>, a: &[Term], k: &Cont) -> R {
    let list = m.deref(&a[1]);
    if list.as_cons().is_none() {
        return Ok(false);
    }
    m.push_alt(Alt::Members {
        elem: a[0].clone(),
        rest: list,
        cont: k.clone(),
    });
    Ok(false)
}

fn memberchk2(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let mut cur = m.deref(&a[1]);
    loop {
        let (h, t) = match cur.as_cons() {
            Some((h, t)) => (h.clone(), t.clone()),
            None => return Ok(false),
        };
        let mark = m.store.mark();
        if m.unify(&a[0], &h) {
            return Ok(true);
        }
        m.store.undo(mark);
        cur = m.deref(&t);
    }
}

fn reverse2(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let mut items = list_arg(m, &a[0], "reverse/2")?;
    items.reverse();
    Ok(m.unify(&a[1], &Term::list(items)))
}

fn resolved_items(m: &Machine<'_>, t: &Term, ctx: &str) -> Result<Vec<Term>, SolveError> {
    Ok(list_arg(m, t, ctx)?.iter().map(|x| m.resolve(x)).collect())
}

fn sort_key(t: &Term, key: usize, ctx: &str) -> Result<Term, SolveError> {
    if key == 0 {
        return Ok(t.clone());
    }
    match t {
        Term::Compound(c) if key <= c.args.len() => Ok(c.args[key - 1].clone()),
        Term::Var(_) => Err(inst(ctx)),
        other => Err(type_err(ctx, "compound", other)),
    }
}

fn sort_generic(m: &mut Machine<'_>, input: &Term, out: &Term, key: usize, dir: Ordering, dedup: bool, ctx: &str) -> R {
    let items = resolved_items(m, input, ctx)?;
    let mut keyed = Vec::with_capacity(items.len());
    for t in items {
        keyed.push((sort_key(&t, key, ctx)?, t));
    }
    keyed.sort_by(|x, y| {
        let o = standard_order(&x.0, &y.0);
        if dir == Ordering::Less {
            o
        } else {
            o.reverse()
        }
    });
    if dedup {
        keyed.dedup_by(|x, y| standard_order(&x.0, &y.0) == Ordering::Equal);
    }
    Ok(m.unify(out, &Term::list(keyed.into_iter().map(|(_, t)| t))))
}

fn sort4(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let ctx = "sort/4";
    let key = int_arg(m, &a[0], ctx)?;
    if key < 0 {
        return Err(dom_err(ctx, key));
    }
    let (dir, dedup) = match m.deref(&a[1]) {
        Term::Atom(o) => match &*o {
            "@<" => (Ordering::Less, true),
            "@=<" => (Ordering::Less, false),
            "@>" => (Ordering::Greater, true),
            "@>=" => (Ordering::Greater, false),
            _ => return Err(dom_err(ctx, o)),
        },
        Term::Var(_) => return Err(inst(ctx)),
        other => return Err(type_err(ctx, "atom", &other)),
    };
    sort_generic(m, &a[2], &a[3], key as usize, dir, dedup, ctx)
}

fn keysort2(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let ctx = "keysort/2";
    let items = resolved_items(m, &a[0], ctx)?;
    for t in &items {
        match t {
            Term::Compound(c) if &*c.functor == "-" && c.args.len() == 2 => {}
            Term::Var(_) => return Err(inst(ctx)),
            other => return Err(type_err(ctx, "pair", other)),
        }
    }
    let mut items = items;
    items.sort_by(|x, y| standard_order(&x.args()[0], &y.args()[0]));
    Ok(m.unify(&a[1], &Term::list(items)))
}

fn list_to_set2(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let items = resolved_items(m, &a[0], "list_to_set/2")?;
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.sort_by(|&x, &y| standard_order(&items[x], &items[y]).then(x.cmp(&y)));
    let mut keep = vec![false; items.len()];
    for (pos, &i) in idx.iter().enumerate() {
        if pos == 0 || standard_order(&items[idx[pos - 1]], &items[i]) != Ordering::Equal {
            keep[i] = true;
        }
    }
    let out = items.into_iter().zip(keep).filter(|(_, k)| *k).map(|(t, _)| t);
    Ok(m.unify(&a[1], &Term::list(out)))
}

fn add_num(x: Num, y: Num) -> Result<Num, SolveError> {
    match (x, y) {
        (Num::Int(p), Num::Int(q)) => p.checked_add(q).map(Num::Int).ok_or_else(|| SolveError::Evaluation {
            context: "sum_list/2".into(),
            reason: "integer overflow".into(),
        }),
        _ => Ok(Num::Float(x.as_f64() + y.as_f64())),
    }
}

fn sum_list2(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let items = list_arg(m, &a[0], "sum_list/2")?;
    let mut acc = Num::Int(0);
    for t in &items {
        acc = add_num(acc, arith::eval(&m.store, t)?)?;
    }
    Ok(m.unify(&a[1], &acc.to_term()))
}

fn extreme_list(m: &mut Machine<'_>, a: &[Term], want: Ordering, ctx: &str) -> R {
    let items = list_arg(m, &a[0], ctx)?;
    let mut best: Option<Num> = None;
    for t in &items {
        let v = arith::eval(&m.store, t)?;
        if best.is_none_or(|b| v.compare(b) == want) {
            best = Some(v);
        }
    }
    match best {
        Some(b) => Ok(m.unify(&a[1], &b.to_term())),
        None => Ok(false),
    }
}

fn current_op3(m: &mut Machine<'_>, a: &[Term], k: &Cont) -> R {
    let target = Term::compound("op", a.to_vec());
    let values =
        m.kb.ops()
            .iter()
            .map(|o| {
                Term::compound(
                    "op",
                    vec![Term::Int(o.precedence as i64), Term::atom(o.kind.as_str()), Term::atom(&o.name)],
                )
            })
            .collect();
    choose(m, target, values, k)
}

fn current_predicate1(m: &mut Machine<'_>, a: &[Term], k: &Cont) -> R {
    let ctx = "current_predicate/1";
    let spec = m.deref(&a[0]);
    match &spec {
        Term::Var(_) => {}
        Term::Compound(c) if &*c.functor == "/" && c.args.len() == 2 => {}
        other => return Err(type_err(ctx, "predicate_indicator", other)),
    }
    let kb = m.kb;
    let mut keys: Vec<&PredKey> = kb.user_predicates().collect();
    let mut foreign: Vec<&PredKey> = kb.foreign_keys().collect();
    foreign.sort();
    keys.extend(foreign);
    let values = keys
        .into_iter()
        .filter(|k| kb.predicate(k).is_none_or(|p| !p.clauses.is_empty() || p.dynamic))
        .map(PredKey::to_term)
        .collect();
    choose(m, spec, values, k)
}

fn text_length(m: &mut Machine<'_>, a: &[Term], ctx: &str) -> R {
    let s = text_arg(m, &a[0], ctx)?;
    Ok(m.unify(&a[1], &Term::Int(s.chars().count() as i64)))
}

fn concat3(m: &mut Machine<'_>, a: &[Term], k: &Cont, string: bool, ctx: &str) -> R {
    let (x, y) = (m.deref(&a[0]), m.deref(&a[1]));
    if !is_var(&x) && !is_var(&y) {
        let s = text_arg(m, &x, ctx)? + &text_arg(m, &y, ctx)?;
        return Ok(m.unify(&a[2], &make_text(&s, string)));
    }
    let whole = text_arg(m, &a[2], ctx)?;
    let target = Term::compound("-", vec![x, y]);
    let values = whole
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(whole.len()))
        .map(|i| Term::compound("-", vec![make_text(&whole[..i], string), make_text(&whole[i..], string)]))
        .collect();
    choose(m, target, values, k)
}

fn parse_number(s: &str) -> Option<Term> {
    let t = s.trim();
    if let Ok(i) = t.parse::<i64>() {
        return Some(Term::Int(i));
    }
    let body = t.strip_prefix(['-', '+']).unwrap_or(t);
    if body.starts_with(|c: char| c.is_ascii_digit()) {
        if let Ok(f) = t.parse::<f64>() {
            return Some(Term::Float(f));
        }
    }
    None
}

fn atom_number2(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let ctx = "atom_number/2";
    match m.deref(&a[0]) {
        Term::Var(_) => match m.deref(&a[1]) {
            Term::Var(_) => Err(inst(ctx)),
            n @ (Term::Int(_) | Term::Float(_)) => {
                let s = text_arg(m, &n, ctx)?;
                Ok(m.unify(&a[0], &Term::atom(&s)))
            }
            other => Err(type_err(ctx, "number", &other)),
        },
        Term::Atom(s) => match parse_number(&s) {
            Some(n) => Ok(m.unify(&a[1], &n)),
            None => Ok(false),
        },
        other => Err(type_err(ctx, "atom", &other)),
    }
}

fn number_string2(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let ctx = "number_string/2";
    match m.deref(&a[1]) {
        Term::Var(_) => {
            let s = text_arg(m, &a[0], ctx)?;
            Ok(m.unify(&a[1], &Term::string(&s)))
        }
        s => {
            let s = text_arg(m, &s, ctx)?;
            match parse_number(&s) {
                Some(n) => Ok(m.unify(&a[0], &n)),
                None => Err(SolveError::Syntax(super::parser::SyntaxError {
                    message: format!("illegal number {s:?}"),
                    offset: 0,
                    line: 1,
                    column: 1,
                })),
            }
        }
    }
}

fn atom_string2(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let ctx = "atom_string/2";
    if !is_var(&m.deref(&a[0])) {
        let s = text_arg(m, &a[0], ctx)?;
        return Ok(m.unify(&a[1], &Term::string(&s)));
    }
    let s = text_arg(m, &a[1], ctx)?;
    Ok(m.unify(&a[0], &Term::atom(&s)))
}

fn string_to_atom2(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let ctx = "string_to_atom/2";
    if !is_var(&m.deref(&a[0])) {
        let s = text_arg(m, &a[0], ctx)?;
        return Ok(m.unify(&a[1], &Term::atom(&s)));
    }
    let s = text_arg(m, &a[1], ctx)?;
    Ok(m.unify(&a[0], &Term::string(&s)))
}

fn char_of(t: &Term, codes: bool, ctx: &str) -> Result<char, SolveError> {
    match (t, codes) {
        (Term::Atom(s), false) if s.chars().count() == 1 => Ok(s.chars().next().unwrap()),
        (Term::Int(c), true) => u32::try_from(*c)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| type_err(ctx, "character_code", t)),
        (Term::Var(_), _) => Err(inst(ctx)),
        (other, false) => Err(type_err(ctx, "character", other)),
        (other, true) => Err(type_err(ctx, "character_code", other)),
    }
}

fn chars2(m: &mut Machine<'_>, a: &[Term], string: bool, codes: bool, ctx: &str) -> R {
    if !is_var(&m.deref(&a[0])) {
        let s = text_arg(m, &a[0], ctx)?;
        let list = Term::list(s.chars().map(|c| {
            if codes {
                Term::Int(c as i64)
            } else {
                Term::atom(c.encode_utf8(&mut [0; 4]))
            }
        }));
        return Ok(m.unify(&a[1], &list));
    }
    let items = list_arg(m, &a[1], ctx)?;
    let mut s = String::new();
    for t in &items {
        s.push(char_of(t, codes, ctx)?);
    }
    Ok(m.unify(&a[0], &make_text(&s, string)))
}

fn number_codes2(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let ctx = "number_codes/2";
    if !is_var(&m.deref(&a[0])) {
        let s = text_arg(m, &a[0], ctx)?;
        return Ok(m.unify(&a[1], &Term::list(s.chars().map(|c| Term::Int(c as i64)))));
    }
    let items = list_arg(m, &a[1], ctx)?;
    let mut s = String::new();
    for t in &items {
        s.push(char_of(t, true, ctx)?);
    }
    match parse_number(&s) {
        Some(n) => Ok(m.unify(&a[0], &n)),
        None => Err(dom_err(ctx, s)),
    }
}

fn char_code2(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let ctx = "char_code/2";
    match m.deref(&a[0]) {
        Term::Var(_) => {
            let c = char_of(&m.deref(&a[1]), true, ctx)?;
            Ok(m.unify(&a[0], &Term::atom(c.encode_utf8(&mut [0; 4]))))
        }
        t => {
            let c = char_of(&t, false, ctx)?;
            Ok(m.unify(&a[1], &Term::Int(c as i64)))
        }
    }
}

fn case_map(m: &mut Machine<'_>, a: &[Term], upper: bool, string: bool, ctx: &str) -> R {
    let s = text_arg(m, &a[0], ctx)?;
    let mapped = if upper { s.to_uppercase() } else { s.to_lowercase() };
    Ok(m.unify(&a[1], &make_text(&mapped, string)))
}

fn sub_text(m: &mut Machine<'_>, a: &[Term], k: &Cont, string: bool, ctx: &str) -> R {
    let whole: Vec<char> = text_arg(m, &a[0], ctx)?.chars().collect();
    let n = whole.len() as i64;
    let bound = |m: &Machine<'_>, t: &Term| -> Result<Option<i64>, SolveError> {
        match m.deref(t) {
            Term::Var(_) => Ok(None),
            Term::Int(i) => Ok(Some(i)),
            other => Err(type_err(ctx, "integer", &other)),
        }
    };
    let (b, l, after) = (bound(m, &a[1])?, bound(m, &a[2])?, bound(m, &a[3])?);
    let sub = m.deref(&a[4]);
    let target = Term::compound("s", vec![a[1].clone(), a[2].clone(), a[3].clone(), a[4].clone()]);
    let mut values = Vec::new();
    let emit = |values: &mut Vec<Term>, bi: i64, li: i64| {
        let s: String = whole[bi as usize..(bi + li) as usize].iter().collect();
        values.push(Term::compound(
            "s",
            vec![Term::Int(bi), Term::Int(li), Term::Int(n - bi - li), make_text(&s, string)],
        ));
    };
    if !is_var(&sub) {
        let needle: Vec<char> = text_arg(m, &sub, ctx)?.chars().collect();
        let li = needle.len() as i64;
        for bi in 0..=(n - li).max(-1) {
            if whole[bi as usize..(bi + li) as usize] == needle[..] && b.is_none_or(|x| x == bi) && after.is_none_or(|x| x == n - bi - li) {
                emit(&mut values, bi, li);
            }
        }
    } else {
        for bi in 0..=n {
            if b.is_some_and(|x| x != bi) {
                continue;
            }
            for li in 0..=(n - bi) {
                if l.is_some_and(|x| x != li) || after.is_some_and(|x| x != n - bi - li) {
                    continue;
                }
                emit(&mut values, bi, li);
            }
        }
    }
    choose(m, target, values, k)
}

fn split_string4(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let ctx = "split_string/4";
    let s = text_arg(m, &a[0], ctx)?;
    let seps: Vec<char> = text_arg(m, &a[1], ctx)?.chars().collect();
    let pad: Vec<char> = text_arg(m, &a[2], ctx)?.chars().collect();
    let fields: Vec<&str> = if seps.is_empty() {
        vec![s.as_str()]
    } else {
        s.split(|c| seps.contains(&c)).collect()
    };
    let out = fields.into_iter().map(|f| Term::string(f.trim_matches(|c| pad.contains(&c))));
    Ok(m.unify(&a[3], &Term::list(out)))
}

fn term_text(m: &mut Machine<'_>, a: &[Term], string: bool, ctx: &str) -> R {
    let t = m.deref(&a[0]);
    if !is_var(&t) {
        let text = TermWriter::new(m.kb.ops()).to_string(&m.resolve(&t));
        return Ok(m.unify(&a[1], &make_text(&text, string)));
    }
    let text = text_arg(m, &a[1], ctx)?;
    let r = read_goal(&text, m.kb.ops())?;
    let base = m.store.alloc(r.var_count);
    let parsed = r.term.offset_vars(base);
    Ok(m.unify(&a[0], &parsed))
}

fn join_atomic(m: &Machine<'_>, items: &[Term], sep: &str, ctx: &str) -> Result<String, SolveError> {
    let mut parts = Vec::with_capacity(items.len());
    for t in items {
        parts.push(text_arg(m, t, ctx)?);
    }
    Ok(parts.join(sep))
}

fn atomic_list_concat2(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let ctx = "atomic_list_concat/2";
    let items = list_arg(m, &a[0], ctx)?;
    let s = join_atomic(m, &items, "", ctx)?;
    Ok(m.unify(&a[1], &Term::atom(&s)))
}

fn atomic_list_concat3(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let ctx = "atomic_list_concat/3";
    let sep = text_arg(m, &a[1], ctx)?;
    if let Some(items) = proper_list(m, &a[0]) {
        if items.iter().all(|t| !is_var(t)) {
            let s = join_atomic(m, &items, &sep, ctx)?;
            return Ok(m.unify(&a[2], &Term::atom(&s)));
        }
    }
    if sep.is_empty() {
        return Err(dom_err(ctx, "non_empty_atom"));
    }
    let whole = text_arg(m, &a[2], ctx)?;
    let parts = Term::list(whole.split(sep.as_str()).map(Term::atom));
    Ok(m.unify(&a[0], &parts))
}

fn write_out(m: &mut Machine<'_>, t: &Term, quoted: bool, newline: bool) -> R {
    let t = m.resolve(t);
    let mut w = TermWriter::new(m.kb.ops());
    w.quoted = quoted;
    let text = w.to_string(&t);
    m.output.push_str(&text);
    if newline {
        m.output.push('\n');
    }
    Ok(true)
}

fn tab1(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let n = arith::eval(&m.store, &a[0])?;
    let Num::Int(n) = n else {
        return Err(type_err("tab/1", "integer", &n.to_term()));
    };
    m.output.extend(std::iter::repeat_n(' ', n.max(0) as usize));
    Ok(true)
}

fn format_out(m: &mut Machine<'_>, f: &Term, args: &Term) -> R {
    let text = format_text(m, f, args)?;
    m.output.push_str(&text);
    Ok(true)
}

fn format3(m: &mut Machine<'_>, a: &[Term], _: &Cont) -> R {
    let ctx = "format/3";
    let text = format_text(m, &a[1], &a[2])?;
    let sink = m.deref(&a[0]);
    let Term::Compound(c) = &sink else {
        return if is_var(&sink) { Err(inst(ctx)) } else { Err(dom_err(ctx, sink)) };
    };
    if c.args.len() != 1 {
        return Err(dom_err(ctx, sink.clone()));
    }
    let value = match &*c.functor {
        "atom" => Term::atom(&text),
        "string" => Term::string(&text),
        "codes" => Term::list(text.chars().map(|ch| Term::Int(ch as i64))),
        "chars" => Term::list(text.chars().map(|ch| Term::atom(ch.encode_utf8(&mut [0; 4])))),
        _ => return Err(dom_err(ctx, sink.clone())),
    };
    Ok(m.unify(&c.args[0], &value))
}

/// Column bookkeeping for `~t`, `~|` and `~+`.
struct Columns {
    line_start: usize,
    last_stop: usize,
    fill: Option<(usize, char)>,
}

impl Columns {
    fn column(&self, out: &str) -> usize {
        out[self.line_start..].chars().count()
    }

    fn stop(&mut self, out: &mut String, target: usize) {
        let col = self.column(out);
        if col < target {
            let (pos, ch) = self.fill.unwrap_or((out.len(), ' '));
            let pad: String = std::iter::repeat_n(ch, target - col).collect();
            out.insert_str(pos, &pad);
        }
        self.last_stop = target.max(col);
        self.fill = None;
    }
}

fn format_text(m: &mut Machine<'_>, f: &Term, args: &Term) -> Result<String, SolveError> {
    let ctx = "format/2";
    let fmt = match m.deref(f) {
        Term::Var(_) => return Err(inst(ctx)),
        t @ Term::Compound(_) => {
            let codes = list_arg(m, &t, ctx)?;
            let mut s = String::new();
            for c in &codes {
                s.push(char_of(c, true, ctx)?);
            }
            s
        }
        t => text_arg(m, &t, ctx)?,
    };
    let args = m.resolve(args);
    let mut queue: std::collections::VecDeque<Term> = match args.list_items() {
        Some(items) => items.into(),
        None => vec![args].into(),
    };
    let mut next_arg = |what: char| {
        queue.pop_front().ok_or_else(|| SolveError::Domain {
            context: ctx.into(),
            culprit: format!("not enough arguments for ~{what}"),
        })
    };
    let mut out = String::new();
    let mut cols = Columns {
        line_start: 0,
        last_stop: 0,
        fill: None,
    };
    let mut chars = fmt.chars().peekable();
    let plain = TermWriter {
        ops: m.kb.ops(),
        quoted: false,
        var_names: None,
    };
    let quoted = TermWriter {
        ops: m.kb.ops(),
        quoted: true,
        var_names: None,
    };
    while let Some(c) = chars.next() {
        if c != '~' {
            out.push(c);
            if c == '\n' {
                cols.line_start = out.len();
                cols.last_stop = 0;
                cols.fill = None;
            }
            continue;
        }
        let mut num: Option<usize> = None;
        let mut fill_char = None;
        if chars.peek() == Some(&'`') {
            chars.next();
            fill_char = chars.next();
        } else if chars.peek() == Some(&'*') {
            chars.next();
            let n = next_arg('*')?;
            let Term::Int(n) = n else {
                return Err(type_err(ctx, "integer", &n));
            };
            num = Some(n.max(0) as usize);
        } else {
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            if !digits.is_empty() {
                num = digits.parse().ok();
            }
        }
        let Some(d) = chars.next() else {
            return Err(dom_err(ctx, "truncated format directive"));
        };
        match d {
            '~' => out.push('~'),
            'w' => out.push_str(&plain.to_string(&next_arg('w')?)),
            'p' | 'q' => out.push_str(&quoted.to_string(&next_arg(d)?)),
            'a' => {
                let t = next_arg('a')?;
                match &t {
                    Term::Atom(_) | Term::Str(_) | Term::Int(_) | Term::Float(_) => out.push_str(&plain.to_string(&t)),
                    Term::Var(_) => return Err(inst(ctx)),
                    other => return Err(type_err(ctx, "atomic", other)),
                }
            }
            'd' | 'D' => {
                let t = next_arg(d)?;
                let Term::Int(i) = t else {
                    return Err(type_err(ctx, "integer", &t));
                };
                out.push_str(&format_int(i, num.unwrap_or(0), d == 'D'));
            }
            'f' | 'e' | 'g' => {
                let t = next_arg(d)?;
                let v = match &t {
                    Term::Int(i) => *i as f64,
                    Term::Float(x) => *x,
                    Term::Var(_) => return Err(inst(ctx)),
                    other => arith::eval(&super::subst::Substitution::new(), other)?.as_f64(),
                };
                let prec = num.unwrap_or(6);
                out.push_str(&match d {
                    'f' => format!("{v:.prec$}"),
                    'e' => c_exp(v, prec),
                    _ => format!("{v}"),
                });
            }
            's' => {
                let t = next_arg('s')?;
                match &t {
                    Term::Str(s) => out.push_str(s),
                    other => match other.list_items() {
                        Some(items) => {
                            for i in &items {
                                out.push(char_of(i, true, ctx)?);
                            }
                        }
                        None => return Err(type_err(ctx, "text", other)),
                    },
                }
            }
            'c' => {
                let t = next_arg('c')?;
                let ch = char_of(&t, true, ctx)?;
                for _ in 0..num.unwrap_or(1) {
                    out.push(ch);
                }
            }
            'r' => {
                let t = next_arg('r')?;
                let Term::Int(i) = t else {
                    return Err(type_err(ctx, "integer", &t));
                };
                let radix = num.unwrap_or(8).clamp(2, 36) as u32;
                out.push_str(&to_radix(i, radix));
            }
            'n' => {
                for _ in 0..num.unwrap_or(1) {
                    out.push('\n');
                }
                cols.line_start = out.len();
                cols.last_stop = 0;
                cols.fill = None;
            }
            'i' => {
                next_arg('i')?;
            }
            't' => cols.fill = Some((out.len(), fill_char.unwrap_or(' '))),
            '|' => {
                let target = num.unwrap_or_else(|| cols.column(&out));
                cols.stop(&mut out, target);
            }
            '+' => {
                let target = cols.last_stop + num.unwrap_or(8);
                cols.stop(&mut out, target);
            }
            other => return Err(dom_err(ctx, format!("unknown directive ~{other}"))),
        }
    }
    if !queue.is_empty() {
        return Err(dom_err(ctx, "too many arguments"));
    }
    Ok(out)
}

fn format_int(i: i64, decimals: usize, group: bool) -> String {
    let neg = i < 0;
    let digits = i.unsigned_abs().to_string();
    let (int_part, frac) = if decimals > 0 {
        let padded = format!("{digits:0>width$}", width = decimals + 1);
        let split = padded.len() - decimals;
        (padded[..split].to_string(), Some(padded[split..].to_string()))
    } else {
        (digits, None)
    };
    let int_part = if group {
        let mut g = String::new();
        for (n, ch) in int_part.chars().enumerate() {
            if n > 0 && (int_part.len() - n) % 3 == 0 {
                g.push(',');
            }
            g.push(ch);
        }
        g
    } else {
        int_part
    };
    let mut s = String::new();
    if neg {
        s.push('-');
    }
    s.push_str(&int_part);
    if let Some(f) = frac {
        s.push('.');
        s.push_str(&f);
    }
    s
}

fn c_exp(v: f64, prec: usize) -> String {
    let s = format!("{v:.prec$e}");
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let e: i32 = exp.parse().unwrap_or(0);
            let sign = if e < 0 { '-' } else { '+' };
            format!("{mantissa}e{sign}{:02}", e.abs())
        }
        None => s,
    }
}

fn to_radix(i: i64, radix: u32) -> String {
    let neg = i < 0;
    let mut n = i.unsigned_abs();
    if n == 0 {
        return "0".into();
    }
    let mut digits = Vec::new();
    while n > 0 {
        digits.push(std::char::from_digit((n % radix as u64) as u32, radix).unwrap());
        n /= radix as u64;
    }
    if neg {
        digits.push('-');
    }
    digits.iter().rev().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::kb::{KnowledgeBase, Provenance};
    use crate::logic::solve::{solve, solve_all, Query, SolveBudget};

    fn first(kb: &KnowledgeBase, q: &str, var: &str) -> String {
        let a = solve_all(kb, q, SolveBudget::default()).unwrap();
        a[0].get(var).unwrap().to_string()
    }

    fn all(kb: &KnowledgeBase, q: &str, var: &str) -> Vec<String> {
        solve_all(kb, q, SolveBudget::default())
            .unwrap()
            .iter()
            .map(|a| a.get(var).unwrap().to_string())
            .collect()
    }

    #[test]
    fn sorting() {
        let kb = KnowledgeBase::new();
        assert_eq!(
            first(&kb, "sort([c, a, b, a, 1, f(x), \"s\"], L)", "L"),
            "[1, a, b, c, \"s\", f(x)]"
        );
        assert_eq!(first(&kb, "msort([b, a, b], L)", "L"), "[a, b, b]");
        assert_eq!(first(&kb, "sort(0, @>=, [1, 3, 2, 3], L)", "L"), "[3, 3, 2, 1]");
        assert_eq!(first(&kb, "sort(2, @<, [f(a, 2), f(b, 1)], L)", "L"), "[f(b, 1), f(a, 2)]");
        assert_eq!(first(&kb, "keysort([b-1, a-2, b-0], L)", "L"), "[a-2, b-1, b-0]");
        assert_eq!(first(&kb, "list_to_set([a, b, a, 1, 1.0], L)", "L"), "[a, b, 1, 1.0]");
    }

    #[test]
    fn nondeterministic_builtins() {
        let kb = KnowledgeBase::new();
        assert_eq!(all(&kb, "between(1, 3, X)", "X"), vec!["1", "2", "3"]);
        assert_eq!(all(&kb, "member(X, [a, b])", "X"), vec!["a", "b"]);
        assert_eq!(all(&kb, "atom_concat(X, Y, ab)", "X"), vec!["''", "a", "ab"]);
        assert_eq!(all(&kb, "arg(N, f(a, b), _)", "N"), vec!["1", "2"]);
        assert_eq!(all(&kb, "sub_atom(banana, B, _, _, ana)", "B"), vec!["1", "3"]);
    }

    #[test]
    fn current_op_enumerates_table() {
        let kb = KnowledgeBase::new();
        assert_eq!(all(&kb, "current_op(P, T, is)", "P"), vec!["700"]);
        let n = solve_all(&kb, "current_op(_, _, _)", SolveBudget::default()).unwrap().len();
        assert_eq!(n, kb.ops().iter().count());
    }

    #[test]
    fn current_predicate_sees_user_code() {
        let mut kb = KnowledgeBase::new();
        kb.consult("country(gb). country(us).", Provenance::Program).unwrap();
        assert_eq!(all(&kb, "current_predicate(country/A)", "A"), vec!["1"]);
        assert!(solve_all(&kb, "current_predicate(nope/_)", SolveBudget::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn text_builtins() {
        let kb = KnowledgeBase::new();
        assert_eq!(first(&kb, "atom_length(hello, N)", "N"), "5");
        assert_eq!(first(&kb, "atom_number('3.5', N)", "N"), "3.5");
        assert_eq!(first(&kb, "upcase_atom(gb, U)", "U"), "'GB'");
        assert_eq!(first(&kb, "atomic_list_concat([a, 1, b], '-', A)", "A"), "'a-1-b'");
        assert_eq!(first(&kb, "atomic_list_concat(L, ',', 'x,y')", "L"), "[x, y]");
        assert_eq!(first(&kb, "term_to_atom(f(a, 'A'), A)", "A"), "'f(a, \\'A\\')'");
        assert_eq!(first(&kb, "term_to_atom(T, 'g(1, b)')", "T"), "g(1, b)");
        assert_eq!(
            first(&kb, "split_string(\"a, b,c\", \",\", \" \", L)", "L"),
            "[\"a\", \"b\", \"c\"]"
        );
        assert_eq!(
            first(&kb, "format(atom(A), \"~w has ~d rows (~2f)~n\", [t, 3, 0.5])", "A"),
            "'t has 3 rows (0.50)\\n'"
        );
        assert_eq!(first(&kb, "format(atom(A), \"~a~t~6|~w\", [ab, x])", "A"), "'ab    x'");
        assert_eq!(first(&kb, "format(atom(A), \"~t~w~5|\", [ab])", "A"), "'   ab'");
    }

    #[test]
    fn term_construction() {
        let kb = KnowledgeBase::new();
        assert!(first(&kb, "functor(T, f, 2), T = f(a, _)", "T").starts_with("f(a, "));
        assert_eq!(first(&kb, "functor(foo(a, b), N, A), X = N/A", "X"), "foo/2");
        assert_eq!(first(&kb, "X =.. [g, 1]", "X"), "g(1)");
        assert_eq!(first(&kb, "copy_term(f(X, X, Y), C), C = f(a, B, c)", "B"), "a");
        assert!(first(&kb, "length(L, 2), L = [a|_]", "L").starts_with("[a, "));
    }

    #[test]
    fn type_errors_surface() {
        let kb = KnowledgeBase::new();
        let e = solve_all(&kb, "atom_length(X, N)", SolveBudget::default()).unwrap_err();
        assert!(e.is_instantiation());
        let e = solve_all(&kb, "X is foo + 1", SolveBudget::default()).unwrap_err();
        assert!(matches!(e, SolveError::Type { .. }));
    }

    #[test]
    fn output_is_captured() {
        let kb = KnowledgeBase::new();
        let q = Query::parse("write(a), nl, writeln('B c'), print('B c'), format(\"~w~n\", x)", &kb).unwrap();
        let mut s = solve(&kb, q, SolveBudget::default());
        assert!(s.next().unwrap().is_ok());
        assert_eq!(s.take_output(), "a\nB c\n'B c'x\n");
    }

    #[test]
    fn builtin_registry_is_consistent() {
        for k in builtin_keys() {
            assert!(is_builtin(&k), "{k}");
        }
        assert!(!is_builtin(&PredKey::new("append", 3)));
    }
}
