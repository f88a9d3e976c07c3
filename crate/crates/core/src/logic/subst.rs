//! Variable bindings and unification.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use super::term::{Compound, Term, VarId};

/// Anything that can look up and record variable bindings.
pub trait Bindings {
    fn lookup(&self, v: VarId) -> Option<&Term>;
    fn bind(&mut self, v: VarId, t: Term);

    /// Follows variable-to-term bindings until reaching a non-variable or an
    /// unbound variable.
    fn deref<'t>(&'t self, t: &'t Term) -> &'t Term {
        let mut cur = t;
        while let Term::Var(v) = cur {
            match self.lookup(*v) {
                Some(next) => cur = next,
                None => break,
            }
        }
        cur
    }

    /// Applies the bindings throughout `t`. Cyclic bindings (possible without
    /// the occurs check) are cut off by leaving the repeating variable in place.
    fn resolve(&self, t: &Term) -> Term
    where
        Self: Sized,
    {
        resolve_iter(self, t)
    }
}

struct Pending {
    src: Arc<Compound>,
    next: usize,
    out: Vec<Term>,
    changed: bool,
    opened: Vec<VarId>,
}

/// Resolves without recursion: bound variables along a list spine can be
/// arbitrarily long chains. Subterms that contain no bound variables are
/// shared with the input rather than copied.
fn resolve_iter<B: Bindings>(b: &B, t: &Term) -> Term {
    let mut on_path: HashSet<VarId> = HashSet::new();
    let mut stack: Vec<Pending> = Vec::new();
    // Follows `term`'s binding chain; returns a finished term or opens a frame.
    let enter = |term: &Term, on_path: &mut HashSet<VarId>, stack: &mut Vec<Pending>| -> Option<(Term, bool)> {
        let mut opened = Vec::new();
        let mut cur = term;
        while let Term::Var(v) = cur {
            if on_path.contains(v) || opened.contains(v) {
                break;
            }
            match b.lookup(*v) {
                Some(x) => {
                    opened.push(*v);
                    cur = x;
                }
                None => break,
            }
        }
        match cur {
            Term::Compound(c) if !c.is_ground() => {
                on_path.extend(opened.iter().copied());
                stack.push(Pending {
                    src: c.clone(),
                    next: 0,
                    out: Vec::with_capacity(c.args.len()),
                    changed: false,
                    opened,
                });
                None
            }
            other => Some((other.clone(), !opened.is_empty())),
        }
    };
    if let Some((done, _)) = enter(t, &mut on_path, &mut stack) {
        return done;
    }
    loop {
        let top = stack.last_mut().expect("frame open");
        if top.next < top.src.args.len() {
            let arg = top.src.args[top.next].clone();
            top.next += 1;
            if let Some((done, changed)) = enter(&arg, &mut on_path, &mut stack) {
                let top = stack.last_mut().expect("frame open");
                top.out.push(done);
                top.changed |= changed;
            }
            continue;
        }
        let f = stack.pop().expect("frame open");
        for v in &f.opened {
            on_path.remove(v);
        }
        let changed = f.changed || !f.opened.is_empty();
        let built = if f.changed {
            Term::Compound(Arc::new(Compound::new(f.src.functor.clone(), f.out)))
        } else {
            Term::Compound(f.src)
        };
        match stack.last_mut() {
            Some(parent) => {
                parent.out.push(built);
                parent.changed |= changed;
            }
            None => return built,
        }
    }
}

/// A binding map from variable ids to terms.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Substitution {
    map: HashMap<VarId, Term>,
}

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    pub fn get(&self, v: VarId) -> Option<&Term> {
        self.map.get(&v)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &Term)> {
        self.map.iter().map(|(k, v)| (*k, v))
    }

    pub fn insert(&mut self, v: VarId, t: Term) {
        self.map.insert(v, t);
    }
}

impl Bindings for Substitution {
    fn lookup(&self, v: VarId) -> Option<&Term> {
        self.map.get(&v)
    }

    fn bind(&mut self, v: VarId, t: Term) {
        self.map.insert(v, t);
    }
}

/// Whether `v` occurs in `t` under the current bindings.
pub fn occurs<B: Bindings>(b: &B, v: VarId, t: &Term) -> bool {
    let mut stack = vec![t];
    while let Some(t) = stack.pop() {
        match b.deref(t) {
            Term::Var(w) => {
                if *w == v {
                    return true;
                }
            }
            Term::Compound(c) if !c.is_ground() => stack.extend(c.args.iter()),
            _ => {}
        }
    }
    false
}

/// Unifies two terms, recording bindings in `b`. On failure `b` may hold
/// partial bindings; callers that need to roll back do so themselves.
pub fn unify_in<B: Bindings>(b: &mut B, x: &Term, y: &Term, occurs_check: bool) -> bool {
    let mut stack: Vec<(Term, Term)> = vec![(x.clone(), y.clone())];
    while let Some((x, y)) = stack.pop() {
        let x = b.deref(&x).clone();
        let y = b.deref(&y).clone();
        match (&x, &y) {
            (Term::Var(a), Term::Var(c)) if a == c => {}
            (Term::Var(a), _) => {
                if occurs_check && occurs(b, *a, &y) {
                    return false;
                }
                b.bind(*a, y);
            }
            (_, Term::Var(c)) => {
                if occurs_check && occurs(b, *c, &x) {
                    return false;
                }
                b.bind(*c, x);
            }
            (Term::Compound(p), Term::Compound(q)) => {
                if Arc::ptr_eq(p, q) {
                    continue;
                }
                if p.functor != q.functor || p.args.len() != q.args.len() {
                    return false;
                }
                for (l, r) in p.args.iter().zip(q.args.iter()).rev() {
                    stack.push((l.clone(), r.clone()));
                }
            }
            (Term::Atom(p), Term::Atom(q)) => {
                if p != q {
                    return false;
                }
            }
            (Term::Int(p), Term::Int(q)) => {
                if p != q {
                    return false;
                }
            }
            (Term::Float(p), Term::Float(q)) => {
                if p != q {
                    return false;
                }
            }
            (Term::Str(p), Term::Str(q)) => {
                if p != q {
                    return false;
                }
            }
            _ => return false,
        }
    }
    true
}

/// Most general unifier of `t1` and `t2` extending `s`, or `None`.
pub fn unify(t1: &Term, t2: &Term, s: &Substitution, occurs_check: bool) -> Option<Substitution> {
    let mut out = s.clone();
    if unify_in(&mut out, t1, t2, occurs_check) {
        Some(out)
    } else {
        None
    }
}
