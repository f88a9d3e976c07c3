//! Term representation for the logic engine.
//!
//! Lists are ordinary compounds: `[X|Xs]` is `'.'(X, Xs)` and the empty list
//! is the atom `[]`. Relations handed around by tool predicates are long
//! lists, so every traversal here walks the last-argument spine iteratively
//! rather than recursing into it.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

pub type VarId = usize;

pub const NIL: &str = "[]";
pub const CONS: &str = ".";

#[derive(Clone, Debug)]
pub enum Term {
    Atom(Arc<str>),
    Var(VarId),
    Int(i64),
    Float(f64),
    Str(Arc<str>),
    Compound(Arc<Compound>),
}

#[derive(Debug)]
pub struct Compound {
    pub functor: Arc<str>,
    pub args: Vec<Term>,
    ground: bool,
}

impl Compound {
    pub fn new(functor: Arc<str>, args: Vec<Term>) -> Compound {
        let ground = args.iter().all(|a| match a {
            Term::Var(_) => false,
            Term::Compound(c) => c.ground,
            _ => true,
        });
        Compound { functor, args, ground }
    }

    /// Whether the term contains no variables; computed at construction.
    pub fn is_ground(&self) -> bool {
        self.ground
    }
}

impl Drop for Compound {
    fn drop(&mut self) {
        // Unwind nested compounds we own exclusively so that dropping a
        // 100k-element list does not recurse 100k frames deep.
        let mut pending = std::mem::take(&mut self.args);
        while let Some(term) = pending.pop() {
            if let Term::Compound(c) = term {
                if let Ok(mut inner) = Arc::try_unwrap(c) {
                    pending.append(&mut inner.args);
                }
            }
        }
    }
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::Atom(Arc::from(name))
    }

    pub fn string(text: &str) -> Term {
        Term::Str(Arc::from(text))
    }

    pub fn nil() -> Term {
        Term::atom(NIL)
    }

    /// Builds `functor(args...)`; a zero-argument compound collapses to an atom.
    pub fn compound(functor: &str, args: Vec<Term>) -> Term {
        Term::compound_arc(Arc::from(functor), args)
    }

    pub fn compound_arc(functor: Arc<str>, args: Vec<Term>) -> Term {
        if args.is_empty() {
            Term::Atom(functor)
        } else {
            Term::Compound(Arc::new(Compound::new(functor, args)))
        }
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::compound(CONS, vec![head, tail])
    }

    pub fn list(items: impl IntoIterator<Item = Term>) -> Term {
        Term::list_with_tail(items, Term::nil())
    }

    pub fn list_with_tail(items: impl IntoIterator<Item = Term>, tail: Term) -> Term {
        let items: Vec<Term> = items.into_iter().collect();
        let cons: Arc<str> = Arc::from(CONS);
        items.into_iter().rev().fold(tail, |acc, item| {
            Term::Compound(Arc::new(Compound::new(cons.clone(), vec![item, acc])))
        })
    }

    pub fn is_atom(&self, name: &str) -> bool {
        matches!(self, Term::Atom(a) if &**a == name)
    }

    pub fn is_nil(&self) -> bool {
        self.is_atom(NIL)
    }

    pub fn is_callable(&self) -> bool {
        matches!(self, Term::Atom(_) | Term::Compound(_))
    }

    pub fn is_number(&self) -> bool {
        matches!(self, Term::Int(_) | Term::Float(_))
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Term::Atom(a) => Some(a),
            _ => None,
        }
    }

    /// `(name, arity)` of a callable term.
    pub fn key(&self) -> Option<PredKey> {
        match self {
            Term::Atom(a) => Some(PredKey::new(a, 0)),
            Term::Compound(c) => Some(PredKey::new(&c.functor, c.args.len())),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound(c) => &c.args,
            _ => &[],
        }
    }

    /// Splits a cons cell into head and tail.
    pub fn as_cons(&self) -> Option<(&Term, &Term)> {
        match self {
            Term::Compound(c) if c.args.len() == 2 && &*c.functor == CONS => Some((&c.args[0], &c.args[1])),
            _ => None,
        }
    }

    /// Elements of a proper list. Does not dereference variables, so it is
    /// meant for terms that were already resolved.
    pub fn list_items(&self) -> Option<Vec<Term>> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            if cur.is_nil() {
                return Some(out);
            }
            let (h, t) = cur.as_cons()?;
            out.push(h.clone());
            cur = t;
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Compound(c) => c.ground,
            _ => true,
        }
    }

    /// Variables in depth-first, left-to-right order of first occurrence.
    pub fn variables(&self) -> Vec<VarId> {
        let mut seen = Vec::new();
        let mut set = std::collections::HashSet::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            match t {
                Term::Var(v) => {
                    if set.insert(*v) {
                        seen.push(*v);
                    }
                }
                Term::Compound(c) if !c.ground => stack.extend(c.args.iter().rev()),
                _ => {}
            }
        }
        seen
    }

    /// Rebuilds the term, replacing each variable by `leaf(var)`.
    pub fn map_vars(&self, leaf: &mut dyn FnMut(VarId) -> Term) -> Term {
        let mut spine: Vec<(&Arc<str>, Vec<Term>)> = Vec::new();
        let mut cur = self;
        let mut acc = loop {
            match cur {
                Term::Var(v) => break leaf(*v),
                Term::Compound(c) if !c.ground => {
                    let last = c.args.len() - 1;
                    let mut args = Vec::with_capacity(c.args.len());
                    for a in &c.args[..last] {
                        args.push(a.map_vars(leaf));
                    }
                    spine.push((&c.functor, args));
                    cur = &c.args[last];
                }
                other => break other.clone(),
            }
        };
        while let Some((functor, mut args)) = spine.pop() {
            args.push(acc);
            acc = Term::Compound(Arc::new(Compound::new(functor.clone(), args)));
        }
        acc
    }

    /// Adds `offset` to every variable id; used to rename clause variables.
    pub fn offset_vars(&self, offset: VarId) -> Term {
        self.map_vars(&mut |v| Term::Var(v + offset))
    }

    pub fn max_var(&self) -> Option<VarId> {
        let mut max = None;
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            match t {
                Term::Var(v) => max = Some(max.map_or(*v, |m: VarId| m.max(*v))),
                Term::Compound(c) if !c.ground => stack.extend(c.args.iter()),
                _ => {}
            }
        }
        max
    }

    /// Structural equality up to a consistent renaming of variables.
    pub fn is_variant(&self, other: &Term) -> bool {
        let mut left_to_right = std::collections::HashMap::new();
        let mut right_to_left = std::collections::HashMap::new();
        let mut stack = vec![(self, other)];
        while let Some((a, b)) = stack.pop() {
            match (a, b) {
                (Term::Var(x), Term::Var(y)) => {
                    if *left_to_right.entry(*x).or_insert(*y) != *y || *right_to_left.entry(*y).or_insert(*x) != *x {
                        return false;
                    }
                }
                (Term::Compound(x), Term::Compound(y)) => {
                    if x.functor != y.functor || x.args.len() != y.args.len() {
                        return false;
                    }
                    stack.extend(x.args.iter().zip(y.args.iter()));
                }
                (Term::Var(_), _) | (_, Term::Var(_)) => return false,
                (x, y) => {
                    if x != y {
                        return false;
                    }
                }
            }
        }
        true
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        let mut stack = vec![(self, other)];
        while let Some((a, b)) = stack.pop() {
            let same = match (a, b) {
                (Term::Atom(x), Term::Atom(y)) => x == y,
                (Term::Var(x), Term::Var(y)) => x == y,
                (Term::Int(x), Term::Int(y)) => x == y,
                (Term::Float(x), Term::Float(y)) => x.to_bits() == y.to_bits() || x == y,
                (Term::Str(x), Term::Str(y)) => x == y,
                (Term::Compound(x), Term::Compound(y)) => {
                    if Arc::ptr_eq(x, y) {
                        true
                    } else if x.functor != y.functor || x.args.len() != y.args.len() {
                        false
                    } else {
                        stack.extend(x.args.iter().zip(y.args.iter()));
                        true
                    }
                }
                _ => false,
            };
            if !same {
                return false;
            }
        }
        true
    }
}

impl From<i64> for Term {
    fn from(v: i64) -> Term {
        Term::Int(v)
    }
}

impl From<f64> for Term {
    fn from(v: f64) -> Term {
        Term::Float(v)
    }
}

impl From<&str> for Term {
    fn from(v: &str) -> Term {
        Term::atom(v)
    }
}

/// Predicate indicator `name/arity`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredKey {
    pub name: Arc<str>,
    pub arity: usize,
}

impl PredKey {
    pub fn new(name: &str, arity: usize) -> PredKey {
        PredKey {
            name: Arc::from(name),
            arity,
        }
    }

    pub fn to_term(&self) -> Term {
        Term::compound("/", vec![Term::Atom(self.name.clone()), Term::Int(self.arity as i64)])
    }
}

impl fmt::Display for PredKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

fn type_rank(t: &Term) -> u8 {
    match t {
        Term::Var(_) => 0,
        Term::Int(_) | Term::Float(_) => 1,
        Term::Atom(_) => 3,
        Term::Str(_) => 4,
        Term::Compound(_) => 5,
    }
}

/// Standard order of terms: Var < Number < Atom < Str < Compound. Numbers
/// compare by value, a Float sorting before an equal Int. Compounds compare
/// by arity, then functor name, then arguments left to right.
pub fn standard_order(a: &Term, b: &Term) -> Ordering {
    let mut a = a;
    let mut b = b;
    loop {
        let (ra, rb) = (type_rank(a), type_rank(b));
        if ra != rb {
            return ra.cmp(&rb);
        }
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => return x.cmp(y),
            (Term::Atom(x), Term::Atom(y)) | (Term::Str(x), Term::Str(y)) => return x.cmp(y),
            (Term::Compound(x), Term::Compound(y)) => {
                let head = x.args.len().cmp(&y.args.len()).then_with(|| x.functor.cmp(&y.functor));
                if head != Ordering::Equal {
                    return head;
                }
                let last = x.args.len() - 1;
                for (l, r) in x.args[..last].iter().zip(&y.args[..last]) {
                    let o = standard_order(l, r);
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                a = &x.args[last];
                b = &y.args[last];
            }
            (x, y) => return compare_numbers(x, y),
        }
    }
}

fn compare_numbers(a: &Term, b: &Term) -> Ordering {
    match (a, b) {
        (Term::Int(x), Term::Int(y)) => x.cmp(y),
        (Term::Float(x), Term::Float(y)) => x.total_cmp(y),
        (Term::Float(x), Term::Int(y)) => x.total_cmp(&(*y as f64)).then(Ordering::Less),
        (Term::Int(x), Term::Float(y)) => (*x as f64).total_cmp(y).then(Ordering::Greater),
        _ => Ordering::Equal,
    }
}
