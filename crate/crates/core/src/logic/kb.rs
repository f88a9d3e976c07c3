//! Clause store, operator table and foreign predicate registrations.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::builtins;
use super::ops::OpTable;
use super::parser::{read_terms, SyntaxError};
use super::term::{PredKey, Term, VarId};
use super::write::TermWriter;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Builtin,
    Program,
    Dataset,
    Llm,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Builtin => "builtin",
            Provenance::Program => "program",
            Provenance::Dataset => "dataset",
            Provenance::Llm => "llm",
        })
    }
}

/// A fact or rule. Variables are numbered `0..var_count` locally so the
/// solver can rename a clause by offsetting ids.
#[derive(Clone, Debug)]
pub struct Clause {
    pub head: Term,
    pub body: Vec<Term>,
    provenance: Provenance,
    var_count: usize,
}

impl Clause {
    pub fn new(head: Term, body: Vec<Term>, provenance: Provenance) -> Result<Clause, KbError> {
        if !head.is_callable() {
            return Err(KbError::InvalidHead(head.to_string()));
        }
        for goal in &body {
            if matches!(goal, Term::Int(_) | Term::Float(_) | Term::Str(_)) {
                return Err(KbError::InvalidBody(goal.to_string()));
            }
        }
        // Renumber variables to 0..n in order of appearance.
        let mut map: HashMap<VarId, VarId> = HashMap::new();
        let mut rename = |t: &Term| {
            t.map_vars(&mut |v| {
                let n = map.len();
                Term::Var(*map.entry(v).or_insert(n))
            })
        };
        let head = rename(&head);
        let body: Vec<Term> = body.iter().map(&mut rename).collect();
        let var_count = map.len();
        Ok(Clause {
            head,
            body,
            provenance,
            var_count,
        })
    }

    /// Splits `Head :- Body` into a clause; anything else is a fact.
    pub fn from_term(t: &Term, provenance: Provenance) -> Result<Clause, KbError> {
        match t {
            Term::Compound(c) if &*c.functor == ":-" && c.args.len() == 2 => {
                let mut body = Vec::new();
                flatten_conjunction(&c.args[1], &mut body);
                Clause::new(c.args[0].clone(), body, provenance)
            }
            _ => Clause::new(t.clone(), Vec::new(), provenance),
        }
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn var_count(&self) -> usize {
        self.var_count
    }

    pub fn key(&self) -> PredKey {
        self.head.key().expect("clause head is callable")
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }

    /// The clause as a single term, `Head :- Body` or `Head`.
    pub fn to_term(&self) -> Term {
        if self.body.is_empty() {
            return self.head.clone();
        }
        let body = self
            .body
            .iter()
            .rev()
            .cloned()
            .reduce(|acc, g| Term::compound(",", vec![g, acc]))
            .expect("non-empty body");
        Term::compound(":-", vec![self.head.clone(), body])
    }

    pub fn render(&self, ops: &OpTable) -> String {
        let names: HashMap<VarId, String> = (0..self.var_count).map(|v| (v, var_name(v))).collect();
        let w = TermWriter {
            ops,
            quoted: true,
            var_names: Some(&names),
        };
        if self.body.is_empty() {
            format!("{}.", w.to_string(&self.head))
        } else {
            let mut s = format!("{} :-", w.to_string(&self.head));
            for (i, g) in self.body.iter().enumerate() {
                s.push_str("\n    ");
                let mut text = String::new();
                w.write(&mut text, g, 999).expect("string write");
                s.push_str(&text);
                s.push(if i + 1 == self.body.len() { '.' } else { ',' });
            }
            s
        }
    }
}

fn var_name(v: VarId) -> String {
    let letter = (b'A' + (v % 26) as u8) as char;
    if v < 26 {
        letter.to_string()
    } else {
        format!("{letter}{}", v / 26)
    }
}

pub fn flatten_conjunction(t: &Term, out: &mut Vec<Term>) {
    let mut cur = t;
    loop {
        match cur {
            Term::Compound(c) if &*c.functor == "," && c.args.len() == 2 => {
                flatten_conjunction(&c.args[0], out);
                cur = &c.args[1];
            }
            other => {
                out.push(other.clone());
                return;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArgMode {
    /// Must be ground at call time.
    In,
    /// Bound by the predicate on success.
    Out,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct ForeignError(pub String);

/// A predicate implemented in Rust and registered with argument modes.
pub trait ForeignPredicate: Send + Sync {
    fn modes(&self) -> &[ArgMode];

    /// Called with every argument fully resolved; `In` arguments are ground.
    /// Returns the values for the `Out` positions in order, or `None` to fail.
    fn call(&self, args: &[Term]) -> Result<Option<Vec<Term>>, ForeignError>;
}

#[derive(Debug, thiserror::Error)]
pub enum KbError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("clause head must be an atom or compound term, got {0}")]
    InvalidHead(String),
    #[error("clause body goal is not callable: {0}")]
    InvalidBody(String),
    #[error("cannot redefine built-in predicate {0}")]
    RedefineBuiltin(PredKey),
    #[error("cannot redefine foreign tool {0}")]
    RedefineForeign(PredKey),
    #[error("foreign tool {0} is already registered")]
    DuplicateForeign(PredKey),
    #[error("foreign tool {key} declares {modes} modes for arity {arity}")]
    ModeArity { key: PredKey, modes: usize, arity: usize },
    #[error("unsupported directive {0}")]
    UnsupportedDirective(String),
}

#[derive(Clone, Debug, Default)]
pub struct Predicate {
    pub clauses: Vec<Arc<Clause>>,
    pub dynamic: bool,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EngineFlags {
    pub occurs_check: bool,
}

#[derive(Clone)]
pub struct KnowledgeBase {
    preds: HashMap<PredKey, Predicate>,
    order: Vec<PredKey>,
    library: Arc<HashSet<PredKey>>,
    ops: OpTable,
    foreign: HashMap<PredKey, Arc<dyn ForeignPredicate>>,
    pub flags: EngineFlags,
}

impl fmt::Debug for KnowledgeBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KnowledgeBase")
            .field("predicates", &self.order.len())
            .field("foreign", &self.foreign.len())
            .finish()
    }
}

const PRELUDE: &str = include_str!("prelude.pl");

fn prelude() -> &'static Vec<Arc<Clause>> {
    static CLAUSES: OnceLock<Vec<Arc<Clause>>> = OnceLock::new();
    CLAUSES.get_or_init(|| {
        read_terms(PRELUDE, &OpTable::default())
            .expect("prelude parses")
            .iter()
            .map(|r| Arc::new(Clause::from_term(&r.term, Provenance::Builtin).expect("prelude clause")))
            .collect()
    })
}

impl Default for KnowledgeBase {
    fn default() -> KnowledgeBase {
        KnowledgeBase::new()
    }
}

impl KnowledgeBase {
    /// An empty knowledge base with the standard library loaded.
    pub fn new() -> KnowledgeBase {
        let mut preds: HashMap<PredKey, Predicate> = HashMap::new();
        let mut library = HashSet::new();
        for c in prelude() {
            let key = c.key();
            library.insert(key.clone());
            preds.entry(key).or_default().clauses.push(c.clone());
        }
        KnowledgeBase {
            preds,
            order: Vec::new(),
            library: Arc::new(library),
            ops: OpTable::default(),
            foreign: HashMap::new(),
            flags: EngineFlags::default(),
        }
    }

    pub fn ops(&self) -> &OpTable {
        &self.ops
    }

    pub fn ops_mut(&mut self) -> &mut OpTable {
        &mut self.ops
    }

    pub fn with_occurs_check(mut self, on: bool) -> KnowledgeBase {
        self.flags.occurs_check = on;
        self
    }

    /// True for predicates implemented by the engine or its library.
    pub fn is_builtin(&self, key: &PredKey) -> bool {
        builtins::is_builtin(key) || self.library.contains(key)
    }

    pub fn is_library(&self, key: &PredKey) -> bool {
        self.library.contains(key)
    }

    pub fn foreign(&self, key: &PredKey) -> Option<&Arc<dyn ForeignPredicate>> {
        self.foreign.get(key)
    }

    pub fn foreign_keys(&self) -> impl Iterator<Item = &PredKey> {
        self.foreign.keys()
    }

    pub fn predicate(&self, key: &PredKey) -> Option<&Predicate> {
        self.preds.get(key)
    }

    /// Whether a goal with this indicator can be called at all.
    pub fn is_known(&self, key: &PredKey) -> bool {
        builtins::is_builtin(key) || self.preds.contains_key(key) || self.foreign.contains_key(key)
    }

    /// User-visible predicates (not library, not foreign) in definition order.
    pub fn user_predicates(&self) -> impl Iterator<Item = &PredKey> {
        self.order.iter()
    }

    pub fn clauses(&self, key: &PredKey) -> &[Arc<Clause>] {
        self.preds.get(key).map_or(&[], |p| &p.clauses)
    }

    /// All clauses in user predicates, grouped by predicate in definition order.
    pub fn all_clauses(&self) -> impl Iterator<Item = &Arc<Clause>> {
        self.order.iter().flat_map(|k| self.clauses(k).iter())
    }

    fn check_definable(&self, key: &PredKey) -> Result<(), KbError> {
        if self.is_builtin(key) {
            return Err(KbError::RedefineBuiltin(key.clone()));
        }
        if self.foreign.contains_key(key) {
            return Err(KbError::RedefineForeign(key.clone()));
        }
        Ok(())
    }

    /// Appends a clause after existing clauses of the same predicate.
    pub fn assert_clause(&mut self, clause: Clause) -> Result<(), KbError> {
        let key = clause.key();
        self.check_definable(&key)?;
        if !self.preds.contains_key(&key) {
            self.order.push(key.clone());
        }
        self.preds.entry(key).or_default().clauses.push(Arc::new(clause));
        Ok(())
    }

    /// Declares a predicate so that calling it fails instead of raising an
    /// unknown-predicate error.
    pub fn declare_dynamic(&mut self, key: PredKey) -> Result<(), KbError> {
        self.check_definable(&key)?;
        if !self.preds.contains_key(&key) {
            self.order.push(key.clone());
        }
        self.preds.entry(key).or_default().dynamic = true;
        Ok(())
    }

    pub fn register_foreign(&mut self, key: PredKey, pred: Arc<dyn ForeignPredicate>) -> Result<(), KbError> {
        if pred.modes().len() != key.arity {
            return Err(KbError::ModeArity {
                modes: pred.modes().len(),
                arity: key.arity,
                key,
            });
        }
        if self.is_builtin(&key) || self.preds.contains_key(&key) {
            return Err(KbError::RedefineBuiltin(key));
        }
        if self.foreign.contains_key(&key) {
            return Err(KbError::DuplicateForeign(key));
        }
        self.foreign.insert(key, pred);
        Ok(())
    }

    /// Loads program text: clauses are asserted in order and `:- dynamic`
    /// directives declare predicates. Returns the number of clauses added.
    pub fn consult(&mut self, text: &str, provenance: Provenance) -> Result<usize, KbError> {
        let terms = read_terms(text, &self.ops)?;
        let mut n = 0;
        for r in terms {
            match &r.term {
                Term::Compound(c) if &*c.functor == ":-" && c.args.len() == 1 => {
                    self.directive(&c.args[0])?;
                }
                t => {
                    self.assert_clause(Clause::from_term(t, provenance)?)?;
                    n += 1;
                }
            }
        }
        Ok(n)
    }

    fn directive(&mut self, d: &Term) -> Result<(), KbError> {
        match d {
            Term::Compound(c) if &*c.functor == "dynamic" && c.args.len() == 1 => {
                let mut specs = Vec::new();
                flatten_conjunction(&c.args[0], &mut specs);
                for s in specs {
                    match (s.key(), s.args()) {
                        (Some(k), [Term::Atom(name), Term::Int(arity)]) if &*k.name == "/" && *arity >= 0 => {
                            self.declare_dynamic(PredKey::new(name, *arity as usize))?;
                        }
                        _ => return Err(KbError::UnsupportedDirective(d.to_string())),
                    }
                }
                Ok(())
            }
            other => Err(KbError::UnsupportedDirective(other.to_string())),
        }
    }

    /// Prints user clauses in source syntax.
    pub fn listing(&self) -> String {
        let mut out = String::new();
        for key in &self.order {
            let p = &self.preds[key];
            if p.dynamic {
                out.push_str(&format!(":- dynamic {key}.\n"));
            }
            for c in &p.clauses {
                out.push_str(&c.render(&self.ops));
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}

/// Parses program text into clauses, in source order.
pub fn parse_program(text: &str) -> Result<Vec<Clause>, KbError> {
    let ops = OpTable::default();
    read_terms(text, &ops)?
        .iter()
        .map(|r| match &r.term {
            Term::Compound(c) if &*c.functor == ":-" && c.args.len() == 1 => Err(KbError::UnsupportedDirective(r.term.to_string())),
            t => Clause::from_term(t, Provenance::Program),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_fact_and_rule() {
        let c = parse_program("acquirer_country(gringotts, gb).").unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].key().to_string(), "acquirer_country/2");
        assert!(c[0].is_fact());

        let c = parse_program("negate(P) :- call(P), !, fail.").unwrap();
        assert_eq!(c[0].body.len(), 3);
        assert_eq!(c[0].body[0].key().unwrap().to_string(), "call/1");
        assert!(c[0].body[1].is_atom("!"));
        assert!(c[0].body[2].is_atom("fail"));
    }

    #[test]
    fn var_head_rejected() {
        let err = parse_program("X :- true.").unwrap_err();
        assert!(matches!(err, KbError::InvalidHead(_)));
        assert!(Clause::new(Term::Int(3), vec![], Provenance::Program).is_err());
    }

    #[test]
    fn assert_appends_in_order() {
        let mut kb = KnowledgeBase::new();
        kb.consult(
            "country(gb). country('nl'). country(us). country(it). country(fr).",
            Provenance::Program,
        )
        .unwrap();
        let c = Clause::new(Term::compound("country", vec![Term::atom("de")]), vec![], Provenance::Program).unwrap();
        kb.assert_clause(c).unwrap();
        let clauses = kb.clauses(&PredKey::new("country", 1));
        assert_eq!(clauses.len(), 6);
        assert_eq!(clauses[5].head.args()[0], Term::atom("de"));
    }

    #[test]
    fn provenance_recorded() {
        let mut kb = KnowledgeBase::new();
        kb.consult("helper(X, Y) :- Y = X.", Provenance::Llm).unwrap();
        let llm: Vec<_> = kb
            .all_clauses()
            .filter(|c| c.provenance() == Provenance::Llm)
            .map(|c| c.key())
            .collect();
        assert_eq!(llm, vec![PredKey::new("helper", 2)]);
    }

    #[test]
    fn cannot_redefine_builtins() {
        let mut kb = KnowledgeBase::new();
        assert!(matches!(
            kb.consult("append(a, b, c).", Provenance::Program),
            Err(KbError::RedefineBuiltin(_))
        ));
        assert!(matches!(
            kb.consult("is(a, b).", Provenance::Program),
            Err(KbError::RedefineBuiltin(_))
        ));
    }

    #[test]
    fn listing_reparses() {
        let src = "p(X, Y) :- q(X), \\+ r(Y, 'GB'), Y is X * 2.\nq(1).\nq([a, b|_]).\n";
        let mut kb = KnowledgeBase::new();
        kb.consult(src, Provenance::Program).unwrap();
        let listed = kb.listing();
        let again = parse_program(&listed).unwrap();
        let orig: Vec<_> = kb.all_clauses().collect();
        assert_eq!(orig.len(), again.len());
        for (a, b) in orig.iter().zip(&again) {
            assert!(a.to_term().is_variant(&b.to_term()), "{listed}");
        }
    }

    #[test]
    fn dynamic_directive() {
        let mut kb = KnowledgeBase::new();
        kb.consult(":- dynamic seen/1.", Provenance::Program).unwrap();
        assert!(kb.predicate(&PredKey::new("seen", 1)).unwrap().dynamic);
    }
}
