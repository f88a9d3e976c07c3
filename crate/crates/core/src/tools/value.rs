//! Cell values of a relation and their conversion to and from terms.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::logic::Term;

#[derive(Clone, Debug)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(Arc<str>),
    List(Vec<Value>),
}

impl Value {
    pub fn text(s: &str) -> Value {
        Value::Text(Arc::from(s))
    }

    /// Numeric view used by comparisons and aggregates. Text that reads as a
    /// number counts, so `'2023'` written by a planner compares with 2023.
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            Value::Text(t) => t.trim().parse::<f64>().ok().filter(|f| f.is_finite()),
            _ => None,
        }
    }

    fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            Value::Text(t) if t.eq_ignore_ascii_case("true") => Some(true),
            Value::Text(t) if t.eq_ignore_ascii_case("false") => Some(false),
            _ => None,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// Equality as used by filter leaves: numeric, then boolean, then text.
    pub fn loose_eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Null, Value::Null) => true,
            (Value::Null, _) | (_, Value::Null) => false,
            (Value::List(a), Value::List(b)) => a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.loose_eq(y)),
            (Value::List(_), _) | (_, Value::List(_)) => false,
            _ => {
                if let (Some(x), Some(y)) = (self.as_number(), other.as_number()) {
                    return x == y;
                }
                if matches!(self, Value::Bool(_)) || matches!(other, Value::Bool(_)) {
                    if let (Some(x), Some(y)) = (self.as_bool(), other.as_bool()) {
                        return x == y;
                    }
                }
                self.to_string() == other.to_string()
            }
        }
    }

    /// Ordering for comparison leaves: numeric when both sides are numeric,
    /// lexicographic on the printed form otherwise. Nulls do not compare.
    pub fn partial_compare(&self, other: &Value) -> Option<Ordering> {
        if self.is_null() || other.is_null() {
            return None;
        }
        if let (Some(x), Some(y)) = (self.as_number(), other.as_number()) {
            return x.partial_cmp(&y);
        }
        Some(self.to_string().cmp(&other.to_string()))
    }

    /// Total order for sorting: nulls first, then numbers, then everything
    /// else by printed form.
    pub fn sort_cmp(&self, other: &Value) -> Ordering {
        fn rank(v: &Value) -> u8 {
            match v {
                Value::Null => 0,
                v if v.as_number().is_some() => 1,
                _ => 2,
            }
        }
        match (rank(self), rank(other)) {
            (1, 1) => self.as_number().unwrap().total_cmp(&other.as_number().unwrap()),
            (2, 2) => self.to_string().cmp(&other.to_string()),
            (a, b) => a.cmp(&b),
        }
    }

    pub fn to_term(&self) -> Term {
        match self {
            Value::Null => Term::atom("null"),
            Value::Bool(b) => Term::atom(if *b { "true" } else { "false" }),
            Value::Int(i) => Term::Int(*i),
            Value::Float(f) => Term::Float(*f),
            Value::Text(t) => Term::Atom(t.clone()),
            Value::List(items) => Term::list(items.iter().map(Value::to_term)),
        }
    }

    /// Converts a ground term. Atoms and strings become text, except
    /// `null`; compound non-list terms are kept as their printed text.
    pub fn from_term(t: &Term) -> Option<Value> {
        Some(match t {
            Term::Var(_) => return None,
            Term::Int(i) => Value::Int(*i),
            Term::Float(f) => Value::Float(*f),
            Term::Atom(a) if &**a == "null" => Value::Null,
            Term::Atom(a) if &**a == "[]" => Value::List(Vec::new()),
            Term::Atom(a) | Term::Str(a) => Value::Text(a.clone()),
            Term::Compound(_) => match t.list_items() {
                Some(items) => Value::List(items.iter().map(Value::from_term).collect::<Option<_>>()?),
                None if t.is_ground() => Value::Text(Arc::from(t.to_string().as_str())),
                None => return None,
            },
        })
    }
}

impl PartialEq for Value {
    /// Structural equality; `Float(NaN)` equals itself so rows compare sanely.
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Null, Value::Null) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits() || a == b,
            (Value::Text(a), Value::Text(b)) => a == b,
            (Value::List(a), Value::List(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("null"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{}", Term::Float(*x)),
            Value::Text(t) => f.write_str(t),
            Value::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Value {
        Value::text(s)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Value {
        Value::Int(i)
    }
}

impl From<f64> for Value {
    fn from(f: f64) -> Value {
        Value::Float(f)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Value {
        Value::Bool(b)
    }
}
