//! The nested-list filter language.
//!
//! ```text
//! []                       no condition
//! [Field, Value]           equality; a list Value means membership
//! [Op, Field, Value]       Op in eq ne lt le gt ge
//! [and|Exprs] [or|Exprs]   at least one child
//! [not, Expr]
//! ```

use std::cmp::Ordering;
use std::fmt;

use crate::logic::Term;

use super::relation::{Relation, Row};
use super::value::Value;
use super::ToolError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

    pub fn name(self) -> &'static str {
        match self {
            CmpOp::Eq => "eq",
            CmpOp::Ne => "ne",
            CmpOp::Lt => "lt",
            CmpOp::Le => "le",
            CmpOp::Gt => "gt",
            CmpOp::Ge => "ge",
        }
    }

    fn parse(s: &str) -> Option<CmpOp> {
        CmpOp::ALL.into_iter().find(|op| op.name() == s)
    }

    /// Applies the operator to a cell and the expression's value.
    pub fn test(self, cell: &Value, value: &Value) -> bool {
        if let (Value::List(options), false) = (value, matches!(cell, Value::List(_))) {
            let hit = options.iter().any(|o| cell.loose_eq(o));
            return match self {
                CmpOp::Eq => hit,
                CmpOp::Ne => !hit,
                _ => false,
            };
        }
        match self {
            CmpOp::Eq => cell.loose_eq(value),
            CmpOp::Ne => !cell.loose_eq(value),
            _ => match cell.partial_compare(value) {
                None => false,
                Some(o) => match self {
                    CmpOp::Lt => o == Ordering::Less,
                    CmpOp::Le => o != Ordering::Greater,
                    CmpOp::Gt => o == Ordering::Greater,
                    CmpOp::Ge => o != Ordering::Less,
                    CmpOp::Eq | CmpOp::Ne => unreachable!(),
                },
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FilterExpr {
    Leaf { op: CmpOp, field: String, value: Value },
    And(Vec<FilterExpr>),
    Or(Vec<FilterExpr>),
    Not(Box<FilterExpr>),
}

impl FilterExpr {
    /// The empty filter, which keeps every row.
    pub fn all() -> FilterExpr {
        FilterExpr::And(Vec::new())
    }

    pub fn leaf(op: CmpOp, field: &str, value: impl Into<Value>) -> FilterExpr {
        FilterExpr::Leaf {
            op,
            field: field.to_string(),
            value: value.into(),
        }
    }

    pub fn from_term(t: &Term) -> Result<FilterExpr, ToolError> {
        if t.is_nil() {
            return Ok(FilterExpr::all());
        }
        let malformed = |why: &str| ToolError::Malformed(format!("filter {t}: {why}"));
        let items = t.list_items().ok_or_else(|| malformed("expected a list"))?;
        let head = items[0].as_atom();
        match (head, items.len()) {
            (Some(c @ ("and" | "or")), n) if n >= 2 && items[1..].iter().all(is_list) => {
                let kids = items[1..].iter().map(FilterExpr::from_term).collect::<Result<Vec<_>, _>>()?;
                Ok(if c == "and" { FilterExpr::And(kids) } else { FilterExpr::Or(kids) })
            }
            (Some("and" | "or"), 1) => Err(malformed("connective needs at least one child")),
            (Some("not"), 2) if is_list(&items[1]) => Ok(FilterExpr::Not(Box::new(FilterExpr::from_term(&items[1])?))),
            (Some("not"), n) if n != 2 => Err(malformed("not takes exactly one child")),
            (Some(_), 2) => Ok(FilterExpr::Leaf {
                op: CmpOp::Eq,
                field: field_name(&items[0]).ok_or_else(|| malformed("field must be an atom"))?,
                value: Value::from_term(&items[1]).ok_or_else(|| malformed("value is not ground"))?,
            }),
            (Some(op), 3) => {
                let op = CmpOp::parse(op).ok_or_else(|| malformed("unknown comparison operator"))?;
                Ok(FilterExpr::Leaf {
                    op,
                    field: field_name(&items[1]).ok_or_else(|| malformed("field must be an atom"))?,
                    value: Value::from_term(&items[2]).ok_or_else(|| malformed("value is not ground"))?,
                })
            }
            _ => Err(malformed("unrecognised expression")),
        }
    }

    pub fn to_term(&self) -> Term {
        match self {
            FilterExpr::Leaf {
                op: CmpOp::Eq,
                field,
                value,
            } if !matches!(value, Value::List(_)) => Term::list([Term::atom(field), value.to_term()]),
            FilterExpr::Leaf { op, field, value } => Term::list([Term::atom(op.name()), Term::atom(field), value.to_term()]),
            FilterExpr::And(k) if k.is_empty() => Term::nil(),
            FilterExpr::And(k) => Term::list(std::iter::once(Term::atom("and")).chain(k.iter().map(|e| e.to_term()))),
            FilterExpr::Or(k) => Term::list(std::iter::once(Term::atom("or")).chain(k.iter().map(|e| e.to_term()))),
            FilterExpr::Not(e) => Term::list([Term::atom("not"), e.to_term()]),
        }
    }

    pub fn fields(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_fields(&mut out);
        out
    }

    fn collect_fields<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            FilterExpr::Leaf { field, .. } => out.push(field),
            FilterExpr::And(k) | FilterExpr::Or(k) => k.iter().for_each(|e| e.collect_fields(out)),
            FilterExpr::Not(e) => e.collect_fields(out),
        }
    }

    /// Resolves field names to column indices of `rel`.
    pub fn compile(&self, rel: &Relation) -> Result<Compiled, ToolError> {
        Ok(match self {
            FilterExpr::Leaf { op, field, value } => Compiled::Leaf(*op, rel.require(field)?, value.clone()),
            FilterExpr::And(k) => Compiled::And(k.iter().map(|e| e.compile(rel)).collect::<Result<_, _>>()?),
            FilterExpr::Or(k) => Compiled::Or(k.iter().map(|e| e.compile(rel)).collect::<Result<_, _>>()?),
            FilterExpr::Not(e) => Compiled::Not(Box::new(e.compile(rel)?)),
        })
    }
}

fn is_list(t: &Term) -> bool {
    t.list_items().is_some_and(|items| !items.is_empty())
}

fn field_name(t: &Term) -> Option<String> {
    match t {
        Term::Atom(a) | Term::Str(a) => Some(a.to_string()),
        _ => None,
    }
}

impl fmt::Display for FilterExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

#[derive(Clone, Debug)]
pub enum Compiled {
    Leaf(CmpOp, usize, Value),
    And(Vec<Compiled>),
    Or(Vec<Compiled>),
    Not(Box<Compiled>),
}

impl Compiled {
    pub fn eval(&self, row: &Row) -> bool {
        match self {
            Compiled::Leaf(op, col, value) => op.test(&row[*col], value),
            Compiled::And(k) => k.iter().all(|e| e.eval(row)),
            Compiled::Or(k) => k.iter().any(|e| e.eval(row)),
            Compiled::Not(e) => !e.eval(row),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{solve_all, KnowledgeBase, SolveBudget};

    fn term(src: &str) -> Term {
        let kb = KnowledgeBase::new();
        let ans = solve_all(&kb, &format!("X = {src}"), SolveBudget::default()).unwrap();
        ans[0].get("X").unwrap().clone()
    }

    #[test]
    fn parses_the_forms() {
        let e = FilterExpr::from_term(&term("[and,[issuing_country,'GB'],[ip_country,'FR']]")).unwrap();
        assert_eq!(
            e,
            FilterExpr::And(vec![
                FilterExpr::leaf(CmpOp::Eq, "issuing_country", "GB"),
                FilterExpr::leaf(CmpOp::Eq, "ip_country", "FR"),
            ])
        );
        assert_eq!(
            FilterExpr::from_term(&term("[gt,a,2]")).unwrap(),
            FilterExpr::leaf(CmpOp::Gt, "a", 2)
        );
        assert!(matches!(FilterExpr::from_term(&term("[not,[a,1]]")).unwrap(), FilterExpr::Not(_)));
        assert_eq!(FilterExpr::from_term(&term("[]")).unwrap(), FilterExpr::all());
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["[and]", "[not,[a,1],[b,2]]", "[between,a,1]", "[a,b,c,d]", "foo", "[1,2]"] {
            assert!(FilterExpr::from_term(&term(bad)).is_err(), "{bad}");
        }
    }

    #[test]
    fn term_round_trip() {
        for src in ["[and,[a,1],[or,[lt,b,2],[not,[c,x]]]]", "[ge,a,2.5]", "[eq,a,[x,y]]", "[]"] {
            let e = FilterExpr::from_term(&term(src)).unwrap();
            assert_eq!(e.to_term().to_string(), term(src).to_string());
        }
    }

    #[test]
    fn membership_leaf() {
        let rel = Relation::from_values(&["aci"], vec![vec!["A".into()], vec!["C".into()]]).unwrap();
        let c = FilterExpr::from_term(&term("[aci,['A','B']]")).unwrap().compile(&rel).unwrap();
        assert!(c.eval(&rel.rows()[0]));
        assert!(!c.eval(&rel.rows()[1]));
    }
}
