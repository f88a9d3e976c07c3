//! `[Header|Data]` tables.

use std::collections::HashSet;
use std::fmt;
use std::ops::Deref;
use std::sync::{Arc, OnceLock};

use crate::logic::Term;

use super::value::Value;
use super::ToolError;

/// One row of cells. Cheap to clone; the term form is built at most once
/// so relations that share rows also share their term representation.
#[derive(Clone)]
pub struct Row(Arc<RowData>);

struct RowData {
    values: Box<[Value]>,
    term: OnceLock<Term>,
}

impl Row {
    pub fn values(&self) -> &[Value] {
        &self.0.values
    }

    pub fn to_term(&self) -> Term {
        self.0
            .term
            .get_or_init(|| Term::list(self.0.values.iter().map(Value::to_term)))
            .clone()
    }

    fn with_term(values: Vec<Value>, term: Term) -> Row {
        Row(Arc::new(RowData {
            values: values.into_boxed_slice(),
            term: OnceLock::from(term),
        }))
    }
}

impl Deref for Row {
    type Target = [Value];

    fn deref(&self) -> &[Value] {
        &self.0.values
    }
}

impl From<Vec<Value>> for Row {
    fn from(values: Vec<Value>) -> Row {
        Row(Arc::new(RowData {
            values: values.into_boxed_slice(),
            term: OnceLock::new(),
        }))
    }
}

impl FromIterator<Value> for Row {
    fn from_iter<I: IntoIterator<Item = Value>>(iter: I) -> Row {
        Row::from(iter.into_iter().collect::<Vec<_>>())
    }
}

impl PartialEq for Row {
    fn eq(&self, other: &Row) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.values() == other.values()
    }
}

impl fmt::Debug for Row {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.values()).finish()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Relation {
    header: Vec<Arc<str>>,
    rows: Vec<Row>,
}

impl Relation {
    /// Checks that field names are unique and every row has header arity.
    pub fn new(header: Vec<Arc<str>>, rows: Vec<Row>) -> Result<Relation, ToolError> {
        let mut seen = HashSet::new();
        for h in &header {
            if !seen.insert(h.clone()) {
                return Err(ToolError::Malformed(format!("duplicate field {h} in header")));
            }
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != header.len()) {
            return Err(ToolError::Malformed(format!(
                "row {} has {} values, header has {}",
                i + 1,
                r.len(),
                header.len()
            )));
        }
        Ok(Relation { header, rows })
    }

    pub fn from_values<S: AsRef<str>>(header: &[S], rows: Vec<Vec<Value>>) -> Result<Relation, ToolError> {
        Relation::new(
            header.iter().map(|h| Arc::from(h.as_ref())).collect(),
            rows.into_iter().map(Row::from).collect(),
        )
    }

    /// Builds without validation; callers guarantee the invariants.
    pub(crate) fn new_unchecked(header: Vec<Arc<str>>, rows: Vec<Row>) -> Relation {
        let r = Relation { header, rows };
        debug_assert!(r.is_well_formed());
        r
    }

    pub fn is_well_formed(&self) -> bool {
        let unique: HashSet<&Arc<str>> = self.header.iter().collect();
        unique.len() == self.header.len() && self.rows.iter().all(|r| r.len() == self.header.len())
    }

    pub fn header(&self) -> &[Arc<str>] {
        &self.header
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, field: &str) -> Option<usize> {
        self.header.iter().position(|h| &**h == field)
    }

    /// Index of `field`, or an unknown-field error.
    pub fn require(&self, field: &str) -> Result<usize, ToolError> {
        self.column(field).ok_or_else(|| ToolError::UnknownField {
            field: field.to_string(),
            header: self.header.iter().map(|h| h.to_string()).collect(),
        })
    }

    pub fn get(&self, row: usize, field: &str) -> Option<&Value> {
        Some(&self.rows.get(row)?[self.column(field)?])
    }

    pub fn to_term(&self) -> Term {
        let header = Term::list(self.header.iter().map(|h| Term::Atom(h.clone())));
        let rows = self.rows.iter().map(Row::to_term);
        Term::list(std::iter::once(header).chain(rows))
    }

    pub fn from_term(t: &Term) -> Result<Relation, ToolError> {
        let items = t
            .list_items()
            .ok_or_else(|| ToolError::Malformed(format!("expected [Header|Data], got {}", brief(t))))?;
        let Some((head, data)) = items.split_first() else {
            return Err(ToolError::Malformed("relation has no header".into()));
        };
        let header = head
            .list_items()
            .ok_or_else(|| ToolError::Malformed(format!("header must be a list, got {}", brief(head))))?
            .iter()
            .map(|h| match h {
                Term::Atom(a) | Term::Str(a) => Ok(a.clone()),
                other => Err(ToolError::Malformed(format!("field name must be an atom, got {other}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut rows = Vec::with_capacity(data.len());
        for (i, r) in data.iter().enumerate() {
            let cells = r
                .list_items()
                .ok_or_else(|| ToolError::Malformed(format!("row {} is not a list", i + 1)))?;
            let row = cells
                .iter()
                .map(Value::from_term)
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| ToolError::Malformed(format!("row {} is not ground", i + 1)))?;
            rows.push(Row::with_term(row, r.clone()));
        }
        Relation::new(header, rows)
    }
}

fn brief(t: &Term) -> String {
    let s = t.to_string();
    if s.chars().count() > 60 {
        format!("{}...", s.chars().take(60).collect::<String>())
    } else {
        s
    }
}

/// Aligned text table: header line, then one line per row.
impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<Vec<String>> = std::iter::once(self.header.iter().map(|h| h.to_string()).collect())
            .chain(self.rows.iter().map(|r| r.iter().map(|v| v.to_string()).collect()))
            .collect();
        let mut widths = vec![0; self.header.len()];
        for line in &cells {
            for (w, c) in widths.iter_mut().zip(line) {
                *w = (*w).max(c.chars().count());
            }
        }
        for (n, line) in cells.iter().enumerate() {
            if n > 0 {
                writeln!(f)?;
            }
            let mut text = String::new();
            for (i, c) in line.iter().enumerate() {
                if i > 0 {
                    text.push_str("  ");
                }
                text.push_str(c);
                if i + 1 < line.len() {
                    text.extend(std::iter::repeat_n(' ', widths[i] - c.chars().count()));
                }
            }
            f.write_str(&text)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{solve_all, KnowledgeBase, SolveBudget};

    fn parse(src: &str) -> Term {
        let kb = KnowledgeBase::new();
        let ans = solve_all(&kb, &format!("X = {src}"), SolveBudget::default()).unwrap();
        ans[0].get("X").unwrap().clone()
    }

    #[test]
    fn term_round_trip() {
        let t = parse("[[a,b],[1,x],[2.5,'GB']]");
        let r = Relation::from_term(&t).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r.get(1, "b"), Some(&Value::text("GB")));
        assert_eq!(r.to_term().to_string(), t.to_string());
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(Relation::from_term(&parse("[[a,b],[1]]")).is_err());
        assert!(Relation::from_term(&parse("[[a,a]]")).is_err());
        assert!(Relation::from_term(&parse("[]")).is_err());
        assert!(Relation::from_term(&parse("foo")).is_err());
    }

    #[test]
    fn renders_aligned() {
        let r = Relation::from_values(&["name", "n"], vec![vec!["a".into(), 10.into()]]).unwrap();
        assert_eq!(r.to_string(), "name  n\na     10");
    }
}
