//! Relation-algebra operations behind the tool predicates.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::exec::Execution;

use super::filter::FilterExpr;
use super::relation::{Relation, Row};
use super::value::Value;
use super::ToolError;

/// Named tables visible to `query_data/4`.
#[derive(Clone, Debug, Default)]
pub struct TableSet {
    tables: BTreeMap<String, Arc<Relation>>,
}

impl TableSet {
    pub fn new() -> TableSet {
        TableSet::default()
    }

    pub fn insert(&mut self, name: &str, rel: Relation) {
        self.tables.insert(name.to_string(), Arc::new(rel));
    }

    pub fn get(&self, name: &str) -> Result<&Arc<Relation>, ToolError> {
        self.tables.get(name).ok_or_else(|| ToolError::UnknownTable {
            table: name.to_string(),
            known: self.tables.keys().cloned().collect(),
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tables.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Arc<Relation>)> {
        self.tables.iter().map(|(k, v)| (k.as_str(), v))
    }
}

pub fn query_data(
    tables: &TableSet,
    table: &str,
    expr: &FilterExpr,
    projection: &[String],
    exec: Execution,
) -> Result<Relation, ToolError> {
    let rel = tables.get(table)?;
    for f in projection {
        rel.require(f)?;
    }
    let kept = filter(rel, expr, exec)?;
    if projection.is_empty() {
        Ok(kept)
    } else {
        project(&kept, projection)
    }
}

pub fn filter(rel: &Relation, expr: &FilterExpr, exec: Execution) -> Result<Relation, ToolError> {
    let compiled = expr.compile(rel)?;
    let keep = exec.positions(rel.rows(), |row| compiled.eval(row));
    let rows = keep.into_iter().map(|i| rel.rows()[i].clone()).collect();
    Ok(Relation::new_unchecked(rel.header().to_vec(), rows))
}

pub fn project(rel: &Relation, fields: &[String]) -> Result<Relation, ToolError> {
    if fields.is_empty() {
        return Err(ToolError::EmptyProjection);
    }
    let cols = fields.iter().map(|f| rel.require(f)).collect::<Result<Vec<_>, _>>()?;
    let header: Vec<Arc<str>> = cols.iter().map(|&c| rel.header()[c].clone()).collect();
    let rows = rel
        .rows()
        .iter()
        .map(|r| cols.iter().map(|&c| r[c].clone()).collect::<Row>())
        .collect();
    // A repeated projection field gives a duplicate header name.
    Relation::new(header, rows)
}

pub fn count(rel: &Relation) -> Relation {
    Relation::new_unchecked(vec![Arc::from("count")], vec![Row::from(vec![Value::Int(rel.len() as i64)])])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggOp {
    Sum,
    Avg,
    Min,
    Max,
    Count,
}

impl AggOp {
    pub const ALL: [AggOp; 5] = [AggOp::Sum, AggOp::Avg, AggOp::Min, AggOp::Max, AggOp::Count];

    pub fn name(self) -> &'static str {
        match self {
            AggOp::Sum => "sum",
            AggOp::Avg => "avg",
            AggOp::Min => "min",
            AggOp::Max => "max",
            AggOp::Count => "count",
        }
    }

    pub fn parse(s: &str) -> Option<AggOp> {
        AggOp::ALL.into_iter().find(|op| op.name() == s)
    }
}

/// Hashable image of a value for grouping.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Key {
    Null,
    Bool(bool),
    Int(i64),
    Float(u64),
    Text(Arc<str>),
    List(Vec<Key>),
}

impl Key {
    fn of(v: &Value) -> Key {
        match v {
            Value::Null => Key::Null,
            Value::Bool(b) => Key::Bool(*b),
            Value::Int(i) => Key::Int(*i),
            Value::Float(f) if *f == 0.0 => Key::Float(0),
            Value::Float(f) => Key::Float(f.to_bits()),
            Value::Text(t) => Key::Text(t.clone()),
            Value::List(items) => Key::List(items.iter().map(Key::of).collect()),
        }
    }
}

enum Acc {
    Int(i64),
    Float(f64),
}

/// Groups rows by `group_by` (in order of first appearance) and applies
/// `op` to `field` within each group.
pub fn aggregate(rel: &Relation, group_by: &[String], op: AggOp, field: &str) -> Result<Relation, ToolError> {
    let gcols = group_by.iter().map(|f| rel.require(f)).collect::<Result<Vec<_>, _>>()?;
    let col = rel.require(field)?;
    let mut index: HashMap<Vec<Key>, usize> = HashMap::new();
    let mut groups: Vec<(Row, Vec<usize>)> = Vec::new();
    for (i, row) in rel.rows().iter().enumerate() {
        let key: Vec<Key> = gcols.iter().map(|&c| Key::of(&row[c])).collect();
        let g = *index.entry(key).or_insert_with(|| {
            groups.push((gcols.iter().map(|&c| row[c].clone()).collect(), Vec::new()));
            groups.len() - 1
        });
        groups[g].1.push(i);
    }
    if groups.is_empty() && gcols.is_empty() {
        groups.push((Row::from(Vec::new()), Vec::new()));
    }
    let mut header: Vec<Arc<str>> = gcols.iter().map(|&c| rel.header()[c].clone()).collect();
    header.push(Arc::from(format!("{}_{}", op.name(), field).as_str()));
    let mut rows = Vec::with_capacity(groups.len());
    for (key, members) in groups {
        let cells = members.iter().map(|&i| &rel.rows()[i][col]);
        let v = reduce(op, field, cells)?;
        let mut row = key.to_vec();
        row.push(v);
        rows.push(Row::from(row));
    }
    Relation::new(header, rows)
}

fn reduce<'a>(op: AggOp, field: &str, cells: impl Iterator<Item = &'a Value>) -> Result<Value, ToolError> {
    let mut n = 0usize;
    let mut sum = Acc::Int(0);
    let mut best: Option<(&Value, f64)> = None;
    for v in cells {
        n += 1;
        if op == AggOp::Count {
            continue;
        }
        let x = match v {
            Value::Null => {
                n -= 1;
                continue;
            }
            Value::Int(i) => Acc::Int(*i),
            Value::Bool(b) => Acc::Int(*b as i64),
            Value::Float(f) => Acc::Float(*f),
            other => {
                return Err(ToolError::Type(format!(
                    "{} over {field} needs numeric values, found {other}",
                    op.name()
                )))
            }
        };
        let xf = match x {
            Acc::Int(i) => i as f64,
            Acc::Float(f) => f,
        };
        sum = match (sum, x) {
            (Acc::Int(a), Acc::Int(b)) => match a.checked_add(b) {
                Some(s) => Acc::Int(s),
                None => Acc::Float(a as f64 + b as f64),
            },
            (Acc::Int(a), Acc::Float(b)) => Acc::Float(a as f64 + b),
            (Acc::Float(a), Acc::Int(b)) => Acc::Float(a + b as f64),
            (Acc::Float(a), Acc::Float(b)) => Acc::Float(a + b),
        };
        let better = match best {
            None => true,
            Some((_, b)) => (op == AggOp::Min && xf < b) || (op == AggOp::Max && xf > b),
        };
        if better {
            best = Some((v, xf));
        }
    }
    let total = |s: &Acc| match s {
        Acc::Int(i) => *i as f64,
        Acc::Float(f) => *f,
    };
    Ok(match op {
        AggOp::Count => Value::Int(n as i64),
        AggOp::Sum => match sum {
            Acc::Int(i) => Value::Int(i),
            Acc::Float(f) => Value::Float(f),
        },
        AggOp::Avg if n == 0 => Value::Null,
        AggOp::Avg => Value::Float(total(&sum) / n as f64),
        AggOp::Min | AggOp::Max => match best {
            None => Value::Null,
            Some((Value::Bool(b), _)) => Value::Int(*b as i64),
            Some((v, _)) => v.clone(),
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    Asc,
    Desc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Limit {
    All,
    Top(usize),
}

/// Stable sort on one field, then truncation.
pub fn sort_rel(rel: &Relation, field: &str, order: Order, limit: Limit) -> Result<Relation, ToolError> {
    let col = rel.require(field)?;
    if limit == Limit::Top(0) {
        return Err(ToolError::InvalidLimit("0".into()));
    }
    let mut rows = rel.rows().to_vec();
    match order {
        Order::Asc => rows.sort_by(|a, b| a[col].sort_cmp(&b[col])),
        Order::Desc => rows.sort_by(|a, b| b[col].sort_cmp(&a[col])),
    }
    if let Limit::Top(k) = limit {
        rows.truncate(k);
    }
    Ok(Relation::new_unchecked(rel.header().to_vec(), rows))
}

pub const ANOMALY_THRESHOLD: f64 = 3.0;
/// Scales the median absolute deviation to a normal standard deviation.
pub const MAD_SCALE: f64 = 1.4826;

pub const AMOUNT_FIELD: &str = "eur_amount";
pub const GROUP_FIELDS: [&str; 2] = ["ip_country", "issuing_country"];

pub fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Flags each row by a robust z-score of its amount within its country group.
pub fn anomaly(rel: &Relation) -> Result<Relation, ToolError> {
    let amount = rel
        .column(AMOUNT_FIELD)
        .ok_or_else(|| ToolError::MissingField(AMOUNT_FIELD.into()))?;
    let group = GROUP_FIELDS
        .iter()
        .find_map(|f| rel.column(f))
        .ok_or_else(|| ToolError::MissingField(GROUP_FIELDS.join(" or ")))?;
    let mut groups: HashMap<Key, Vec<f64>> = HashMap::new();
    for row in rel.rows() {
        if let Some(x) = row[amount].as_number() {
            groups.entry(Key::of(&row[group])).or_default().push(x);
        }
    }
    // (median, scaled MAD) per group
    let stats: HashMap<Key, (f64, f64)> = groups
        .into_iter()
        .map(|(k, mut xs)| {
            xs.sort_by(f64::total_cmp);
            let med = median(&xs);
            let mut dev: Vec<f64> = xs.iter().map(|x| (x - med).abs()).collect();
            dev.sort_by(f64::total_cmp);
            (k, (med, MAD_SCALE * median(&dev)))
        })
        .collect();
    let mut header = vec![Arc::from("is_anomaly")];
    header.extend(rel.header().iter().cloned());
    let rows = rel
        .rows()
        .iter()
        .map(|row| {
            let flag = match (row[amount].as_number(), stats.get(&Key::of(&row[group]))) {
                (Some(x), Some(&(med, mad))) => {
                    if mad > 0.0 {
                        (x - med).abs() / mad > ANOMALY_THRESHOLD
                    } else {
                        x != med
                    }
                }
                _ => false,
            };
            std::iter::once(Value::Int(flag as i64)).chain(row.iter().cloned()).collect::<Row>()
        })
        .collect();
    Relation::new(header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tools::filter::CmpOp;

    fn rel(header: &[&str], rows: Vec<Vec<Value>>) -> Relation {
        Relation::from_values(header, rows).unwrap()
    }

    fn cv() -> Relation {
        rel(
            &["c", "v"],
            vec![vec!["x".into(), 1.into()], vec!["x".into(), 3.into()], vec!["y".into(), 5.into()]],
        )
    }

    fn ab() -> Relation {
        rel(&["a", "b"], vec![vec![1.into(), 2.into()], vec![3.into(), 4.into()]])
    }

    fn names(fs: &[&str]) -> Vec<String> {
        fs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn filter_examples() {
        let out = filter(&ab(), &FilterExpr::leaf(CmpOp::Gt, "a", 2), Execution::Sequential).unwrap();
        assert_eq!(out, rel(&["a", "b"], vec![vec![3.into(), 4.into()]]));
        let not = FilterExpr::Not(Box::new(FilterExpr::leaf(CmpOp::Eq, "a", 1)));
        assert_eq!(filter(&ab(), &not, Execution::Parallel).unwrap(), out);
        let bad = filter(&ab(), &FilterExpr::leaf(CmpOp::Eq, "x", 1), Execution::Sequential);
        assert!(matches!(bad, Err(ToolError::UnknownField { .. })));
    }

    #[test]
    fn project_examples() {
        assert_eq!(
            project(&ab(), &names(&["b"])).unwrap(),
            rel(&["b"], vec![vec![2.into()], vec![4.into()]])
        );
        let swapped = project(&ab(), &names(&["b", "a"])).unwrap();
        assert_eq!(swapped.rows()[0].to_vec(), vec![Value::Int(2), Value::Int(1)]);
        assert!(matches!(project(&ab(), &[]), Err(ToolError::EmptyProjection)));
    }

    #[test]
    fn count_examples() {
        assert_eq!(count(&ab()), rel(&["count"], vec![vec![2.into()]]));
        assert_eq!(count(&rel(&["a"], vec![])), rel(&["count"], vec![vec![0.into()]]));
    }

    #[test]
    fn aggregate_examples() {
        let s = aggregate(&cv(), &names(&["c"]), AggOp::Sum, "v").unwrap();
        assert_eq!(
            s,
            rel(&["c", "sum_v"], vec![vec!["x".into(), 4.into()], vec!["y".into(), 5.into()]])
        );
        let a = aggregate(&cv(), &[], AggOp::Avg, "v").unwrap();
        assert_eq!(a, rel(&["avg_v"], vec![vec![3.0.into()]]));
        assert!(matches!(aggregate(&cv(), &names(&["c"]), AggOp::Sum, "c"), Err(ToolError::Type(_))));
        let m = aggregate(&cv(), &names(&["c"]), AggOp::Max, "v").unwrap();
        assert_eq!(m.rows()[0][1], Value::Int(3));
        let n = aggregate(&cv(), &[], AggOp::Count, "c").unwrap();
        assert_eq!(n.rows()[0][0], Value::Int(3));
    }

    #[test]
    fn sort_examples() {
        let r = rel(
            &["c", "v"],
            vec![vec!["x".into(), 1.into()], vec!["y".into(), 5.into()], vec!["z".into(), 3.into()]],
        );
        let top = sort_rel(&r, "v", Order::Desc, Limit::Top(2)).unwrap();
        assert_eq!(top, rel(&["c", "v"], vec![vec!["y".into(), 5.into()], vec!["z".into(), 3.into()]]));
        let asc = sort_rel(&r, "v", Order::Asc, Limit::All).unwrap();
        let vs: Vec<_> = asc.rows().iter().map(|row| row[1].clone()).collect();
        assert_eq!(vs, vec![Value::Int(1), Value::Int(3), Value::Int(5)]);
        assert!(sort_rel(&r, "v", Order::Asc, Limit::Top(0)).is_err());
    }

    #[test]
    fn anomaly_examples() {
        let rows = [10, 10, 10, 10, 1000]
            .iter()
            .map(|&x| vec![Value::text("SE"), Value::Float(x as f64)])
            .collect();
        let out = anomaly(&rel(&["ip_country", "eur_amount"], rows)).unwrap();
        let flags: Vec<_> = out.rows().iter().map(|r| r[0].clone()).collect();
        assert_eq!(flags, [0, 0, 0, 0, 1].map(Value::Int));
        assert_eq!(&*out.header()[0], "is_anomaly");

        let flat = (0..4).map(|_| vec![Value::text("SE"), Value::Float(5.0)]).collect();
        let out = anomaly(&rel(&["issuing_country", "eur_amount"], flat)).unwrap();
        assert!(out.rows().iter().all(|r| r[0] == Value::Int(0)));

        assert!(matches!(anomaly(&ab()), Err(ToolError::MissingField(_))));
    }
}
