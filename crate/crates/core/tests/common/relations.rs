//! Random relations and filter expressions, with a straightforward
//! row-by-row evaluator to check the relation tools against.

use std::cmp::Ordering;

use rand::seq::IndexedRandom;
use rand::Rng;

use logiplan::tools::{Relation, Value};

pub const HEADER: [&str; 4] = ["id", "k", "n", "f"];
const TEXTS: [&str; 3] = ["a", "b", "c"];

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Null,
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn number(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Float(f) => Some(*f),
            _ => None,
        }
    }

    pub fn to_value(&self) -> Value {
        match self {
            Cell::Null => Value::Null,
            Cell::Int(i) => Value::Int(*i),
            Cell::Float(f) => Value::Float(*f),
            Cell::Text(t) => Value::text(t),
            Cell::Bool(b) => Value::Bool(*b),
        }
    }

    /// Whether `v` holds the same value; floats compare numerically.
    pub fn same(&self, v: &Value) -> bool {
        match (self, v) {
            (Cell::Null, Value::Null) => true,
            (Cell::Int(a), Value::Int(b)) => a == b,
            (Cell::Float(a), Value::Float(b)) => a == b,
            (Cell::Text(a), Value::Text(b)) => a.as_str() == &**b,
            (Cell::Bool(a), Value::Bool(b)) => a == b,
            _ => false,
        }
    }
}

pub type Table = Vec<Vec<Cell>>;

pub fn random_table<R: Rng>(rng: &mut R) -> Table {
    let n = rng.random_range(0..=25);
    (0..n)
        .map(|i| {
            let k = if rng.random_bool(0.1) {
                Cell::Null
            } else {
                Cell::Text(TEXTS.choose(rng).unwrap().to_string())
            };
            let n = match rng.random_range(0..10) {
                0 => Cell::Null,
                1..=2 => Cell::Float(rng.random_range(-10..=10) as f64 + 0.5),
                _ => Cell::Int(rng.random_range(-5..=5)),
            };
            vec![Cell::Int(i as i64 * 3 % 17), k, n, Cell::Bool(rng.random_bool(0.5))]
        })
        .collect()
}

pub fn to_relation(t: &Table) -> Relation {
    Relation::from_values(&HEADER, t.iter().map(|r| r.iter().map(Cell::to_value).collect()).collect()).unwrap()
}

#[derive(Clone, Debug)]
pub enum Expr {
    /// Text column `k` against one text or a list of texts.
    Text {
        op: &'static str,
        values: Vec<String>,
        list: bool,
    },
    /// Numeric column against a number.
    Num {
        op: &'static str,
        field: &'static str,
        value: f64,
        int: bool,
    },
    Flag {
        op: &'static str,
        value: bool,
    },
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Not(Box<Expr>),
}

const OPS: [&str; 6] = ["eq", "ne", "lt", "le", "gt", "ge"];

pub fn random_expr<R: Rng>(rng: &mut R, depth: usize) -> Expr {
    let leaf = depth == 0 || rng.random_bool(0.5);
    if leaf {
        return match rng.random_range(0..4) {
            0 => {
                let list = rng.random_bool(0.3);
                let op = if list {
                    *["eq", "ne"].choose(rng).unwrap()
                } else {
                    *OPS.choose(rng).unwrap()
                };
                let n = if list { rng.random_range(1..=2) } else { 1 };
                Expr::Text {
                    op,
                    values: (0..n).map(|_| TEXTS.choose(rng).unwrap().to_string()).collect(),
                    list,
                }
            }
            1 | 2 => {
                let int = rng.random_bool(0.7);
                let value = if int {
                    rng.random_range(-5..=5) as f64
                } else {
                    rng.random_range(-6..=6) as f64 + 0.5
                };
                Expr::Num {
                    op: OPS.choose(rng).unwrap(),
                    field: if rng.random_bool(0.7) { "n" } else { "id" },
                    value,
                    int,
                }
            }
            _ => Expr::Flag {
                op: ["eq", "ne"].choose(rng).unwrap(),
                value: rng.random_bool(0.5),
            },
        };
    }
    match rng.random_range(0..3) {
        0 => Expr::And((0..rng.random_range(1..=3)).map(|_| random_expr(rng, depth - 1)).collect()),
        1 => Expr::Or((0..rng.random_range(1..=3)).map(|_| random_expr(rng, depth - 1)).collect()),
        _ => Expr::Not(Box::new(random_expr(rng, depth - 1))),
    }
}

fn num_text(x: f64, int: bool) -> String {
    if int {
        format!("{}", x as i64)
    } else {
        format!("{x:?}")
    }
}

impl Expr {
    /// The expression in the tools' list syntax.
    pub fn text(&self) -> String {
        let kids = |ks: &[Expr]| ks.iter().map(Expr::text).collect::<Vec<_>>().join(", ");
        match self {
            Expr::Text { op, values, list } => {
                let v = if *list {
                    format!("[{}]", values.iter().map(|s| format!("'{s}'")).collect::<Vec<_>>().join(", "))
                } else {
                    format!("'{}'", values[0])
                };
                format!("[{op}, k, {v}]")
            }
            Expr::Num { op, field, value, int } => {
                let v = num_text(*value, *int);
                // Parenthesised so that a negative number is one token.
                format!("[{op}, {field}, {}]", if *value < 0.0 { format!("({v})") } else { v })
            }
            Expr::Flag { op, value } => format!("[{op}, f, {value}]"),
            Expr::And(k) => format!("[and, {}]", kids(k)),
            Expr::Or(k) => format!("[or, {}]", kids(k)),
            Expr::Not(e) => format!("[not, {}]", e.text()),
        }
    }

    pub fn eval(&self, row: &[Cell]) -> bool {
        let ord = |op: &str, o: Ordering| match op {
            "eq" => o == Ordering::Equal,
            "ne" => o != Ordering::Equal,
            "lt" => o == Ordering::Less,
            "le" => o != Ordering::Greater,
            "gt" => o == Ordering::Greater,
            _ => o != Ordering::Less,
        };
        match self {
            Expr::Text { op, values, list } => match &row[1] {
                Cell::Text(s) if *list => values.contains(s) == (*op == "eq"),
                Cell::Text(s) => ord(op, s.as_str().cmp(values[0].as_str())),
                // A missing value equals nothing, so only `ne` holds.
                _ => *op == "ne",
            },
            Expr::Num { op, field, value, .. } => {
                let cell = if *field == "n" { &row[2] } else { &row[0] };
                match cell.number() {
                    Some(x) => ord(op, x.partial_cmp(value).unwrap()),
                    None => *op == "ne",
                }
            }
            Expr::Flag { op, value } => match &row[3] {
                Cell::Bool(b) => (b == value) == (*op == "eq"),
                _ => unreachable!(),
            },
            Expr::And(k) => k.iter().all(|e| e.eval(row)),
            Expr::Or(k) => k.iter().any(|e| e.eval(row)),
            Expr::Not(e) => !e.eval(row),
        }
    }
}

pub fn filter(t: &Table, e: &Expr) -> Table {
    t.iter().filter(|r| e.eval(r)).cloned().collect()
}

pub fn project(t: &Table, cols: &[usize]) -> Table {
    t.iter().map(|r| cols.iter().map(|&c| r[c].clone()).collect()).collect()
}

/// Group rows in order of first appearance and reduce column `col`.
pub fn aggregate(t: &Table, group: &[usize], op: &str, col: usize) -> Table {
    let mut keys: Vec<Vec<Cell>> = Vec::new();
    let mut members: Vec<Vec<&Vec<Cell>>> = Vec::new();
    for r in t {
        let key: Vec<Cell> = group.iter().map(|&c| r[c].clone()).collect();
        match keys.iter().position(|k| *k == key) {
            Some(i) => members[i].push(r),
            None => {
                keys.push(key);
                members.push(vec![r]);
            }
        }
    }
    if keys.is_empty() && group.is_empty() {
        keys.push(Vec::new());
        members.push(Vec::new());
    }
    keys.into_iter()
        .zip(members)
        .map(|(mut key, rows)| {
            key.push(reduce(&rows.iter().map(|r| &r[col]).collect::<Vec<_>>(), op));
            key
        })
        .collect()
}

fn reduce(cells: &[&Cell], op: &str) -> Cell {
    if op == "count" {
        return Cell::Int(cells.len() as i64);
    }
    // Booleans count as 0 and 1.
    let present: Vec<Cell> = cells
        .iter()
        .filter(|c| !matches!(c, Cell::Null))
        .map(|c| match c {
            Cell::Bool(b) => Cell::Int(*b as i64),
            other => (*other).clone(),
        })
        .collect();
    let all_int = present.iter().all(|c| matches!(c, Cell::Int(_)));
    let total: f64 = present.iter().map(|c| c.number().unwrap()).sum();
    match op {
        "sum" if all_int => Cell::Int(present.iter().map(|c| if let Cell::Int(i) = c { *i } else { 0 }).sum()),
        "sum" => Cell::Float(total),
        "avg" if present.is_empty() => Cell::Null,
        "avg" => Cell::Float(total / present.len() as f64),
        _ => {
            let mut best: Option<&Cell> = None;
            for c in &present {
                let better = match best {
                    None => true,
                    Some(b) if op == "min" => c.number() < b.number(),
                    Some(b) => c.number() > b.number(),
                };
                if better {
                    best = Some(c);
                }
            }
            best.cloned().unwrap_or(Cell::Null)
        }
    }
}

fn rank(c: &Cell) -> u8 {
    match c {
        Cell::Null => 0,
        Cell::Int(_) | Cell::Float(_) => 1,
        _ => 2,
    }
}

fn sort_key_cmp(a: &Cell, b: &Cell) -> Ordering {
    match (a, b) {
        (Cell::Text(x), Cell::Text(y)) => x.cmp(y),
        _ if rank(a) == 1 && rank(b) == 1 => a.number().unwrap().partial_cmp(&b.number().unwrap()).unwrap(),
        _ => rank(a).cmp(&rank(b)),
    }
}

/// Stable sort on `col`; `k` keeps the first rows.
pub fn sort(t: &Table, col: usize, desc: bool, k: Option<usize>) -> Table {
    let mut rows = t.clone();
    // Insertion sort: moves a row left only past strictly greater rows.
    for i in 1..rows.len() {
        let mut j = i;
        while j > 0 {
            let o = sort_key_cmp(&rows[j - 1][col], &rows[j][col]);
            let out_of_order = if desc { o == Ordering::Less } else { o == Ordering::Greater };
            if !out_of_order {
                break;
            }
            rows.swap(j - 1, j);
            j -= 1;
        }
    }
    if let Some(k) = k {
        rows.truncate(k);
    }
    rows
}

/// Whether `rel` holds exactly `expected`, with header `header`.
pub fn same_table(rel: &Relation, header: &[&str], expected: &Table) -> Result<(), String> {
    let got: Vec<&str> = rel.header().iter().map(|h| &**h).collect();
    if got != header {
        return Err(format!("header {got:?}, expected {header:?}"));
    }
    if rel.len() != expected.len() {
        return Err(format!("{} rows, expected {}", rel.len(), expected.len()));
    }
    for (i, (row, want)) in rel.rows().iter().zip(expected).enumerate() {
        if row.len() != want.len() || !row.iter().zip(want).all(|(v, c)| c.same(v)) {
            return Err(format!("row {i}: {row:?}, expected {want:?}"));
        }
    }
    Ok(())
}

/// One random table put through filter, project, aggregate and sort, each
/// compared with the row-by-row evaluator.
pub fn check_random_case<R: Rng>(rng: &mut R) -> Result<(), String> {
    use logiplan::tools::ops;
    use logiplan::tools::{AggOp, FilterExpr, Limit, Order};
    use logiplan::Execution;

    let table = random_table(rng);
    let rel = to_relation(&table);

    let expr = random_expr(rng, 3);
    let fe = FilterExpr::from_term(&super::term(&expr.text())).map_err(|e| e.to_string())?;
    let want = filter(&table, &expr);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let got = ops::filter(&rel, &fe, exec).map_err(|e| e.to_string())?;
        same_table(&got, &HEADER, &want).map_err(|e| format!("filter {} ({exec:?}): {e}", expr.text()))?;
        same_table(&ops::count(&got), &["count"], &vec![vec![Cell::Int(want.len() as i64)]])
            .map_err(|e| format!("count after {}: {e}", expr.text()))?;
    }

    let mut cols: Vec<usize> = (0..HEADER.len()).filter(|_| rng.random_bool(0.5)).collect();
    if cols.is_empty() {
        cols.push(rng.random_range(0..HEADER.len()));
    }
    let names: Vec<String> = cols.iter().map(|&c| HEADER[c].to_string()).collect();
    let got = ops::project(&rel, &names).map_err(|e| e.to_string())?;
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    same_table(&got, &header, &project(&table, &cols)).map_err(|e| format!("project {names:?}: {e}"))?;

    let group: Vec<usize> = [1usize, 3].into_iter().filter(|_| rng.random_bool(0.5)).collect();
    let op = *AggOp::ALL.choose(rng).unwrap();
    let col = *[0usize, 2, 3].choose(rng).unwrap();
    let gnames: Vec<String> = group.iter().map(|&c| HEADER[c].to_string()).collect();
    let got = ops::aggregate(&rel, &gnames, op, HEADER[col]).map_err(|e| e.to_string())?;
    let out = format!("{}_{}", op.name(), HEADER[col]);
    let mut header: Vec<&str> = gnames.iter().map(String::as_str).collect();
    header.push(&out);
    same_table(&got, &header, &aggregate(&table, &group, op.name(), col))
        .map_err(|e| format!("aggregate {gnames:?} {} {}: {e}", op.name(), HEADER[col]))?;

    let col = rng.random_range(0..3);
    let desc = rng.random_bool(0.5);
    let k = if rng.random_bool(0.5) {
        Some(rng.random_range(1..=10))
    } else {
        None
    };
    let got = ops::sort_rel(
        &rel,
        HEADER[col],
        if desc { Order::Desc } else { Order::Asc },
        k.map_or(Limit::All, Limit::Top),
    )
    .map_err(|e| e.to_string())?;
    same_table(&got, &HEADER, &sort(&table, col, desc, k)).map_err(|e| format!("sort {} desc={desc} k={k:?}: {e}", HEADER[col]))?;
    Ok(())
}
