//! Registers the tools of a registry as foreign predicates of a knowledge
//! base.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, Weak};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::data::{Dataset, FeeEngine};
use crate::exec::Execution;
use crate::logic::term::Compound;
use crate::logic::{ArgMode, ForeignError, ForeignPredicate, KbError, KnowledgeBase, PredKey, Provenance, Term};

use super::filter::FilterExpr;
use super::ops::{self, AggOp, Limit, Order, TableSet};
use super::registry::{Implementation, ToolRegistry};
use super::relation::{Relation, Row};
use super::value::Value;
use super::ToolError;

/// What the tools operate on.
#[derive(Clone, Debug)]
pub struct ToolContext {
    pub tables: Arc<TableSet>,
    pub fees: Option<Arc<FeeEngine>>,
    /// Directory for view-stub output.
    pub out_dir: PathBuf,
    pub exec: Execution,
    cache: Arc<RelationCache>,
}

/// Remembers the relation behind each tool output term, keyed by the
/// identity of the term's list cell. The solver hands bound terms back
/// unchanged, so a later tool receiving the same term skips the decode.
#[derive(Default)]
struct RelationCache {
    entries: Mutex<HashMap<usize, (Weak<Compound>, Arc<Relation>)>>,
}

const CACHE_SWEEP: usize = 256;

impl RelationCache {
    fn get(&self, t: &Term) -> Option<Arc<Relation>> {
        let Term::Compound(c) = t else { return None };
        let entries = self.entries.lock().ok()?;
        let (cell, rel) = entries.get(&(Arc::as_ptr(c) as usize))?;
        // A live weak pointer to the same address means it is the same cell.
        cell.upgrade().filter(|live| Arc::ptr_eq(live, c)).map(|_| rel.clone())
    }

    fn put(&self, t: &Term, rel: Arc<Relation>) {
        let Term::Compound(c) = t else { return };
        let Ok(mut entries) = self.entries.lock() else { return };
        if entries.len() >= CACHE_SWEEP {
            entries.retain(|_, (cell, _)| cell.strong_count() > 0);
        }
        entries.insert(Arc::as_ptr(c) as usize, (Arc::downgrade(c), rel));
    }
}

impl fmt::Debug for RelationCache {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.entries.lock().map_or(0, |e| e.len());
        write!(f, "RelationCache({n})")
    }
}

impl ToolContext {
    pub fn new(tables: TableSet) -> ToolContext {
        ToolContext {
            tables: Arc::new(tables),
            fees: None,
            out_dir: PathBuf::from("out"),
            exec: Execution::default(),
            cache: Arc::default(),
        }
    }

    pub fn from_dataset(ds: &Dataset) -> ToolContext {
        ToolContext {
            fees: Some(Arc::new(FeeEngine::new(ds))),
            ..ToolContext::new(ds.tables())
        }
    }

    pub fn with_out_dir(mut self, dir: impl Into<PathBuf>) -> ToolContext {
        self.out_dir = dir.into();
        self
    }

    pub fn with_execution(mut self, exec: Execution) -> ToolContext {
        self.exec = exec;
        self
    }

    fn fees(&self) -> Result<&FeeEngine, ToolError> {
        self.fees
            .as_deref()
            .ok_or_else(|| ToolError::Data("no payment dataset is loaded".into()))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum InstallError {
    #[error("no core implementation for {0}")]
    NoImplementation(PredKey),
    #[error("definition of {key} does not define it: {reason}")]
    BadDefinition { key: PredKey, reason: String },
    #[error(transparent)]
    Kb(#[from] KbError),
}

type ToolFn = fn(&ToolContext, &[Term]) -> Result<Vec<Term>, ToolError>;

fn core_impl(name: &str, arity: usize) -> Option<ToolFn> {
    Some(match (name, arity) {
        ("query_data", 4) => query_data,
        ("filter", 3) => filter,
        ("project", 3) => project,
        ("count", 2) => count,
        ("aggregate", 4) => aggregate,
        ("sort_rel", 5) => sort_rel,
        ("anomaly", 2) => anomaly,
        ("calculate_transaction_fee", 2) => transaction_fees,
        ("fee_what_if", 4) => fee_what_if,
        ("merchant_monthly_stats", 3) => monthly_stats,
        ("calculate_merchant_fraud_rate", 3) => fraud_rate,
        _ => return None,
    })
}

struct Tool {
    name: String,
    modes: Vec<ArgMode>,
    ctx: Arc<ToolContext>,
    run: ToolFn,
}

impl ForeignPredicate for Tool {
    fn modes(&self) -> &[ArgMode] {
        &self.modes
    }

    fn call(&self, args: &[Term]) -> Result<Option<Vec<Term>>, ForeignError> {
        let inputs: Vec<Term> = args
            .iter()
            .zip(&self.modes)
            .filter(|(_, m)| **m == ArgMode::In)
            .map(|(a, _)| a.clone())
            .collect();
        match (self.run)(&self.ctx, &inputs) {
            Ok(out) => Ok(Some(out)),
            Err(e) => Err(ForeignError(format!("{}: {e}", self.name))),
        }
    }
}

struct ViewStub {
    name: String,
    modes: Vec<ArgMode>,
    ctx: Arc<ToolContext>,
}

static VIEW_SEQ: AtomicU64 = AtomicU64::new(0);

impl ForeignPredicate for ViewStub {
    fn modes(&self) -> &[ArgMode] {
        &self.modes
    }

    fn call(&self, args: &[Term]) -> Result<Option<Vec<Term>>, ForeignError> {
        let fail = |e: String| ForeignError(format!("{}: {e}", self.name));
        let rel = Relation::from_term(&args[0]).map_err(|e| fail(e.to_string()))?;
        let millis = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis());
        let seq = VIEW_SEQ.fetch_add(1, Ordering::Relaxed);
        std::fs::create_dir_all(&self.ctx.out_dir).map_err(|e| fail(e.to_string()))?;
        let path = self.ctx.out_dir.join(format!("{}-{millis}-{seq}.json", self.name));
        let doc = serde_json::json!({
            "view": self.name,
            "header": rel.header().iter().map(|h| h.to_string()).collect::<Vec<_>>(),
            "rows": rel.rows().iter().map(|r| r.iter().map(Value::to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        });
        std::fs::write(&path, doc.to_string()).map_err(|e| fail(format!("{}: {e}", path.display())))?;
        Ok(Some(Vec::new()))
    }
}

/// Registers every tool of `registry`: core tools and view stubs as
/// foreign predicates, composed tools by consulting their definitions.
pub fn install_tools(kb: &mut KnowledgeBase, registry: &ToolRegistry, ctx: Arc<ToolContext>) -> Result<(), InstallError> {
    for spec in registry.tools() {
        let key = spec.key();
        match spec.implementation {
            Implementation::Core => {
                let run = core_impl(&spec.name, spec.arity).ok_or_else(|| InstallError::NoImplementation(key.clone()))?;
                kb.register_foreign(
                    key,
                    Arc::new(Tool {
                        name: spec.name.clone(),
                        modes: spec.modes(),
                        ctx: ctx.clone(),
                        run,
                    }),
                )?;
            }
            Implementation::ViewStub => {
                kb.register_foreign(
                    key,
                    Arc::new(ViewStub {
                        name: spec.name.clone(),
                        modes: spec.modes(),
                        ctx: ctx.clone(),
                    }),
                )?;
            }
            Implementation::Composed => {}
        }
    }
    // Definitions go in after all foreign tools so they may refer to any.
    for spec in registry.tools().iter().filter(|s| s.implementation == Implementation::Composed) {
        let key = spec.key();
        let text = spec.definition.as_deref().unwrap_or_default();
        let clauses = crate::logic::kb::parse_program(text).map_err(|e| InstallError::BadDefinition {
            key: key.clone(),
            reason: e.to_string(),
        })?;
        if clauses.is_empty() || clauses.iter().any(|c| c.key() != key) {
            return Err(InstallError::BadDefinition {
                key,
                reason: "every clause must have this head".into(),
            });
        }
        for c in clauses {
            kb.assert_clause(crate::logic::Clause::new(c.head.clone(), c.body.clone(), Provenance::Builtin)?)?;
        }
    }
    Ok(())
}

impl Value {
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::Value as J;
        match self {
            Value::Null => J::Null,
            Value::Bool(b) => J::Bool(*b),
            Value::Int(i) => J::from(*i),
            Value::Float(f) => serde_json::Number::from_f64(*f).map_or(J::Null, J::Number),
            Value::Text(t) => J::String(t.to_string()),
            Value::List(items) => J::Array(items.iter().map(Value::to_json).collect()),
        }
    }
}

fn text_arg(t: &Term, what: &str) -> Result<String, ToolError> {
    match t {
        Term::Atom(a) | Term::Str(a) => Ok(a.to_string()),
        other => Err(ToolError::Type(format!("{what} must be an atom, got {other}"))),
    }
}

fn fields_arg(t: &Term, what: &str) -> Result<Vec<String>, ToolError> {
    t.list_items()
        .ok_or_else(|| ToolError::Type(format!("{what} must be a list of field names, got {t}")))?
        .iter()
        .map(|f| text_arg(f, "field name"))
        .collect()
}

fn rel_arg(ctx: &ToolContext, t: &Term) -> Result<Arc<Relation>, ToolError> {
    if let Some(rel) = ctx.cache.get(t) {
        return Ok(rel);
    }
    let rel = Arc::new(Relation::from_term(t)?);
    ctx.cache.put(t, rel.clone());
    Ok(rel)
}

fn out(ctx: &ToolContext, rel: Relation) -> Result<Vec<Term>, ToolError> {
    debug_assert!(rel.is_well_formed());
    let term = rel.to_term();
    ctx.cache.put(&term, Arc::new(rel));
    Ok(vec![term])
}

fn query_data(ctx: &ToolContext, a: &[Term]) -> Result<Vec<Term>, ToolError> {
    let table = text_arg(&a[0], "table name")?;
    let expr = FilterExpr::from_term(&a[1])?;
    let projection = fields_arg(&a[2], "projection")?;
    out(ctx, ops::query_data(&ctx.tables, &table, &expr, &projection, ctx.exec)?)
}

fn filter(ctx: &ToolContext, a: &[Term]) -> Result<Vec<Term>, ToolError> {
    out(ctx, ops::filter(&*rel_arg(ctx, &a[0])?, &FilterExpr::from_term(&a[1])?, ctx.exec)?)
}

fn project(ctx: &ToolContext, a: &[Term]) -> Result<Vec<Term>, ToolError> {
    out(ctx, ops::project(&*rel_arg(ctx, &a[0])?, &fields_arg(&a[1], "projection")?)?)
}

fn count(ctx: &ToolContext, a: &[Term]) -> Result<Vec<Term>, ToolError> {
    out(ctx, ops::count(&*rel_arg(ctx, &a[0])?))
}

fn aggregate(ctx: &ToolContext, a: &[Term]) -> Result<Vec<Term>, ToolError> {
    let rel = rel_arg(ctx, &a[0])?;
    let group_by = fields_arg(&a[1], "group-by")?;
    let spec = fields_arg(&a[2], "aggregate spec")?;
    let [op, field] = spec.as_slice() else {
        return Err(ToolError::Malformed(format!("aggregate spec must be [Op, Field], got {}", a[2])));
    };
    let op = AggOp::parse(op).ok_or_else(|| ToolError::Malformed(format!("aggregate op must be sum, avg, min, max or count, got {op}")))?;
    out(ctx, ops::aggregate(&rel, &group_by, op, field)?)
}

fn sort_rel(ctx: &ToolContext, a: &[Term]) -> Result<Vec<Term>, ToolError> {
    let rel = rel_arg(ctx, &a[0])?;
    let field = text_arg(&a[1], "sort field")?;
    let order = match text_arg(&a[2], "order")?.as_str() {
        "asc" => Order::Asc,
        "desc" => Order::Desc,
        other => return Err(ToolError::Malformed(format!("order must be asc or desc, got {other}"))),
    };
    let limit = match &a[3] {
        Term::Atom(s) if &**s == "all" => Limit::All,
        Term::Int(k) if *k > 0 => Limit::Top(*k as usize),
        other => return Err(ToolError::InvalidLimit(other.to_string())),
    };
    out(ctx, ops::sort_rel(&rel, &field, order, limit)?)
}

fn anomaly(ctx: &ToolContext, a: &[Term]) -> Result<Vec<Term>, ToolError> {
    out(ctx, ops::anomaly(&*rel_arg(ctx, &a[0])?)?)
}

fn transaction_fees(ctx: &ToolContext, a: &[Term]) -> Result<Vec<Term>, ToolError> {
    out(ctx, ctx.fees()?.annotate(&*rel_arg(ctx, &a[0])?, None, ctx.exec)?)
}

fn fee_what_if(ctx: &ToolContext, a: &[Term]) -> Result<Vec<Term>, ToolError> {
    let field = text_arg(&a[1], "field")?;
    let value = Value::from_term(&a[2]).ok_or_else(|| ToolError::Type("value must be ground".into()))?;
    out(ctx, ctx.fees()?.annotate(&*rel_arg(ctx, &a[0])?, Some((&field, &value)), ctx.exec)?)
}

fn merchant_year(ctx: &ToolContext, a: &[Term]) -> Result<(String, i32), ToolError> {
    let merchant = text_arg(&a[0], "merchant")?;
    if !ctx.fees()?.has_merchant(&merchant) {
        return Err(ToolError::Data(format!("unknown merchant {merchant}")));
    }
    let year = match &a[1] {
        Term::Int(y) => *y as i32,
        other => return Err(ToolError::Type(format!("year must be an integer, got {other}"))),
    };
    Ok((merchant, year))
}

fn monthly_stats(ctx: &ToolContext, a: &[Term]) -> Result<Vec<Term>, ToolError> {
    let (merchant, year) = merchant_year(ctx, a)?;
    let rows = ctx
        .fees()?
        .monthly_stats(&merchant, year)
        .iter()
        .map(|s| {
            Row::from(vec![
                Value::Int(s.month as i64),
                Value::Float(s.total_volume()),
                Value::Float(s.fraud_volume()),
                Value::Float(s.fraud_level()),
            ])
        })
        .collect();
    out(
        ctx,
        Relation::new(
            ["month", "total_volume", "fraud_volume", "fraud_level"].map(Arc::from).to_vec(),
            rows,
        )?,
    )
}

fn fraud_rate(ctx: &ToolContext, a: &[Term]) -> Result<Vec<Term>, ToolError> {
    let (merchant, year) = merchant_year(ctx, a)?;
    let months = ctx.fees()?.monthly_stats(&merchant, year);
    let total: i64 = months.iter().map(|s| s.total_cents).sum();
    let fraud: i64 = months.iter().map(|s| s.fraud_cents).sum();
    let rate = if total > 0 { 100.0 * fraud as f64 / total as f64 } else { 0.0 };
    out(
        ctx,
        Relation::new(vec![Arc::from("fraud_rate")], vec![Row::from(vec![Value::Float(rate)])])?,
    )
}
