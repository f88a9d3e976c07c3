//! Dataset as relations for `query_data/4` and as facts for the solver.

use std::collections::HashMap;
use std::sync::Arc;

use crate::logic::{Clause, KbError, KnowledgeBase, Provenance, Term};
use crate::tools::{Relation, Row, TableSet, Value};

use super::schema::{Dataset, FeeRuleRecord, Flag, Payment};

pub const TABLE_NAMES: [&str; 5] = ["payments", "fees", "merchant_data", "acquirer_countries", "merchant_category_codes"];

#[derive(Default)]
struct Texts(HashMap<String, Arc<str>>);

impl Texts {
    fn get(&mut self, s: &str) -> Value {
        if s.is_empty() {
            return Value::Null;
        }
        if let Some(a) = self.0.get(s) {
            return Value::Text(a.clone());
        }
        let a: Arc<str> = Arc::from(s);
        self.0.insert(s.to_string(), a.clone());
        Value::Text(a)
    }
}

/// Hashed ids are unique, so they are not interned; empty means missing.
fn hashed(s: &str) -> Value {
    if s.is_empty() {
        Value::Null
    } else {
        Value::text(s)
    }
}

fn id_value(s: &str) -> Value {
    s.parse::<i64>().map(Value::Int).unwrap_or_else(|_| Value::text(s))
}

pub fn payments_relation(payments: &[Payment]) -> Relation {
    let mut texts = Texts::default();
    let rows = payments
        .iter()
        .map(|p| {
            Row::from(vec![
                id_value(&p.psp_reference),
                texts.get(&p.merchant),
                texts.get(&p.card_scheme),
                Value::Int(p.year as i64),
                Value::Int(p.hour_of_day as i64),
                Value::Int(p.minute_of_hour as i64),
                Value::Int(p.day_of_year as i64),
                Value::Bool(p.is_credit),
                Value::Float(p.eur_amount),
                texts.get(&p.ip_country),
                texts.get(&p.issuing_country),
                texts.get(&p.device_type),
                hashed(&p.ip_address),
                hashed(&p.email_address),
                hashed(&p.card_number),
                texts.get(&p.shopper_interaction),
                id_value(&p.card_bin),
                Value::Bool(p.has_fraudulent_dispute),
                Value::Bool(p.is_refused_by_adyen),
                texts.get(&p.aci),
                texts.get(&p.acquirer_country),
            ])
        })
        .collect();
    Relation::from_rows(&Payment::COLUMNS, rows)
}

fn strings(v: &Option<Vec<String>>) -> Value {
    match v {
        None => Value::Null,
        Some(items) => Value::List(items.iter().map(|s| Value::text(s)).collect()),
    }
}

fn opt_text(v: &Option<String>) -> Value {
    v.as_deref().map_or(Value::Null, Value::text)
}

fn flag(f: Option<Flag>) -> Value {
    f.map_or(Value::Null, |f| Value::Bool(f.value()))
}

fn number(n: &serde_json::Number) -> Value {
    n.as_i64()
        .map(Value::Int)
        .unwrap_or_else(|| Value::Float(n.as_f64().unwrap_or(f64::NAN)))
}

pub fn fees_relation(records: &[&FeeRuleRecord]) -> Relation {
    let header = [
        "ID",
        "card_scheme",
        "account_type",
        "capture_delay",
        "monthly_fraud_level",
        "monthly_volume",
        "merchant_category_code",
        "is_credit",
        "aci",
        "fixed_amount",
        "rate",
        "intracountry",
    ];
    let rows = records
        .iter()
        .map(|r| {
            Row::from(vec![
                Value::Int(r.id),
                opt_text(&r.card_scheme),
                strings(&r.account_type),
                opt_text(&r.capture_delay),
                opt_text(&r.monthly_fraud_level),
                opt_text(&r.monthly_volume),
                r.merchant_category_code
                    .as_ref()
                    .map_or(Value::Null, |v| Value::List(v.iter().map(|m| Value::Int(*m)).collect())),
                flag(r.is_credit),
                strings(&r.aci),
                number(&r.fixed_amount),
                number(&r.rate),
                flag(r.intracountry),
            ])
        })
        .collect();
    Relation::from_rows(&header, rows)
}

impl Relation {
    fn from_rows(header: &[&str], rows: Vec<Row>) -> Relation {
        Relation::new_unchecked(header.iter().map(|h| Arc::from(*h)).collect(), rows)
    }
}

impl Dataset {
    /// The five tables under their file stems.
    pub fn tables(&self) -> TableSet {
        let mut t = TableSet::new();
        t.insert("payments", payments_relation(&self.payments));
        let records: Vec<&FeeRuleRecord> = self.fee_rules.iter().map(|r| &r.record).collect();
        t.insert("fees", fees_relation(&records));
        t.insert(
            "merchant_data",
            Relation::from_rows(
                &["merchant", "capture_delay", "acquirer", "merchant_category_code", "account_type"],
                self.merchants
                    .iter()
                    .map(|m| {
                        Row::from(vec![
                            Value::text(&m.merchant),
                            Value::text(&m.capture_delay),
                            Value::List(m.acquirer.iter().map(|a| Value::text(a)).collect()),
                            Value::Int(m.merchant_category_code),
                            Value::text(&m.account_type),
                        ])
                    })
                    .collect(),
            ),
        );
        t.insert(
            "acquirer_countries",
            Relation::from_rows(
                &["acquirer", "country_code"],
                self.acquirers
                    .iter()
                    .map(|a| Row::from(vec![Value::text(&a.acquirer), Value::text(&a.country_code)]))
                    .collect(),
            ),
        );
        t.insert(
            "merchant_category_codes",
            Relation::from_rows(
                &["mcc", "description"],
                self.mccs
                    .iter()
                    .map(|m| Row::from(vec![Value::Int(m.mcc), Value::text(&m.description)]))
                    .collect(),
            ),
        );
        t
    }

    /// `acquirer_country/2` (country in lower case), `merchant_data/5` and
    /// `mcc_description/2` facts.
    pub fn facts(&self) -> Vec<Clause> {
        let fact = |name: &str, args: Vec<Term>| {
            Clause::new(Term::compound(name, args), Vec::new(), Provenance::Dataset).expect("fact heads are compound")
        };
        let mut out = Vec::new();
        for a in &self.acquirers {
            out.push(fact(
                "acquirer_country",
                vec![Term::atom(&a.acquirer), Term::atom(&a.country_code.to_lowercase())],
            ));
        }
        for m in &self.merchants {
            out.push(fact(
                "merchant_data",
                vec![
                    Term::atom(&m.merchant),
                    Term::atom(&m.capture_delay),
                    Term::list(m.acquirer.iter().map(|a| Term::atom(a))),
                    Term::Int(m.merchant_category_code),
                    Term::atom(&m.account_type),
                ],
            ));
        }
        for m in &self.mccs {
            out.push(fact("mcc_description", vec![Term::Int(m.mcc), Term::atom(&m.description)]));
        }
        out
    }

    pub fn assert_facts(&self, kb: &mut KnowledgeBase) -> Result<usize, KbError> {
        let facts = self.facts();
        let n = facts.len();
        for f in facts {
            kb.assert_clause(f)?;
        }
        Ok(n)
    }
}
