//! Fee rule matching and fee computation.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::exec::Execution;
use crate::tools::{Relation, Row, ToolError, Value};

use super::schema::{Dataset, FeeRule, MerchantConfig, MonthlyStats, Payment};
use super::stats::{all_monthly_stats, month_of_day};

/// Everything a fee rule can condition on, for one payment.
#[derive(Clone, Debug, PartialEq)]
pub struct FeeContext {
    pub card_scheme: String,
    pub account_type: String,
    pub capture_delay: String,
    pub monthly_fraud_level: f64,
    pub monthly_volume: f64,
    pub mcc: i64,
    pub is_credit: bool,
    pub aci: String,
    pub intracountry: bool,
}

pub fn fee_rule_matches(rule: &FeeRule, ctx: &FeeContext) -> bool {
    rule.card_scheme.as_ref().is_none_or(|s| *s == ctx.card_scheme)
        && (rule.account_type.is_empty() || rule.account_type.contains(&ctx.account_type))
        && rule.capture_delay.as_ref().is_none_or(|r| r.accepts_delay(&ctx.capture_delay))
        && rule
            .monthly_fraud_level
            .as_ref()
            .is_none_or(|r| r.contains(ctx.monthly_fraud_level))
        && rule.monthly_volume.as_ref().is_none_or(|r| r.contains(ctx.monthly_volume))
        && (rule.merchant_category_code.is_empty() || rule.merchant_category_code.contains(&ctx.mcc))
        && rule.is_credit.is_none_or(|b| b == ctx.is_credit)
        && (rule.aci.is_empty() || rule.aci.contains(&ctx.aci))
        && rule.intracountry.is_none_or(|b| b == ctx.intracountry)
}

/// Rounds to 14 significant digits, removing binary noise such as
/// `0.1 + 0.19 = 0.29000000000000004`.
pub fn round_sig14(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.13e}").parse().unwrap_or(x)
}

/// `fixed + rate * amount / 10000`.
pub fn transaction_fee(fixed_amount: f64, rate: f64, amount: f64) -> Result<f64, FeeError> {
    if amount < 0.0 || amount.is_nan() {
        return Err(FeeError::NegativeAmount(amount));
    }
    Ok(round_sig14(fixed_amount + rate * amount / 10000.0))
}

/// Presentation rounding to cents.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FeeError {
    #[error("amount must be non-negative, got {0}")]
    NegativeAmount(f64),
    #[error("merchant {0} has no configuration")]
    UnknownMerchant(String),
    #[error("no fee rule matches payment {reference} of {merchant}")]
    NoMatchingRule { reference: String, merchant: String },
}

/// The payment fields fee lookup needs.
#[derive(Clone, Debug, PartialEq)]
pub struct FeeInput {
    pub reference: String,
    pub merchant: String,
    pub card_scheme: String,
    pub year: i32,
    pub day_of_year: u16,
    pub is_credit: bool,
    pub eur_amount: f64,
    pub issuing_country: String,
    pub acquirer_country: String,
    pub aci: String,
}

impl From<&Payment> for FeeInput {
    fn from(p: &Payment) -> FeeInput {
        FeeInput {
            reference: p.psp_reference.clone(),
            merchant: p.merchant.clone(),
            card_scheme: p.card_scheme.clone(),
            year: p.year,
            day_of_year: p.day_of_year,
            is_credit: p.is_credit,
            eur_amount: p.eur_amount,
            issuing_country: p.issuing_country.clone(),
            acquirer_country: p.acquirer_country.clone(),
            aci: p.aci.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AppliedFee {
    pub rule_id: i64,
    pub fee: f64,
}

/// Fee rules, merchant configurations and monthly statistics, ready for
/// per-payment lookup.
#[derive(Clone, Debug)]
pub struct FeeEngine {
    /// Most specific first, then lowest id.
    ranked: Vec<FeeRule>,
    merchants: HashMap<String, MerchantConfig>,
    monthly: BTreeMap<(String, i32, u8), MonthlyStats>,
}

pub const FEE_COLUMNS: [&str; 2] = ["fee_rule_id", "fee"];
const INPUT_COLUMNS: [&str; 10] = [
    "psp_reference",
    "merchant",
    "card_scheme",
    "year",
    "day_of_year",
    "is_credit",
    "eur_amount",
    "issuing_country",
    "acquirer_country",
    "aci",
];

impl FeeEngine {
    pub fn new(dataset: &Dataset) -> FeeEngine {
        let mut ranked = dataset.fee_rules.clone();
        ranked.sort_by(|a, b| b.specificity().cmp(&a.specificity()).then(a.id.cmp(&b.id)));
        FeeEngine {
            ranked,
            merchants: dataset.merchants.iter().map(|m| (m.merchant.clone(), m.clone())).collect(),
            monthly: all_monthly_stats(&dataset.payments),
        }
    }

    pub fn monthly_stats(&self, merchant: &str, year: i32) -> Vec<MonthlyStats> {
        self.monthly
            .range((merchant.to_string(), year, 0)..=(merchant.to_string(), year, 12))
            .map(|(_, s)| s.clone())
            .collect()
    }

    pub fn has_merchant(&self, merchant: &str) -> bool {
        self.merchants.contains_key(merchant)
    }

    pub fn context(&self, p: &FeeInput) -> Result<FeeContext, FeeError> {
        let m = self
            .merchants
            .get(&p.merchant)
            .ok_or_else(|| FeeError::UnknownMerchant(p.merchant.clone()))?;
        let month = month_of_day(p.day_of_year);
        let stats = self.monthly.get(&(p.merchant.clone(), p.year, month));
        Ok(FeeContext {
            card_scheme: p.card_scheme.clone(),
            account_type: m.account_type.clone(),
            capture_delay: m.capture_delay.clone(),
            monthly_fraud_level: stats.map_or(0.0, MonthlyStats::fraud_level),
            monthly_volume: stats.map_or(0.0, MonthlyStats::total_volume),
            mcc: m.merchant_category_code,
            is_credit: p.is_credit,
            aci: p.aci.clone(),
            intracountry: p.issuing_country == p.acquirer_country,
        })
    }

    /// The most specific matching rule (lowest id on ties) and its fee.
    pub fn applicable_fee(&self, p: &FeeInput) -> Result<AppliedFee, FeeError> {
        let ctx = self.context(p)?;
        let rule = self
            .ranked
            .iter()
            .find(|r| fee_rule_matches(r, &ctx))
            .ok_or_else(|| FeeError::NoMatchingRule {
                reference: p.reference.clone(),
                merchant: p.merchant.clone(),
            })?;
        Ok(AppliedFee {
            rule_id: rule.id,
            fee: transaction_fee(rule.fixed_amount, rule.rate, p.eur_amount)?,
        })
    }

    /// Appends `fee_rule_id` and `fee` to each payment row, after setting
    /// `override_field` to the given value when present.
    pub fn annotate(&self, rel: &Relation, override_field: Option<(&str, &Value)>, exec: Execution) -> Result<Relation, ToolError> {
        let cols = INPUT_COLUMNS
            .iter()
            .map(|f| match rel.column(f) {
                Some(c) => Ok(Some(c)),
                None if *f == "psp_reference" => Ok(None),
                None => Err(ToolError::MissingField(f.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let overridden = match override_field {
            Some((field, value)) => {
                let i = INPUT_COLUMNS.iter().position(|f| *f == field).ok_or_else(|| {
                    ToolError::Data(format!(
                        "{field} does not influence fees; use one of {}",
                        INPUT_COLUMNS[1..].join(", ")
                    ))
                })?;
                Some((i, value.clone()))
            }
            None => None,
        };
        let keep: Vec<usize> = (0..rel.header().len())
            .filter(|&i| !FEE_COLUMNS.contains(&&*rel.header()[i]))
            .collect();
        let fees = exec.try_map(rel.rows(), |row| {
            let cell = |i: usize| -> Option<&Value> {
                match &overridden {
                    Some((j, v)) if *j == i => Some(v),
                    _ => cols[i].map(|c| &row[c]),
                }
            };
            let input = fee_input(&cell).map_err(ToolError::Data)?;
            self.applicable_fee(&input).map_err(|e| ToolError::Data(e.to_string()))
        })?;
        let mut header: Vec<Arc<str>> = keep.iter().map(|&i| rel.header()[i].clone()).collect();
        header.extend(FEE_COLUMNS.iter().map(|f| Arc::from(*f)));
        let rows = rel
            .rows()
            .iter()
            .zip(fees)
            .map(|(row, f)| {
                let mut cells: Vec<Value> = keep.iter().map(|&i| row[i].clone()).collect();
                if let Some((j, v)) = &overridden {
                    if let Some(c) = cols[*j] {
                        if let Some(k) = keep.iter().position(|&i| i == c) {
                            cells[k] = v.clone();
                        }
                    }
                }
                cells.push(Value::Int(f.rule_id));
                cells.push(Value::Float(f.fee));
                Row::from(cells)
            })
            .collect();
        Relation::new(header, rows)
    }
}

fn fee_input<'a>(cell: &dyn Fn(usize) -> Option<&'a Value>) -> Result<FeeInput, String> {
    let text = |i: usize| cell(i).map(|v| v.to_string()).unwrap_or_default();
    let number = |i: usize| {
        cell(i)
            .and_then(Value::as_number)
            .ok_or_else(|| format!("{} must be numeric", INPUT_COLUMNS[i]))
    };
    let flag = |i: usize| match cell(i) {
        Some(Value::Bool(b)) => Ok(*b),
        Some(Value::Int(n)) => Ok(*n != 0),
        Some(Value::Text(t)) if t.eq_ignore_ascii_case("true") => Ok(true),
        Some(Value::Text(t)) if t.eq_ignore_ascii_case("false") => Ok(false),
        _ => Err(format!("{} must be boolean", INPUT_COLUMNS[i])),
    };
    Ok(FeeInput {
        reference: text(0),
        merchant: text(1),
        card_scheme: text(2),
        year: number(3)? as i32,
        day_of_year: number(4)? as u16,
        is_credit: flag(5)?,
        eur_amount: number(6)?,
        issuing_country: text(7),
        acquirer_country: text(8),
        aci: text(9),
    })
}
