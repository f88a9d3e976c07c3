//! Records of the five benchmark files.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::range::{parse_range_spec, RangeError, RangeSpec, Unit};

pub const ACCOUNT_TYPES: [&str; 6] = ["R", "D", "H", "F", "S", "O"];
pub const COUNTRIES: [&str; 8] = ["SE", "NL", "LU", "IT", "BE", "FR", "GR", "ES"];

#[derive(Clone, Debug, PartialEq)]
pub struct Payment {
    pub psp_reference: String,
    pub merchant: String,
    pub card_scheme: String,
    pub year: i32,
    pub hour_of_day: u8,
    pub minute_of_hour: u8,
    pub day_of_year: u16,
    pub is_credit: bool,
    pub eur_amount: f64,
    pub ip_country: String,
    pub issuing_country: String,
    pub device_type: String,
    pub ip_address: String,
    pub email_address: String,
    pub card_number: String,
    pub shopper_interaction: String,
    pub card_bin: String,
    pub has_fraudulent_dispute: bool,
    pub is_refused_by_adyen: bool,
    pub aci: String,
    pub acquirer_country: String,
}

impl Payment {
    pub const COLUMNS: [&'static str; 21] = [
        "psp_reference",
        "merchant",
        "card_scheme",
        "year",
        "hour_of_day",
        "minute_of_hour",
        "day_of_year",
        "is_credit",
        "eur_amount",
        "ip_country",
        "issuing_country",
        "device_type",
        "ip_address",
        "email_address",
        "card_number",
        "shopper_interaction",
        "card_bin",
        "has_fraudulent_dispute",
        "is_refused_by_adyen",
        "aci",
        "acquirer_country",
    ];

    /// Amount in whole cents; sums over cents are exact.
    pub fn cents(&self) -> i64 {
        (self.eur_amount * 100.0).round() as i64
    }
}

/// A JSON boolean that some files write as 0.0 / 1.0. The original form is
/// kept so rewriting the file reproduces it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Flag {
    Bool(bool),
    Num(f64),
}

impl Flag {
    pub fn value(self) -> bool {
        match self {
            Flag::Bool(b) => b,
            Flag::Num(x) => x != 0.0,
        }
    }
}

/// One object of fees.json as written in the file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeeRuleRecord {
    #[serde(rename = "ID")]
    pub id: i64,
    pub card_scheme: Option<String>,
    #[serde(default)]
    pub account_type: Option<Vec<String>>,
    pub capture_delay: Option<String>,
    pub monthly_fraud_level: Option<String>,
    pub monthly_volume: Option<String>,
    #[serde(default)]
    pub merchant_category_code: Option<Vec<i64>>,
    pub is_credit: Option<Flag>,
    #[serde(default)]
    pub aci: Option<Vec<String>>,
    pub fixed_amount: serde_json::Number,
    pub rate: serde_json::Number,
    pub intracountry: Option<Flag>,
}

/// A fee rule with its range fields parsed. `None` and empty lists are
/// wildcards.
#[derive(Clone, Debug, PartialEq)]
pub struct FeeRule {
    pub id: i64,
    pub card_scheme: Option<String>,
    pub account_type: Vec<String>,
    pub capture_delay: Option<RangeSpec>,
    pub monthly_fraud_level: Option<RangeSpec>,
    pub monthly_volume: Option<RangeSpec>,
    pub merchant_category_code: Vec<i64>,
    pub is_credit: Option<bool>,
    pub aci: Vec<String>,
    pub fixed_amount: f64,
    pub rate: f64,
    pub intracountry: Option<bool>,
    pub record: FeeRuleRecord,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RuleError {
    #[error("fee rule {id}: {field}: {source}")]
    Range { id: i64, field: &'static str, source: RangeError },
    #[error("fee rule {id}: {field} must be a non-negative number")]
    Negative { id: i64, field: &'static str },
}

impl FeeRule {
    pub fn from_record(record: FeeRuleRecord) -> Result<FeeRule, RuleError> {
        let id = record.id;
        let range = |field: &'static str, text: &Option<String>, unit: Unit| -> Result<Option<RangeSpec>, RuleError> {
            match text.as_deref().map(str::trim) {
                None | Some("") => Ok(None),
                Some(t) => parse_range_spec(t, unit)
                    .map(Some)
                    .map_err(|source| RuleError::Range { id, field, source }),
            }
        };
        let number = |field: &'static str, n: &serde_json::Number| -> Result<f64, RuleError> {
            n.as_f64()
                .filter(|x| *x >= 0.0 && x.is_finite())
                .ok_or(RuleError::Negative { id, field })
        };
        Ok(FeeRule {
            id,
            card_scheme: record.card_scheme.clone().filter(|s| !s.is_empty()),
            account_type: record.account_type.clone().unwrap_or_default(),
            capture_delay: range("capture_delay", &record.capture_delay, Unit::Days)?,
            monthly_fraud_level: range("monthly_fraud_level", &record.monthly_fraud_level, Unit::Percent)?,
            monthly_volume: range("monthly_volume", &record.monthly_volume, Unit::Euros)?,
            merchant_category_code: record.merchant_category_code.clone().unwrap_or_default(),
            is_credit: record.is_credit.map(Flag::value),
            aci: record.aci.clone().unwrap_or_default(),
            fixed_amount: number("fixed_amount", &record.fixed_amount)?,
            rate: number("rate", &record.rate)?,
            intracountry: record.intracountry.map(Flag::value),
            record,
        })
    }

    /// Number of non-wildcard matching fields.
    pub fn specificity(&self) -> usize {
        [
            self.card_scheme.is_some(),
            !self.account_type.is_empty(),
            self.capture_delay.is_some(),
            self.monthly_fraud_level.is_some(),
            self.monthly_volume.is_some(),
            !self.merchant_category_code.is_empty(),
            self.is_credit.is_some(),
            !self.aci.is_empty(),
            self.intracountry.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MerchantConfig {
    pub merchant: String,
    pub capture_delay: String,
    pub acquirer: Vec<String>,
    pub merchant_category_code: i64,
    pub account_type: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AcquirerCountry {
    pub acquirer: String,
    pub country_code: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MccDescription {
    pub mcc: i64,
    pub description: String,
}

/// Per-merchant, per-month totals. Volumes are also kept in cents so that
/// sums are exact.
#[derive(Clone, Debug, PartialEq)]
pub struct MonthlyStats {
    pub merchant: String,
    pub year: i32,
    pub month: u8,
    pub total_cents: i64,
    pub fraud_cents: i64,
    pub count: usize,
}

impl MonthlyStats {
    pub fn total_volume(&self) -> f64 {
        self.total_cents as f64 / 100.0
    }

    pub fn fraud_volume(&self) -> f64 {
        self.fraud_cents as f64 / 100.0
    }

    /// Fraudulent volume as a percentage of total volume.
    pub fn fraud_level(&self) -> f64 {
        if self.total_cents > 0 {
            100.0 * self.fraud_cents as f64 / self.total_cents as f64
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub payments: Vec<Payment>,
    pub fee_rules: Vec<FeeRule>,
    pub merchants: Vec<MerchantConfig>,
    pub acquirers: Vec<AcquirerCountry>,
    pub mccs: Vec<MccDescription>,
}

impl Dataset {
    pub fn merchant(&self, name: &str) -> Option<&MerchantConfig> {
        self.merchants.iter().find(|m| m.merchant == name)
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "payments: {}", self.payments.len())?;
        writeln!(f, "fees: {}", self.fee_rules.len())?;
        writeln!(f, "merchant_data: {}", self.merchants.len())?;
        writeln!(f, "acquirer_countries: {}", self.acquirers.len())?;
        write!(f, "merchant_category_codes: {}", self.mccs.len())
    }
}
