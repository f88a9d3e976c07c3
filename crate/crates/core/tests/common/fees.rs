//! Fee totals by a nested loop over payments and the raw fee records.

use std::collections::BTreeMap;

use logiplan::data::schema::FeeRuleRecord;
use logiplan::data::{Dataset, Payment};

const DAYS_IN_MONTH: [u16; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];

pub fn month(day: u16) -> u8 {
    let mut left = day;
    for (i, len) in DAYS_IN_MONTH.iter().enumerate() {
        if left <= *len {
            return i as u8 + 1;
        }
        left -= len;
    }
    12
}

/// `x` with a `k`/`m` suffix or a `%` sign removed.
fn quantity(s: &str) -> f64 {
    let s = s.trim().trim_end_matches('%');
    if let Some(k) = s.strip_suffix('k') {
        k.parse::<f64>().unwrap() * 1_000.0
    } else if let Some(m) = s.strip_suffix('m') {
        m.parse::<f64>().unwrap() * 1_000_000.0
    } else {
        s.parse().unwrap()
    }
}

fn in_range(spec: &str, x: f64) -> bool {
    if let Some(v) = spec.strip_prefix('<') {
        x < quantity(v)
    } else if let Some(v) = spec.strip_prefix('>') {
        x > quantity(v)
    } else if let Some((a, b)) = spec.split_once('-') {
        quantity(a) <= x && x <= quantity(b)
    } else {
        x == quantity(spec)
    }
}

fn delay_matches(spec: &str, delay: &str) -> bool {
    let named = |s: &str| s.chars().all(|c| c.is_ascii_alphabetic());
    if named(spec) {
        return spec == delay;
    }
    match delay {
        "immediate" => in_range(spec, 0.0),
        d if named(d) => false,
        d => in_range(spec, d.parse().unwrap()),
    }
}

fn specificity(r: &FeeRuleRecord) -> usize {
    let list = |l: &Option<Vec<String>>| l.as_ref().is_some_and(|v| !v.is_empty());
    [
        r.card_scheme.is_some(),
        list(&r.account_type),
        r.capture_delay.is_some(),
        r.monthly_fraud_level.is_some(),
        r.monthly_volume.is_some(),
        r.merchant_category_code.as_ref().is_some_and(|v| !v.is_empty()),
        r.is_credit.is_some(),
        list(&r.aci),
        r.intracountry.is_some(),
    ]
    .iter()
    .filter(|b| **b)
    .count()
}

/// Fee of one payment: the matching rule with the most conditions, lowest
/// id among equals.
pub fn payment_fee(ds: &Dataset, p: &Payment) -> (i64, f64) {
    let m = ds.merchants.iter().find(|m| m.merchant == p.merchant).unwrap();
    let mon = month(p.day_of_year);
    let (mut volume, mut fraud) = (0.0, 0.0);
    for q in &ds.payments {
        if q.merchant == p.merchant && q.year == p.year && month(q.day_of_year) == mon {
            let cents = (q.eur_amount * 100.0).round();
            volume += cents;
            if q.has_fraudulent_dispute {
                fraud += cents;
            }
        }
    }
    let fraud_pct = if volume > 0.0 { 100.0 * fraud / volume } else { 0.0 };
    let volume = volume / 100.0;
    let mut best: Option<&FeeRuleRecord> = None;
    for rule in ds.fee_rules.iter().map(|r| &r.record) {
        let flag = |f: &Option<logiplan::data::schema::Flag>, v: bool| f.is_none_or(|f| f.value() == v);
        let ok = rule.card_scheme.as_ref().is_none_or(|s| *s == p.card_scheme)
            && rule
                .account_type
                .as_ref()
                .is_none_or(|l| l.is_empty() || l.contains(&m.account_type))
            && rule.capture_delay.as_ref().is_none_or(|s| delay_matches(s, &m.capture_delay))
            && rule.monthly_fraud_level.as_ref().is_none_or(|s| in_range(s, fraud_pct))
            && rule.monthly_volume.as_ref().is_none_or(|s| in_range(s, volume))
            && rule
                .merchant_category_code
                .as_ref()
                .is_none_or(|l| l.is_empty() || l.contains(&m.merchant_category_code))
            && flag(&rule.is_credit, p.is_credit)
            && rule.aci.as_ref().is_none_or(|l| l.is_empty() || l.contains(&p.aci))
            && flag(&rule.intracountry, p.issuing_country == p.acquirer_country);
        if !ok {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => specificity(rule) > specificity(b) || (specificity(rule) == specificity(b) && rule.id < b.id),
        };
        if better {
            best = Some(rule);
        }
    }
    let rule = best.unwrap_or_else(|| panic!("no rule for payment {}", p.psp_reference));
    let fixed = rule.fixed_amount.as_f64().unwrap();
    let rate = rule.rate.as_f64().unwrap();
    (rule.id, fixed + rate * p.eur_amount / 10000.0)
}

pub fn fee_totals(ds: &Dataset) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for p in &ds.payments {
        *out.entry(p.merchant.clone()).or_insert(0.0) += payment_fee(ds, p).1;
    }
    out
}
