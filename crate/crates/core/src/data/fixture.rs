//! Deterministic synthetic dataset in the benchmark's formats.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use super::schema::{AcquirerCountry, Dataset, FeeRule, FeeRuleRecord, Flag, MccDescription, MerchantConfig, Payment, COUNTRIES};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FixtureSpec {
    pub seed: u64,
    pub payments: usize,
    pub rules: usize,
    pub year: i32,
}

impl Default for FixtureSpec {
    fn default() -> FixtureSpec {
        FixtureSpec {
            seed: 7,
            payments: 1000,
            rules: 20,
            year: 2023,
        }
    }
}

pub const CARD_SCHEMES: [&str; 4] = ["GlobalCard", "NexPay", "SwiftCharge", "TransactPlus"];
pub const ACIS: [&str; 7] = ["A", "B", "C", "D", "E", "F", "G"];
/// Card issuers come from the acquiring countries plus two outside them.
const ISSUING_COUNTRIES: [&str; 10] = ["SE", "NL", "LU", "IT", "BE", "FR", "GR", "ES", "GB", "US"];
const DEVICES: [&str; 6] = ["Windows", "Linux", "MacOS", "iOS", "Android", "Other"];

const ACQUIRERS: [(&str, &str); 8] = [
    ("gringotts", "GB"),
    ("the_savings_and_loan_bank", "US"),
    ("bank_of_springfield", "US"),
    ("dagoberts_vault", "NL"),
    ("dagoberts_geldpakhuis", "NL"),
    ("lehman_brothers", "US"),
    ("medici", "IT"),
    ("tellsons_bank", "FR"),
];

/// (merchant, capture delay, acquirers, mcc, account type, payment weight)
const MERCHANTS: [(&str, &str, &[&str], i64, &str, u32); 5] = [
    (
        "Crossfit_Hanna",
        "manual",
        &["gringotts", "the_savings_and_loan_bank", "bank_of_springfield", "dagoberts_vault"],
        7997,
        "F",
        40,
    ),
    ("Belles_cookbook_store", "1", &["lehman_brothers"], 5942, "R", 15),
    ("Golfclub_Baron_Friso", "2", &["medici"], 7993, "F", 20),
    (
        "Martinis_Fine_Steakhouse",
        "immediate",
        &["dagoberts_geldpakhuis", "bank_of_springfield"],
        5812,
        "H",
        15,
    ),
    ("Rafa_AI", "7", &["tellsons_bank"], 7372, "D", 10),
];

const MCCS: [(i64, &str); 7] = [
    (4121, "Taxicabs and Limousines"),
    (5411, "Grocery Stores and Supermarkets"),
    (5812, "Eating Places and Restaurants"),
    (5942, "Book Stores"),
    (
        7372,
        "Computer Programming, Data Processing, and Integrated Systems Design Services",
    ),
    (7993, "Video Amusement Game Supplies"),
    (
        7997,
        "Membership Clubs (Sports, Recreation, Athletic), Country Clubs, and Private Golf Courses",
    ),
];

fn subset<R: Rng>(rng: &mut R, items: &[&str], max: usize) -> Vec<String> {
    let n = rng.random_range(1..=max.min(items.len()));
    let mut picked: Vec<&str> = items.choose_multiple(rng, n).copied().collect();
    picked.sort_unstable();
    picked.into_iter().map(String::from).collect()
}

fn optional<R: Rng, T>(rng: &mut R, p_set: f64, make: impl FnOnce(&mut R) -> T) -> Option<T> {
    if rng.random_bool(p_set) {
        Some(make(rng))
    } else {
        None
    }
}

fn rule_record<R: Rng>(rng: &mut R, id: i64, wildcard: bool) -> FeeRuleRecord {
    let mut rec = FeeRuleRecord {
        id,
        card_scheme: None,
        account_type: Some(Vec::new()),
        capture_delay: None,
        monthly_fraud_level: None,
        monthly_volume: None,
        merchant_category_code: Some(Vec::new()),
        is_credit: None,
        aci: Some(Vec::new()),
        fixed_amount: serde_json::Number::from_f64(rng.random_range(0..=14) as f64 / 100.0).unwrap(),
        rate: serde_json::Number::from(rng.random_range(10..=99)),
        intracountry: None,
    };
    if wildcard {
        return rec;
    }
    rec.card_scheme = optional(rng, 0.6, |r| CARD_SCHEMES.choose(r).unwrap().to_string());
    if rng.random_bool(0.4) {
        rec.account_type = Some(subset(rng, &["R", "D", "H", "F", "S", "O"], 3));
    }
    rec.capture_delay = optional(rng, 0.4, |r| {
        ["<3", "3-5", ">5", "immediate", "manual"].choose(r).unwrap().to_string()
    });
    rec.monthly_fraud_level = optional(rng, 0.3, |r| {
        ["<7.2%", "7.2%-7.7%", "7.7%-8.3%", ">8.3%"].choose(r).unwrap().to_string()
    });
    rec.monthly_volume = optional(rng, 0.3, |r| ["<100k", "100k-1m", "1m-5m", ">5m"].choose(r).unwrap().to_string());
    if rng.random_bool(0.4) {
        let mccs: Vec<&str> = vec!["5812", "5942", "7372", "7993", "7997"];
        rec.merchant_category_code = Some(subset(rng, &mccs, 3).iter().map(|s| s.parse().unwrap()).collect());
    }
    rec.is_credit = optional(rng, 0.5, |r| Flag::Bool(r.random_bool(0.5)));
    if rng.random_bool(0.6) {
        rec.aci = Some(subset(rng, &ACIS, 3));
    }
    rec.intracountry = optional(rng, 0.4, |r| Flag::Num(if r.random_bool(0.5) { 1.0 } else { 0.0 }));
    rec
}

/// Generates the dataset. The last rule is a full wildcard so every payment
/// has at least one applicable rule.
pub fn generate(spec: FixtureSpec) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let merchants: Vec<MerchantConfig> = MERCHANTS
        .iter()
        .map(|(name, delay, acq, mcc, acct, _)| MerchantConfig {
            merchant: name.to_string(),
            capture_delay: delay.to_string(),
            acquirer: acq.iter().map(|s| s.to_string()).collect(),
            merchant_category_code: *mcc,
            account_type: acct.to_string(),
        })
        .collect();
    let fee_rules = (1..=spec.rules as i64)
        .map(|id| {
            let rec = rule_record(&mut rng, id, id == spec.rules as i64);
            FeeRule::from_record(rec).expect("generated rules parse")
        })
        .collect();
    let weights: Vec<(usize, u32)> = MERCHANTS.iter().enumerate().map(|(i, m)| (i, m.5)).collect();
    let amounts = LogNormal::new(3.8, 1.0).expect("valid parameters");
    let mut payments = Vec::with_capacity(spec.payments);
    for i in 0..spec.payments {
        let m = weights.choose_weighted(&mut rng, |w| w.1).unwrap().0;
        let issuing = *ISSUING_COUNTRIES.choose(&mut rng).unwrap();
        let ip = if rng.random_bool(0.8) {
            issuing
        } else {
            *COUNTRIES.choose(&mut rng).unwrap()
        };
        let acquirer = *COUNTRIES.choose(&mut rng).unwrap();
        let aci = *ACIS.choose(&mut rng).unwrap();
        let amount = Distribution::<f64>::sample(&amounts, &mut rng).clamp(0.5, 5000.0);
        let hex = |rng: &mut ChaCha8Rng| hex::encode(rng.random::<[u8; 11]>());
        payments.push(Payment {
            psp_reference: (10_000_000_000u64 + i as u64 * 1000 + rng.random_range(0..1000)).to_string(),
            merchant: MERCHANTS[m].0.to_string(),
            card_scheme: CARD_SCHEMES.choose(&mut rng).unwrap().to_string(),
            year: spec.year,
            hour_of_day: rng.random_range(0..24),
            minute_of_hour: rng.random_range(0..60),
            day_of_year: rng.random_range(1..=365),
            is_credit: rng.random_bool(0.7),
            eur_amount: (amount * 100.0).round() / 100.0,
            ip_country: ip.to_string(),
            issuing_country: issuing.to_string(),
            device_type: DEVICES.choose(&mut rng).unwrap().to_string(),
            ip_address: if rng.random_bool(0.9) { hex(&mut rng) } else { String::new() },
            email_address: hex(&mut rng),
            card_number: hex(&mut rng),
            shopper_interaction: if rng.random_bool(0.9) { "Ecommerce" } else { "POS" }.to_string(),
            card_bin: rng.random_range(1000..10000).to_string(),
            has_fraudulent_dispute: rng.random_bool(if aci == "G" { 0.2 } else { 0.06 }),
            is_refused_by_adyen: rng.random_bool(0.06),
            aci: aci.to_string(),
            acquirer_country: acquirer.to_string(),
        });
    }
    Dataset {
        payments,
        fee_rules,
        merchants,
        acquirers: ACQUIRERS
            .iter()
            .map(|(a, c)| AcquirerCountry {
                acquirer: a.to_string(),
                country_code: c.to_string(),
            })
            .collect(),
        mccs: MCCS
            .iter()
            .map(|(mcc, d)| MccDescription {
                mcc: *mcc,
                description: d.to_string(),
            })
            .collect(),
    }
}
