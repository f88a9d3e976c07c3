//! Monthly merchant statistics.

use std::collections::BTreeMap;

use super::schema::{MonthlyStats, Payment};

const MONTH_ENDS: [u16; 12] = [31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334, 365];

/// Month (1-12) of a day of a 365-day year; days past 365 fall in December.
pub fn month_of_day(day_of_year: u16) -> u8 {
    MONTH_ENDS.iter().position(|&end| day_of_year <= end).unwrap_or(11) as u8 + 1
}

/// Monthly totals of one merchant in one year, months in order; months
/// without payments are omitted.
pub fn merchant_monthly_stats<'a>(payments: impl IntoIterator<Item = &'a Payment>, merchant: &str, year: i32) -> Vec<MonthlyStats> {
    let mut months: BTreeMap<u8, MonthlyStats> = BTreeMap::new();
    for p in payments {
        if p.merchant != merchant || p.year != year {
            continue;
        }
        let month = month_of_day(p.day_of_year);
        let s = months.entry(month).or_insert_with(|| MonthlyStats {
            merchant: merchant.to_string(),
            year,
            month,
            total_cents: 0,
            fraud_cents: 0,
            count: 0,
        });
        s.total_cents += p.cents();
        s.count += 1;
        if p.has_fraudulent_dispute {
            s.fraud_cents += p.cents();
        }
    }
    months.into_values().collect()
}

/// Stats for every (merchant, year, month) in one pass.
pub fn all_monthly_stats(payments: &[Payment]) -> BTreeMap<(String, i32, u8), MonthlyStats> {
    let mut out: BTreeMap<(String, i32, u8), MonthlyStats> = BTreeMap::new();
    for p in payments {
        let month = month_of_day(p.day_of_year);
        let s = out.entry((p.merchant.clone(), p.year, month)).or_insert_with(|| MonthlyStats {
            merchant: p.merchant.clone(),
            year: p.year,
            month,
            total_cents: 0,
            fraud_cents: 0,
            count: 0,
        });
        s.total_cents += p.cents();
        s.count += 1;
        if p.has_fraudulent_dispute {
            s.fraud_cents += p.cents();
        }
    }
    out
}
