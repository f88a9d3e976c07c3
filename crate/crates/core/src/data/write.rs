//! Writing a dataset back out in the benchmark's file formats.

use std::fs;
use std::path::Path;

use super::load::{DataError, DataPaths};
use super::schema::{Dataset, FeeRuleRecord, Payment};

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> DataError + '_ {
    move |e| DataError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "True"
    } else {
        "False"
    }
}

pub fn write_payments(path: &Path, payments: &[Payment]) -> Result<(), DataError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(Payment::COLUMNS).map_err(csv_err(path))?;
    for p in payments {
        w.write_record([
            p.psp_reference.as_str(),
            &p.merchant,
            &p.card_scheme,
            &p.year.to_string(),
            &p.hour_of_day.to_string(),
            &p.minute_of_hour.to_string(),
            &p.day_of_year.to_string(),
            flag(p.is_credit),
            &p.eur_amount.to_string(),
            &p.ip_country,
            &p.issuing_country,
            &p.device_type,
            &p.ip_address,
            &p.email_address,
            &p.card_number,
            &p.shopper_interaction,
            &p.card_bin,
            flag(p.has_fraudulent_dispute),
            flag(p.is_refused_by_adyen),
            &p.aci,
            &p.acquirer_country,
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io(path))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), DataError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| DataError::Json {
        file: path.display().to_string(),
        message: e.to_string(),
    })?;
    fs::write(path, text + "\n").map_err(io(path))
}

fn write_pairs<'a>(path: &Path, header: [&str; 2], rows: impl Iterator<Item = [String; 2]> + 'a) -> Result<(), DataError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(&r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io(path))
}

/// Writes all five files into `dir`, creating it if needed.
pub fn write_dataset(dir: &Path, ds: &Dataset) -> Result<DataPaths, DataError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let paths = DataPaths::in_dir(dir);
    write_payments(&paths.payments, &ds.payments)?;
    let records: Vec<&FeeRuleRecord> = ds.fee_rules.iter().map(|r| &r.record).collect();
    write_json(&paths.fees, &records)?;
    write_json(&paths.merchants, &ds.merchants)?;
    write_pairs(
        &paths.acquirers,
        ["acquirer", "country_code"],
        ds.acquirers.iter().map(|a| [a.acquirer.clone(), a.country_code.clone()]),
    )?;
    write_pairs(
        &paths.mccs,
        ["mcc", "description"],
        ds.mccs.iter().map(|m| [m.mcc.to_string(), m.description.clone()]),
    )?;
    Ok(paths)
}
