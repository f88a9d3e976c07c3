//! Reading the benchmark files.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use super::schema::{AcquirerCountry, Dataset, FeeRule, FeeRuleRecord, MccDescription, MerchantConfig, Payment, RuleError, ACCOUNT_TYPES};

#[derive(Clone, Debug, PartialEq)]
pub struct DataPaths {
    pub payments: PathBuf,
    pub fees: PathBuf,
    pub merchants: PathBuf,
    pub acquirers: PathBuf,
    pub mccs: PathBuf,
}

impl DataPaths {
    pub const FILES: [&'static str; 5] = [
        "payments.csv",
        "fees.json",
        "merchant_data.json",
        "acquirer_countries.csv",
        "merchant_category_codes.csv",
    ];

    pub fn in_dir(dir: &Path) -> DataPaths {
        DataPaths {
            payments: dir.join(Self::FILES[0]),
            fees: dir.join(Self::FILES[1]),
            merchants: dir.join(Self::FILES[2]),
            acquirers: dir.join(Self::FILES[3]),
            mccs: dir.join(Self::FILES[4]),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{file}: missing column {column}")]
    MissingColumn { file: String, column: String },
    #[error("{file}, row {row}: {message}")]
    Row { file: String, row: usize, message: String },
    #[error("{file}: {message}")]
    Json { file: String, message: String },
    #[error(transparent)]
    Rule(#[from] RuleError),
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn open(path: &Path) -> Result<File, DataError> {
    File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            DataError::MissingFile(path.to_path_buf())
        } else {
            DataError::Io {
                path: path.to_path_buf(),
                source: e,
            }
        }
    })
}

fn read_to_string(path: &Path) -> Result<String, DataError> {
    let mut s = String::new();
    open(path)?.read_to_string(&mut s).map_err(|e| DataError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(s)
}

/// CSV reader plus the column index of each required field. Columns with
/// an empty name (a pandas index) are ignored.
struct Columns {
    file: String,
    index: Vec<usize>,
}

impl Columns {
    fn new(file: &str, headers: &csv::ByteRecord, wanted: &[&str]) -> Result<Columns, DataError> {
        let names: Vec<String> = headers.iter().map(|h| String::from_utf8_lossy(h).trim().to_string()).collect();
        let index = wanted
            .iter()
            .map(|w| {
                names.iter().position(|n| n == w).ok_or_else(|| DataError::MissingColumn {
                    file: file.to_string(),
                    column: w.to_string(),
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(Columns {
            file: file.to_string(),
            index,
        })
    }

    fn get<'r>(&self, rec: &'r csv::ByteRecord, i: usize, row: usize) -> Result<&'r str, DataError> {
        let raw = rec.get(self.index[i]).unwrap_or_default();
        std::str::from_utf8(raw).map_err(|_| DataError::Row {
            file: self.file.clone(),
            row,
            message: "invalid UTF-8".into(),
        })
    }

    fn err(&self, row: usize, column: &str, value: &str, expected: &str) -> DataError {
        DataError::Row {
            file: self.file.clone(),
            row,
            message: format!("{column} = {value:?} is not {expected}"),
        }
    }
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>, DataError> {
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(open(path)?))
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim() {
        "True" | "true" | "TRUE" | "1" | "1.0" => Some(true),
        "False" | "false" | "FALSE" | "0" | "0.0" => Some(false),
        _ => None,
    }
}

/// Shares one allocation between equal strings of categorical columns.
#[derive(Default)]
struct Interner(HashSet<String>);

impl Interner {
    fn get(&mut self, s: &str) -> String {
        if let Some(v) = self.0.get(s) {
            return v.clone();
        }
        self.0.insert(s.to_string());
        s.to_string()
    }
}

pub fn load_payments(path: &Path) -> Result<Vec<Payment>, DataError> {
    let file = file_name(path);
    let mut rdr = csv_reader(path)?;
    let headers = rdr.byte_headers().map_err(|e| DataError::Json {
        file: file.clone(),
        message: e.to_string(),
    })?;
    let cols = Columns::new(&file, headers, &Payment::COLUMNS)?;
    let mut out = Vec::new();
    let mut rec = csv::ByteRecord::new();
    let mut strings = Interner::default();
    let mut row = 0;
    loop {
        row += 1;
        match rdr.read_byte_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                return Err(DataError::Row {
                    file,
                    row,
                    message: e.to_string(),
                })
            }
        }
        let f = |i: usize| cols.get(&rec, i, row);
        let int = |i: usize| -> Result<i64, DataError> {
            let s = f(i)?;
            s.trim()
                .parse::<i64>()
                .or_else(|_| s.trim().parse::<f64>().map(|x| x as i64).map_err(|_| ()))
                .map_err(|_| cols.err(row, Payment::COLUMNS[i], s, "an integer"))
        };
        let flag = |i: usize| -> Result<bool, DataError> {
            let s = f(i)?;
            parse_bool(s).ok_or_else(|| cols.err(row, Payment::COLUMNS[i], s, "a boolean"))
        };
        let amount_text = f(8)?;
        let eur_amount: f64 = amount_text
            .trim()
            .parse()
            .ok()
            .filter(|x: &f64| *x >= 0.0 && x.is_finite())
            .ok_or_else(|| cols.err(row, "eur_amount", amount_text, "a non-negative number"))?;
        let day = int(6)?;
        if !(1..=365).contains(&day) {
            return Err(cols.err(row, "day_of_year", f(6)?, "a day between 1 and 365"));
        }
        out.push(Payment {
            psp_reference: f(0)?.to_string(),
            merchant: strings.get(f(1)?),
            card_scheme: strings.get(f(2)?),
            year: int(3)? as i32,
            hour_of_day: int(4)? as u8,
            minute_of_hour: int(5)? as u8,
            day_of_year: day as u16,
            is_credit: flag(7)?,
            eur_amount,
            ip_country: strings.get(f(9)?),
            issuing_country: strings.get(f(10)?),
            device_type: strings.get(f(11)?),
            ip_address: f(12)?.to_string(),
            email_address: f(13)?.to_string(),
            card_number: f(14)?.to_string(),
            shopper_interaction: strings.get(f(15)?),
            card_bin: f(16)?.to_string(),
            has_fraudulent_dispute: flag(17)?,
            is_refused_by_adyen: flag(18)?,
            aci: strings.get(f(19)?),
            acquirer_country: strings.get(f(20)?),
        });
    }
    Ok(out)
}

pub fn load_fee_rules(path: &Path) -> Result<Vec<FeeRule>, DataError> {
    let file = file_name(path);
    let records: Vec<FeeRuleRecord> = serde_json::from_str(&read_to_string(path)?).map_err(|e| DataError::Json {
        file: file.clone(),
        message: e.to_string(),
    })?;
    let mut ids = HashSet::new();
    let mut rules = Vec::with_capacity(records.len());
    for r in records {
        if !ids.insert(r.id) {
            return Err(DataError::Json {
                file,
                message: format!("duplicate fee rule ID {}", r.id),
            });
        }
        rules.push(FeeRule::from_record(r)?);
    }
    Ok(rules)
}

pub fn load_merchants(path: &Path) -> Result<Vec<MerchantConfig>, DataError> {
    let file = file_name(path);
    let merchants: Vec<MerchantConfig> = serde_json::from_str(&read_to_string(path)?).map_err(|e| DataError::Json {
        file: file.clone(),
        message: e.to_string(),
    })?;
    for (i, m) in merchants.iter().enumerate() {
        if !ACCOUNT_TYPES.contains(&m.account_type.as_str()) {
            return Err(DataError::Row {
                file,
                row: i + 1,
                message: format!("account_type {:?} is not one of {}", m.account_type, ACCOUNT_TYPES.join(", ")),
            });
        }
    }
    Ok(merchants)
}

fn load_pairs(path: &Path, columns: [&str; 2]) -> Result<Vec<(usize, String, String)>, DataError> {
    let file = file_name(path);
    let mut rdr = csv_reader(path)?;
    let headers = rdr.byte_headers().map_err(|e| DataError::Json {
        file: file.clone(),
        message: e.to_string(),
    })?;
    let cols = Columns::new(&file, headers, &columns)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.byte_records().enumerate() {
        let rec = rec.map_err(|e| DataError::Row {
            file: file.clone(),
            row: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, cols.get(&rec, 0, i + 1)?.to_string(), cols.get(&rec, 1, i + 1)?.to_string()));
    }
    Ok(out)
}

pub fn load_acquirers(path: &Path) -> Result<Vec<AcquirerCountry>, DataError> {
    Ok(load_pairs(path, ["acquirer", "country_code"])?
        .into_iter()
        .map(|(_, acquirer, country_code)| AcquirerCountry { acquirer, country_code })
        .collect())
}

pub fn load_mccs(path: &Path) -> Result<Vec<MccDescription>, DataError> {
    load_pairs(path, ["mcc", "description"])?
        .into_iter()
        .map(|(row, mcc, description)| {
            Ok(MccDescription {
                mcc: mcc.trim().parse().map_err(|_| DataError::Row {
                    file: file_name(path),
                    row,
                    message: format!("mcc = {mcc:?} is not an integer"),
                })?,
                description,
            })
        })
        .collect()
}

pub fn load_dataset(paths: &DataPaths) -> Result<Dataset, DataError> {
    let ds = Dataset {
        payments: load_payments(&paths.payments)?,
        fee_rules: load_fee_rules(&paths.fees)?,
        merchants: load_merchants(&paths.merchants)?,
        acquirers: load_acquirers(&paths.acquirers)?,
        mccs: load_mccs(&paths.mccs)?,
    };
    let known: HashMap<&str, ()> = ds.merchants.iter().map(|m| (m.merchant.as_str(), ())).collect();
    if let Some((i, p)) = ds
        .payments
        .iter()
        .enumerate()
        .find(|(_, p)| !known.contains_key(p.merchant.as_str()))
    {
        return Err(DataError::Row {
            file: file_name(&paths.payments),
            row: i + 1,
            message: format!("merchant {} has no entry in {}", p.merchant, file_name(&paths.merchants)),
        });
    }
    Ok(ds)
}
