//! Benchmark data files, fee rules and merchant statistics.

pub mod fees;
pub mod fixture;
pub mod load;
pub mod range;
pub mod schema;
pub mod stats;
pub mod tables;
pub mod write;

pub use fees::{fee_rule_matches, transaction_fee, AppliedFee, FeeContext, FeeEngine, FeeError, FeeInput};
pub use fixture::{generate, FixtureSpec};
pub use load::{load_dataset, DataError, DataPaths};
pub use range::{parse_range_spec, RangeSpec, Unit};
pub use schema::{AcquirerCountry, Dataset, FeeRule, MccDescription, MerchantConfig, MonthlyStats, Payment};
pub use stats::{merchant_monthly_stats, month_of_day};
pub use tables::TABLE_NAMES;
pub use write::write_dataset;
