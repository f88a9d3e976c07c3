//! Relation-valued tool predicates and their registry.

pub mod bridge;
pub mod filter;
pub mod ops;
pub mod registry;
pub mod relation;
pub mod value;

pub use bridge::{install_tools, InstallError, ToolContext};
pub use filter::{CmpOp, FilterExpr};
pub use ops::{AggOp, Limit, Order, TableSet};
pub use registry::{Implementation, ToolKind, ToolRegistry, ToolSpec};
pub use relation::{Relation, Row};
pub use value::Value;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ToolError {
    #[error("unknown table {table} (known: {})", known.join(", "))]
    UnknownTable { table: String, known: Vec<String> },
    #[error("unknown field {field} (header: {})", header.join(", "))]
    UnknownField { field: String, header: Vec<String> },
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("projection must name at least one field")]
    EmptyProjection,
    #[error("k must be a positive integer or all, got {0}")]
    InvalidLimit(String),
    #[error("missing required field {0}")]
    MissingField(String),
    #[error("{0}")]
    Data(String),
    #[error("cannot write view output: {0}")]
    Io(String),
}
