use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A document id is empty; `record` is the 0-based record position.
    EmptyId { record: usize },
    DuplicateId { id: String, record: usize },
    InvalidLabel { id: String, category: String, value: i64 },
    DimensionMismatch { expected: usize, found: usize, row: Option<usize> },
    ZeroVector { id: String },
    InvalidId { id: String },
    MissingVector { id: String },
    InvalidArgument(String),
    SingleClass { category: String },
    EmptyQuery,
    ZeroBudget,
    BudgetExceeded { requested: usize, remaining: usize },
    NoPositives { category: String },
    MissingClass { class: u32 },
    MissingTruth { id: String },
    EmptyTestSet,
    OracleMiss { id: String, category: String },
    NotPending { id: String },
    UnknownCategory { category: String },
    /// Internal consistency check failed.
    Invariant(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyId { record } => write!(f, "record {} has an empty id", record + 1),
            Error::DuplicateId { id, record } => {
                write!(f, "duplicate document id \"{id}\" (record {})", record + 1)
            }
            Error::InvalidLabel { id, category, value } => write!(
                f,
                "document \"{id}\": label {value} for category \"{category}\" is not 0 or 1"
            ),
            Error::DimensionMismatch { expected, found, row } => match row {
                Some(r) => write!(
                    f,
                    "dimension mismatch in row {}: expected {expected} components, found {found}",
                    r + 1
                ),
                None => write!(f, "dimension mismatch: expected {expected}, found {found}"),
            },
            Error::ZeroVector { id } => write!(f, "vector for \"{id}\" has zero norm"),
            Error::InvalidId { id } => write!(f, "invalid document id {id:?}"),
            Error::MissingVector { id } => write!(f, "no embedding for document \"{id}\""),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::SingleClass { category } => write!(
                f,
                "training data for category \"{category}\" contains a single class"
            ),
            Error::EmptyQuery => write!(f, "query has no terms"),
            Error::ZeroBudget => write!(f, "annotation budget is exhausted"),
            Error::BudgetExceeded { requested, remaining } => write!(
                f,
                "batch cap {requested} exceeds remaining budget {remaining}"
            ),
            Error::NoPositives { category } => write!(
                f,
                "no positive documents for category \"{category}\"; cannot suggest query terms"
            ),
            Error::MissingClass { class } => {
                write!(f, "stratum {class} is absent from the labeled set")
            }
            Error::MissingTruth { id } => write!(f, "no truth label for \"{id}\""),
            Error::EmptyTestSet => write!(f, "test set is empty"),
            Error::OracleMiss { id, category } => write!(
                f,
                "oracle has no label for \"{id}\" in category \"{category}\""
            ),
            Error::NotPending { id } => {
                write!(f, "\"{id}\" is not in the pending annotation set")
            }
            Error::UnknownCategory { category } => write!(f, "unknown category \"{category}\""),
            Error::Invariant(msg) => write!(f, "internal invariant violated: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
