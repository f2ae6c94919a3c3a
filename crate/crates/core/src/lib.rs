//! Anonymizing SQL query engine.

pub mod aggregate;
pub mod condition;
pub mod error;
pub mod eval;
pub mod executor;
pub mod explain;
pub mod noise;
pub mod seeding;
pub mod sql;
pub mod table;
pub mod value;

pub use error::{Error, Result};
pub use table::{EngineConfig, Schema, Table};
pub use value::{ColumnType, Value};
pub use executor::{run_query, AnswerTable, Catalog, Engine, PreparedQuery};
pub use explain::explain;
