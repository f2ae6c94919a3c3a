//! Attack scenarios, synthetic fixtures and anonymity metrics.

pub mod attacks;
pub mod fixture;
pub mod metrics;

pub use attacks::{
    run_averaging, run_difference, run_split_averaging, salts, AttackReport, DifferenceAttack, SplitAveraging,
};
pub use fixture::{generate, Fixture, FixtureSpec};
pub use metrics::{alpha, kappa};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Engine(#[from] anonsql_core::Error),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl HarnessError {
    pub fn code(&self) -> &'static str {
        match self {
            HarnessError::Engine(e) => e.code(),
            HarnessError::InvalidArgument(_) => "INVALID_ARGUMENT",
        }
    }
}
