use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside [{min}, {max}]")]
    Domain {
        what: &'static str,
        value: i64,
        min: i64,
        max: i64,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("rank-deficient design, collinear columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),
    #[error("no belief-consistent worker response at x={x}, w1={wage}")]
    Inconsistent { x: u32, wage: i64 },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}
