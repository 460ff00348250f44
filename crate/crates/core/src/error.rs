use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("problem has {n} variables, above the limit of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("undefined: {0}")]
    Undefined(String),
}
