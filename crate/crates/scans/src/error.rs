use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScanError {
    /// Bad command line, configuration syntax or parameter values.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] dressed_core::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub type ScanResult<T> = std::result::Result<T, ScanError>;

impl ScanError {
    /// 1 for usage errors, 2 for numerical and I/O failures.
    pub fn exit_code(&self) -> i32 {
        use dressed_core::Error as E;
        match self {
            ScanError::Usage(_) => 1,
            ScanError::Core(E::Domain(_) | E::Config(_)) => 1,
            ScanError::Core(_) | ScanError::Io(_) => 2,
        }
    }
}
