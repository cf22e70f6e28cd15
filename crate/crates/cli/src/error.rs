use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_AUDIT: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical audit failed: {0}")]
    Audit(String),
    #[error("cannot parse table: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Audit(_) => EXIT_AUDIT,
            CliError::Parse(_) | CliError::Io { .. } => EXIT_IO,
        }
    }

    pub fn field(name: &str, reason: impl std::fmt::Display) -> Self {
        CliError::Config(format!("`{name}`: {reason}"))
    }
}

/// Parameter problems are the caller's; failed integration or non-finite
/// values are numerical.
impl From<cvqkd_core::Error> for CliError {
    fn from(e: cvqkd_core::Error) -> Self {
        use cvqkd_core::Error as E;
        match e {
            E::NonFinite { .. } | E::NotConverged { .. } => CliError::Audit(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_cause() {
        let audit: CliError = cvqkd_core::Error::NonFinite { at: vec![0.0] }.into();
        assert_eq!(audit.exit_code(), EXIT_AUDIT);
        let audit: CliError = cvqkd_core::Error::NotConverged { coarse: 1.0, fine: 2.0 }.into();
        assert_eq!(audit.exit_code(), EXIT_AUDIT);
        let cfg: CliError = cvqkd_core::Error::ZeroAcceptance { r_acc: 0.0 }.into();
        assert_eq!(cfg.exit_code(), EXIT_CONFIG);
        assert_eq!(CliError::Parse("x".into()).exit_code(), EXIT_IO);
    }
}
