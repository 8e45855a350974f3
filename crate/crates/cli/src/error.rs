use std::fmt;

/// A failure reported as one machine-parsable line: `error: <kind>: <message>`.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new("invalid_params", message)
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        Self::new("invariant", message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flat: String = self.message.split_whitespace().collect::<Vec<_>>().join(" ");
        write!(f, "error: {}: {}", self.kind, flat)
    }
}

impl From<rdsec::Error> for CliError {
    fn from(e: rdsec::Error) -> Self {
        use rdsec::Error as E;
        let kind = match &e {
            E::Domain { .. } | E::InvalidParams(_) | E::ShapeMismatch { .. } | E::InvalidCovariance(_) => {
                "invalid_params"
            }
            E::SecrecyConditionFails { .. } => "secrecy_condition",
            E::BudgetExceeded { .. } => "budget_exceeded",
            E::EmptyTypicalSet { .. } | E::NoFullBin { .. } => "degenerate_config",
            _ => "numerical",
        };
        Self::new(kind, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new("io", e.to_string())
    }
}
