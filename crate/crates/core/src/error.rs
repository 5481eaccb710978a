use thiserror::Error;

/// A model parameter violated its domain.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid parameter `{name}`: {reason}")]
pub struct ParamError {
    pub name: &'static str,
    pub reason: String,
}

impl ParamError {
    pub(crate) fn new(name: &'static str, reason: impl Into<String>) -> Self {
        Self {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) fn require(cond: bool, name: &'static str, reason: &str) -> Result<(), ParamError> {
    if cond {
        Ok(())
    } else {
        Err(ParamError::new(name, reason))
    }
}

pub(crate) fn finite(value: f64, name: &'static str) -> Result<(), ParamError> {
    require(value.is_finite(), name, "must be finite")
}
