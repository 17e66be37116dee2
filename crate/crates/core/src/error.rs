use crate::scene::{InstanceId, ParamKey};

/// Why a parameter value was refused.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ParamIssue {
    /// The field is not part of the instance kind's schema.
    WrongKind,
    /// NaN or infinite.
    NotFinite,
    /// Outside the allowed range (negative damping, non-positive period, ...).
    OutOfRange,
    /// A required field was not given.
    Missing,
    /// The same field was named twice in one command.
    Duplicate,
}

impl core::fmt::Display for ParamIssue {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            ParamIssue::WrongKind => "does not belong to this kind",
            ParamIssue::NotFinite => "must be finite",
            ParamIssue::OutOfRange => "is out of range",
            ParamIssue::Missing => "is required",
            ParamIssue::Duplicate => "is given twice",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("CapacityExceeded: at most {limit} concurrent instances")]
    CapacityExceeded { limit: usize },
    #[error("InvalidParam: `{key}` {issue}")]
    InvalidParam { key: ParamKey, issue: ParamIssue },
    #[error("UnknownId: no live instance {0}")]
    UnknownId(InstanceId),
    #[error("DegenerateRange: linear ramp {id} has zero size and non-zero force range")]
    DegenerateRange { id: InstanceId },
}

impl SceneError {
    /// Stable short name, used on the wire and in diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            SceneError::CapacityExceeded { .. } => "CapacityExceeded",
            SceneError::InvalidParam { .. } => "InvalidParam",
            SceneError::UnknownId(_) => "UnknownId",
            SceneError::DegenerateRange { .. } => "DegenerateRange",
        }
    }

    pub(crate) fn param(key: ParamKey, issue: ParamIssue) -> Self {
        SceneError::InvalidParam { key, issue }
    }
}
