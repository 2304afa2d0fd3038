// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} out of range for a {width}-trit word (max magnitude {max})")]
    Range { value: i64, width: usize, max: i64 },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("illegal weight bit pair (q1={q1}, q2={q2})")]
    IllegalBitPair { q1: u8, q2: u8 },

    #[error("restore margin collapse: {lower_name}={lower:.1} ohm is not below {upper_name}={upper:.1} ohm")]
    MarginCollapse {
        lower_name: &'static str,
        lower: f64,
        upper_name: &'static str,
        upper: f64,
    },

    #[error("array state error: {0}")]
    State(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("capacity exceeded: block {block} (layer {layer}) cannot be placed")]
    Capacity { block: usize, layer: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Model-level failures (as opposed to bad input) exit with a distinct status.
    pub fn is_model_failure(&self) -> bool {
        matches!(self, Error::MarginCollapse { .. } | Error::Capacity { .. })
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
