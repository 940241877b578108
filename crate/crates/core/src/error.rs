use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One of the three transported fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    H,
    M,
    Gamma,
}

impl Field {
    pub const ALL: [Field; 3] = [Field::H, Field::M, Field::Gamma];

    pub fn name(self) -> &'static str {
        match self {
            Field::H => "h",
            Field::M => "m",
            Field::Gamma => "gamma",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("surface tension undefined at gamma = {gamma} (admissible range [0, {limit}))")]
    SurfaceTensionDomain { gamma: f64, limit: f64 },

    #[error("entropy undefined: sigma'({at}) = {slope} > 0")]
    EntropyUndefined { at: f64, slope: f64 },

    #[error("positivity violated: {field}[{cell}] = {value}")]
    Positivity { field: Field, cell: usize, value: f64 },

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    Shape { what: &'static str, got: usize, expected: usize },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("norm series has non-positive value {value} at index {index}")]
    NonPositiveNorm { index: usize, value: f64 },

    #[error("matrix is not symmetric: |b[{row}][{col}] - b[{col}][{row}]| = {gap}")]
    Asymmetric { row: usize, col: usize, gap: f64 },

    #[error("eigensolver did not converge for a {size}x{size} matrix after {iterations} iterations")]
    NoConvergence { size: usize, iterations: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
