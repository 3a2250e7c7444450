//! Prediction error metric.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which normalization the root-mean-square error uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RmseVariant {
    /// `sqrt(Σ e² / N)`, the conventional definition; the default.
    Standard,
    /// `sqrt(Σ e²) / N`, dividing the root by N instead of the sum.
    PaperLiteral,
}

impl RmseVariant {
    pub fn name(self) -> &'static str {
        match self {
            RmseVariant::Standard => "standard",
            RmseVariant::PaperLiteral => "paper",
        }
    }
}

/// Root mean squared error between predictions and truth.
pub fn rmse(pred: &DVector<f64>, truth: &DVector<f64>, variant: RmseVariant) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            context: "rmse inputs",
            expected: truth.len(),
            got: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("rmse of zero points".into()));
    }
    let n = pred.len() as f64;
    let sq: f64 = pred
        .iter()
        .zip(truth.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(match variant {
        RmseVariant::Standard => (sq / n).sqrt(),
        RmseVariant::PaperLiteral => sq.sqrt() / n,
    })
}
