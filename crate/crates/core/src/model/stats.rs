use serde::{Deserialize, Serialize};

use super::{ModelError, ModelValue};
use crate::sheaf::Section;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Median,
    Max,
    Min,
}

fn scalars(s: &Section) -> Result<Vec<f64>, ModelError> {
    if s.dim() != 1 {
        return Err(ModelError::DimMismatch {
            expected: 1,
            got: s.dim(),
        });
    }
    Ok(s.values().map(|v| v[0]).collect())
}

/// Mean of a scalar section; `Null` on the empty domain.
pub fn model_average(s: &Section) -> Result<ModelValue, ModelError> {
    let xs = scalars(s)?;
    if xs.is_empty() {
        return Ok(ModelValue::Null);
    }
    Ok(ModelValue::Scalar(xs.iter().sum::<f64>() / xs.len() as f64))
}

/// Median (midpoint of the central pair for even counts), max or min.
pub fn model_statistic(s: &Section, which: Statistic) -> Result<ModelValue, ModelError> {
    let mut xs = scalars(s)?;
    if xs.is_empty() {
        return Ok(ModelValue::Null);
    }
    let v = match which {
        Statistic::Max => xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Statistic::Min => xs.iter().copied().fold(f64::INFINITY, f64::min),
        Statistic::Median => {
            xs.sort_by(f64::total_cmp);
            let n = xs.len();
            if n % 2 == 1 {
                xs[n / 2]
            } else {
                (xs[n / 2 - 1] + xs[n / 2]) / 2.0
            }
        }
    };
    Ok(ModelValue::Scalar(v))
}
