//! Numeric kernels for the auxiliary prediction heads: a bond-type
//! classifier over atom-query pairs and a coordinate classifier over bins
//! trained with a Laplace likelihood. Every loss comes with its analytic
//! gradient.

mod bond;
mod coord;
mod tensors;

pub use bond::{BondHeadGrad, BondHeadParams, BOND_CLASSES};
pub use coord::{
    coord_mle_loss, coord_mle_loss_probs, positional_encoding, softplus, CoordHead, CoordLoss,
    DEFAULT_BINS, SCALE_FLOOR,
};
pub use tensors::{NamedTensors, TensorError};

use ndarray::{Array1, ArrayView1};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{what}: expected length {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("positional encoding dimension {0} is not even")]
    OddDimension(usize),
    #[error("Laplace scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("need at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("target {0} lies outside [0, 1]")]
    TargetOutOfRange(f64),
    #[error("probabilities must be non-negative and sum to 1")]
    NotADistribution,
    #[error("missing or misshapen tensor {0:?}")]
    Tensor(String),
}

pub(crate) fn check_len(
    what: &'static str,
    v: ArrayView1<f64>,
    expected: usize,
) -> Result<(), ModelError> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(ModelError::DimensionMismatch {
            what,
            expected,
            got: v.len(),
        })
    }
}

pub fn log_sum_exp(v: ArrayView1<f64>) -> f64 {
    let m = v.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn softmax(v: ArrayView1<f64>) -> Array1<f64> {
    let lse = log_sum_exp(v);
    v.mapv(|x| (x - lse).exp())
}
