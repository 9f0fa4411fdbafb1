//! Plain-text named tensors.
//!
//! ```text
//! ocsr-tensors 1
//! bond.w1 2 16 128
//! <2048 whitespace-separated values, row-major>
//! ```
//!
//! Each tensor is a header line `name ndim dims...` followed by one line of
//! values. Values round-trip exactly.

use std::collections::BTreeMap;
use std::fmt::Write;

use ndarray::{Array1, Array2, ArrayD, IxDyn};
use thiserror::Error;

use super::ModelError;

const MAGIC: &str = "ocsr-tensors 1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TensorError {
    #[error("missing header line {MAGIC:?}")]
    BadMagic,
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("tensor {0:?} appears twice")]
    Duplicate(String),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NamedTensors {
    pub tensors: BTreeMap<String, ArrayD<f64>>,
}

impl NamedTensors {
    pub fn insert(&mut self, name: &str, t: ArrayD<f64>) {
        self.tensors.insert(name.to_string(), t);
    }

    pub fn extend(&mut self, other: NamedTensors) {
        self.tensors.extend(other.tensors);
    }

    pub fn vector(&self, name: &str) -> Result<Array1<f64>, ModelError> {
        self.tensors
            .get(name)
            .and_then(|t| t.clone().into_dimensionality().ok())
            .ok_or_else(|| ModelError::Tensor(name.into()))
    }

    pub fn matrix(&self, name: &str) -> Result<Array2<f64>, ModelError> {
        self.tensors
            .get(name)
            .and_then(|t| t.clone().into_dimensionality().ok())
            .ok_or_else(|| ModelError::Tensor(name.into()))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC}\n");
        for (name, t) in &self.tensors {
            let _ = write!(out, "{name} {}", t.ndim());
            for d in t.shape() {
                let _ = write!(out, " {d}");
            }
            out.push('\n');
            let vals: Vec<String> = t.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&vals.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TensorError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == MAGIC => {}
            _ => return Err(TensorError::BadMagic),
        }
        let err = |line: usize, reason: &str| TensorError::Syntax {
            line: line + 1,
            reason: reason.to_string(),
        };
        let mut out = NamedTensors::default();
        while let Some((ln, header)) = lines.next() {
            if header.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = header.split_whitespace().collect();
            let name = fields[0];
            let ndim: usize = fields
                .get(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err(ln, "expected rank after name"))?;
            if fields.len() != ndim + 2 {
                return Err(err(ln, "rank does not match the number of dims"));
            }
            let shape: Vec<usize> = fields[2..]
                .iter()
                .map(|s| s.parse().map_err(|_| err(ln, "bad dimension")))
                .collect::<Result<_, _>>()?;
            let (vln, body) = lines.next().ok_or_else(|| err(ln, "missing values line"))?;
            let values: Vec<f64> = body
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| err(vln, "bad value")))
                .collect::<Result<_, _>>()?;
            let t = ArrayD::from_shape_vec(IxDyn(&shape), values)
                .map_err(|_| err(vln, "value count does not match shape"))?;
            if out.tensors.insert(name.to_string(), t).is_some() {
                return Err(TensorError::Duplicate(name.to_string()));
            }
        }
        Ok(out)
    }
}
