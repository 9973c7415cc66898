//! Dense `f64` tensors and a tape-based reverse-mode differentiation graph.
//!
//! Only the operations used by the classifiers exist: valid 2-D
//! cross-correlation, average pooling, batch normalisation, a bidirectional
//! LSTM, dense layers, a handful of pointwise nonlinearities and the
//! log-softmax / negative log-likelihood loss.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

mod activation;
pub mod check;
mod conv;
mod graph;
mod linear;
mod loss;
mod lstm;
mod norm;
mod params;
mod pool;

pub use graph::{Graph, Var};
pub use lstm::LstmWeights;
pub use norm::BatchStats;
pub use params::{ModelParams, Param, PARAMS_MAGIC, PARAMS_VERSION};

/// Errors raised by tensor construction, graph operations and parameter IO.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorError {
    /// Shapes do not fit the operation; `detail` names the offending axes.
    Dimension { op: &'static str, detail: String },
    /// `product(shape)` does not match the data length.
    DataLength { expected: usize, found: usize },
    /// A forward op produced NaN or an infinity.
    NonFinite { op: &'static str },
    /// Backward was started from a node that is not a scalar.
    NotScalar { shape: Vec<usize> },
    /// Class label outside `[0, classes)`.
    Label { label: usize, classes: usize },
    /// Malformed parameter container.
    Format(String),
    /// A named parameter was not present or had the wrong shape.
    Param(String),
}

impl fmt::Display for TensorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorError::Dimension { op, detail } => write!(f, "{op}: dimension error: {detail}"),
            TensorError::DataLength { expected, found } => {
                write!(f, "shape implies {expected} values but {found} were given")
            }
            TensorError::NonFinite { op } => write!(f, "{op}: produced a non-finite value"),
            TensorError::NotScalar { shape } => {
                write!(f, "backward requires a scalar loss, got shape {shape:?}")
            }
            TensorError::Label { label, classes } => {
                write!(f, "label {label} out of range for {classes} classes")
            }
            TensorError::Format(msg) => write!(f, "parameter file: {msg}"),
            TensorError::Param(msg) => write!(f, "parameter: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TensorError {}

pub(crate) fn dim_err(op: &'static str, detail: String) -> TensorError {
    TensorError::Dimension { op, detail }
}

/// Row-major dense tensor of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, TensorError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(TensorError::DataLength {
                expected,
                found: data.len(),
            });
        }
        if shape.contains(&0) {
            return Err(dim_err(
                "tensor",
                alloc::format!("zero-sized axis in {shape:?}"),
            ));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn full(shape: &[usize], value: f64) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![value],
        }
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(usize) -> f64) -> Self {
        let n: usize = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: (0..n).map(&mut f).collect(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Same data under a new shape with the same element count.
    pub fn reshape(mut self, shape: &[usize]) -> Result<Self, TensorError> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(dim_err(
                "reshape",
                alloc::format!("{:?} -> {:?} changes element count", self.shape, shape),
            ));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    /// Copies rows `[start, start + len)` of the leading axis.
    pub fn slice_outer(&self, start: usize, len: usize) -> Result<Self, TensorError> {
        let outer = self.shape[0];
        if start + len > outer || len == 0 {
            return Err(dim_err(
                "slice_outer",
                alloc::format!("rows {start}..{} of {outer}", start + len),
            ));
        }
        let inner: usize = self.shape[1..].iter().product();
        let mut shape = self.shape.clone();
        shape[0] = len;
        Ok(Tensor {
            shape,
            data: self.data[start * inner..(start + len) * inner].to_vec(),
        })
    }

    /// Gathers rows of the leading axis in the given order.
    pub fn gather_outer(&self, rows: &[usize]) -> Result<Self, TensorError> {
        let outer = self.shape[0];
        if rows.is_empty() {
            return Err(dim_err("gather_outer", "empty row selection".into()));
        }
        let inner: usize = self.shape[1..].iter().product();
        let mut data = Vec::with_capacity(rows.len() * inner);
        for &r in rows {
            if r >= outer {
                return Err(dim_err(
                    "gather_outer",
                    alloc::format!("row {r} of {outer}"),
                ));
            }
            data.extend_from_slice(&self.data[r * inner..(r + 1) * inner]);
        }
        let mut shape = self.shape.clone();
        shape[0] = rows.len();
        Ok(Tensor { shape, data })
    }
}
