//! Numerical core for inter-paradigm EEG analysis: a small reverse-mode
//! tensor engine, IIR/spectral signal processing, epoching and synthetic
//! data generation, the statistical battery, the TINN classifier with its
//! baselines, and the training/evaluation loop.
//!
//! The crate is `no_std` (it needs `alloc`). The `std` feature only turns on
//! runtime SIMD dispatch in the matrix kernels.

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dataset;
pub mod dsp;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod stats;
pub mod tensor;
pub mod train;

pub use tensor::{Graph, ModelParams, Tensor, TensorError, Var};
