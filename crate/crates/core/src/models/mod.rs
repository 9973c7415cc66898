//! Classifiers: the TINN convolutional-recurrent network, a shallow
//! convolutional baseline and a filter-bank CSP pipeline with LDA.

mod csp;
mod fbcsp;
mod network;

pub use csp::{csp_fit, log_variance_features, CspError};
pub use fbcsp::{FbcspConfig, FbcspModel};
pub use network::{BnUpdate, Forward, Mode, ModelKind, Network, EPOCH_SHAPE};
