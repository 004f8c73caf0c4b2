//! Laurent-series models of left-invertible operators.

pub mod compop;
pub mod config;
pub mod dtree;
pub mod error;
pub mod index;
pub mod laurent;
pub mod linop;
pub mod mult;
pub mod oracle;
pub mod sample;
pub mod scalar;
pub mod suites;

pub use error::{Error, Result};
pub use index::{FinVec, IndexKey, LocalOperator, C64};
