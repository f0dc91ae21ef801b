//! Infinite convolutions of discrete measures generated by admissible pairs,
//! their candidate spectra, and numerical and exact checks of spectrality.

pub mod config;
pub mod criteria;
pub mod cyclotomic;
pub mod error;
pub mod fixtures;
pub mod fourier;
pub mod gram;
pub mod hadamard;
pub mod linalg;
pub mod measure;
pub mod output;
pub mod pipeline;
pub mod spectrum;
pub mod system;
pub mod types;

pub use error::{Error, Result};
pub use linalg::{IMatrix, IVec, QMatrix, QVec};
pub use measure::DiscreteMeasure;
pub use system::ConvolutionSystem;
pub use types::{AdmissiblePair, DigitSet, ExpandingMatrix};
