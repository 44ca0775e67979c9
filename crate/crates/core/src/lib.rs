pub mod error;
pub mod fourier;

pub use error::{BepError, ErrorCategory, Result};
pub use num_complex::Complex64;
pub mod blaschke;
pub mod interpolant;
pub mod toeplitz;
pub mod reference;
pub mod solver;
pub mod series;
pub mod analysis;
