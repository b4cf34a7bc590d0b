pub mod affine;
pub mod analytic;
pub mod current;
pub mod error;
pub mod fft;
pub mod fit;
pub mod forge;
pub mod grid;
pub mod laws;
pub mod maxwell;
pub mod ops;
pub mod random;
pub mod sum;

pub use error::{Error, Result};
