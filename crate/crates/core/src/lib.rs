pub mod error;
pub mod fock;
pub mod fpsim;
pub mod inversion;
pub mod io;
pub mod positivity;
pub mod special;
pub mod superop;
pub mod wigner;
pub mod xprec;

pub use error::{Error, Result};
pub use fock::{CMatrix, DensityMatrix, FockDim, FockOperator, Tolerances};
pub use num_complex::Complex64;
