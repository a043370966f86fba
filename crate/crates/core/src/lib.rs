//! Determinantal point processes on finite sets: explicit weight models, their
//! correlation kernels, and a brute-force oracle that checks one against the
//! other.

pub mod continuum;
mod dd;
pub mod detproducts;
pub mod dimer;
pub mod error;
pub mod io;
pub mod lensemble;
pub mod linalg;
pub mod markov;
pub mod mechanism;
pub mod observables;
pub mod onedep;
pub mod oracle;
pub mod plancherel;
pub mod process;
pub mod sampler;
pub mod suite;
pub mod ust;

pub use error::{DppError, Result};
pub use linalg::CMatrix;
pub use num_complex::Complex64;
pub use process::{Configuration, ExplicitProcess, GroundSet, KernelMatrix};
