//! Measures given as products of determinants, and their correlation kernels.

mod biorthogonal;
mod layered;
mod lgv;
mod varying;

pub use biorthogonal::{bi_kernel, gram, ope_spec, BiorthogonalSpec};
pub use layered::{em_kernel, nice_case_kernel, LayeredSpec, NiceCaseSpec};
pub use lgv::{lgv_check, lgv_transfer, LgvCheck, WeightedDag};
pub use varying::{varying_kernel, Slice, VaryingSpec};
