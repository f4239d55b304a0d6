//! Grids, sampled fields, the plateau mollifier and discrete convolution.

pub mod field;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod ops;

pub use field::Field;
pub use grid::{Axis, GridSpec};
pub use kernel::{make_mollifier, KernelProfile, MollifierKernel};
pub use ops::{
    divergence, gradient, integrate, lp_norm, lp_norm_values, mollified_grid, mollify,
    mollify_derivative, mollify_with, partial, partial_values, shift, shift_difference,
    ConvolutionPath, NormValue,
};
