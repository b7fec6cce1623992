//! Numerical kernels: special functions, log-domain quadrature, root
//! finding, KS statistics, monotone interpolation, and grids.

pub mod grid;
pub mod interp;
pub mod quadrature;
pub mod roots;
pub mod special;
pub mod stats;
