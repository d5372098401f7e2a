//! Distribution kernels, root finding, fixed-point scans and quadrature.

pub mod dist;
mod fixed_point;
mod quadrature;
mod roots;

pub use dist::{
    cdf, extended_cdf, pdf, phi_normalizer, quantile, sigma_normalizer, survival, truncnorm_cdf_mass,
};
pub use fixed_point::{
    fixed_points_piecewise_quadratic, scan_fixed_points, FixedPointResult, DEFAULT_GRID, RESIDUAL_TOL,
};
pub use quadrature::{integrate_1d, MAX_SEGMENTS};
pub use roots::find_root_bracketed;

/// Default quadrature tolerance.
pub const QUAD_TOL: f64 = 1e-8;
