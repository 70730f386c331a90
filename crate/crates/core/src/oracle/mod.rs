//! Analytic ground truth used to check the estimators.

pub mod bandlimit;
pub mod circle;

pub use circle::{
    analytic_eigenbasis, circle_basis, circle_basis_derivative, circle_geodesic,
    covering_radius_circle, distance_fourier_coeffs, embed, grid_decomposition,
    partial_sum_distance, q_resolved_distance, q_resolved_profile, sample_uniform_angles,
    sample_uniform_circle, CirclePoint, FourierCoefficients,
};
