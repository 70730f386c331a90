//! Intrinsic distances on sampled manifolds from graph-Laplacian spectra.
//!
//! A point cloud sampled from a compact manifold gives a Gaussian-kernel
//! graph Laplacian. Its low spectrum approximates the Laplace–Beltrami
//! eigenpairs, and a discrete Dirac operator built from that spectrum bounds
//! the gradient of band-limited functions. Maximizing `|f(a) − f(b)|` over
//! such functions with gradient at most one estimates the geodesic distance
//! between samples `a` and `b`.

pub mod baseline;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod io;
pub mod laplacian;
pub mod optimizer;
pub mod oracle;
pub mod pipeline;
pub mod spectral;
pub mod types;

pub use baseline::{build_neighbor_graph, shortest_path_distances, NeighborGraph};
pub use error::{Error, Result};
pub use estimator::{DiracConfig, Evaluated};
pub use laplacian::{build_laplacian, gram_distances};
pub use optimizer::{estimate_all_distances, estimate_distance, DistanceEstimate, OptimizerConfig};
pub use spectral::{eigendecompose, project_leading, select_q, spectral_error};
pub use types::{
    CandidateCoefficients, DistanceMatrix, GraphLaplacian, ManifoldConfig, PointCloud,
    SpectralDecomposition, TruncationParams,
};
