//! File-to-file pipelines behind the command-line verbs.

use std::path::Path;

use log::info;

use crate::baseline::{build_neighbor_graph, shortest_path_distances};
use crate::error::{Error, Result};
use crate::estimator::DiracConfig;
use crate::io::{read_point_cloud_file, write_distance_matrix_file};
use crate::laplacian::build_laplacian;
use crate::optimizer::{estimate_all_distances, OptimizerConfig};
use crate::spectral::{eigendecompose, select_q};
use crate::types::{DistanceMatrix, ManifoldConfig, PointCloud, TruncationParams};

/// Default cap on the quadratic truncation when none is given.
pub const DEFAULT_R_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QChoice {
    Fixed(usize),
    /// Largest `q` with `2|λ_q| + ε < |λ_r|`.
    Adaptive {
        epsilon: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRequest {
    pub manifold: ManifoldConfig,
    pub q: QChoice,
    /// `None` selects `min(DEFAULT_R_CAP, rank)`.
    pub r: Option<usize>,
    pub optimizer: OptimizerConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub q: usize,
    pub r: usize,
    pub rank: usize,
    pub distances: DistanceMatrix,
}

/// Laplacian, spectrum, truncation and all-pairs search for one cloud.
pub fn estimate_matrix(cloud: &PointCloud, req: &EstimateRequest) -> Result<EstimateReport> {
    let lap = build_laplacian(cloud, &req.manifold)?;
    let spec = eigendecompose(&lap)?;
    let rank = spec.rank();
    let r = req.r.unwrap_or(DEFAULT_R_CAP.min(rank));
    if r > rank {
        return Err(Error::Parameter(format!(
            "r = {r} exceeds the Laplacian rank {rank}"
        )));
    }
    let (q, epsilon) = match req.q {
        QChoice::Fixed(q) => (q, 0.0),
        QChoice::Adaptive { epsilon } => (select_q(&spec, r, epsilon)?, epsilon),
    };
    let trunc = TruncationParams::new(q, r, epsilon, rank)?;
    info!("q = {q}, r = {r}, rank = {rank}");
    let cfg = DiracConfig::new(&spec, trunc)?;
    let distances = estimate_all_distances(&cfg, cloud, &req.optimizer)?;
    Ok(EstimateReport {
        q,
        r,
        rank,
        distances,
    })
}

pub fn run_distance_matrix(
    input: &Path,
    req: &EstimateRequest,
    output: &Path,
) -> Result<EstimateReport> {
    let cloud = read_point_cloud_file(input)?;
    let report = estimate_matrix(&cloud, req)?;
    write_distance_matrix_file(&report.distances, output)?;
    Ok(report)
}

pub fn run_baseline(input: &Path, radius: f64, output: &Path) -> Result<DistanceMatrix> {
    let cloud = read_point_cloud_file(input)?;
    let graph = build_neighbor_graph(&cloud, radius)?;
    let distances = shortest_path_distances(&graph)?;
    write_distance_matrix_file(&distances, output)?;
    Ok(distances)
}
