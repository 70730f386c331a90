//! Gaussian-kernel graph Laplacian and the Euclidean Gram distances.

use std::f64::consts::PI;

use faer::Mat;

use crate::error::Result;
use crate::types::{DistanceMatrix, GraphLaplacian, ManifoldConfig, PointCloud};

/// Unnormalized Gaussian weight `exp(-‖x - y‖² / 4h²)`.
pub fn gaussian_weight(sq_dist: f64, bandwidth: f64) -> f64 {
    (-sq_dist / (4.0 * bandwidth * bandwidth)).exp()
}

/// Prefactor `vol / (2√π · n · h^{2+d})`.
pub fn kernel_scale(n: usize, cfg: &ManifoldConfig) -> f64 {
    let h = cfg.bandwidth();
    cfg.volume() / (2.0 * PI.sqrt() * n as f64 * h.powi(2 + cfg.intrinsic_dim() as i32))
}

/// Builds `L = s (W - diag(W 1))` with Gaussian weights `W` (zero diagonal).
///
/// `L f(x_i) = s Σ_j w_ij (f(x_j) - f(x_i))`, so constants are in the kernel
/// and the operator is symmetric negative semidefinite.
pub fn build_laplacian(cloud: &PointCloud, cfg: &ManifoldConfig) -> Result<GraphLaplacian> {
    cloud.validate()?;
    cfg.validate()?;
    let n = cloud.len();
    let s = kernel_scale(n, cfg);
    let h = cfg.bandwidth();
    let mut m = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        for i in (j + 1)..n {
            let w = s * gaussian_weight(cloud.sq_dist(i, j), h);
            m[(i, j)] = w;
            m[(j, i)] = w;
        }
    }
    for i in 0..n {
        // Row sums in index order; the matrix is symmetric so a column
        // slice is the row.
        let degree: f64 = m.col_as_slice(i).iter().sum();
        m[(i, i)] = -degree;
    }
    Ok(GraphLaplacian::new_unchecked(m))
}

/// Pairwise Euclidean distances `‖X_i - X_j‖`.
pub fn gram_distances(cloud: &PointCloud) -> DistanceMatrix {
    DistanceMatrix::from_fn(cloud.len(), |i, j| cloud.sq_dist(i, j).sqrt())
        .expect("Euclidean distances of a valid cloud are finite and symmetric")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(rows: &[[f64; 2]]) -> PointCloud {
        PointCloud::new(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn single_point_gives_zero_matrix() {
        let l =
            build_laplacian(&cloud(&[[0.3, 0.2]]), &ManifoldConfig::circle(0.5).unwrap()).unwrap();
        assert_eq!(l.len(), 1);
        assert_eq!(l.get(0, 0), 0.0);
    }

    #[test]
    fn annihilates_constants() {
        let c = cloud(&[[0.0, 0.0], [1.0, 0.5], [-0.3, 2.0], [0.7, -1.1]]);
        let l = build_laplacian(&c, &ManifoldConfig::circle(0.8).unwrap()).unwrap();
        for x in l.apply(&[1.0; 4]) {
            assert!(x.abs() < 1e-12);
        }
        l.validate().unwrap();
    }

    #[test]
    fn two_point_closed_form() {
        // Hand-evaluated: u = 0.7, h = 0.4, d = 1, vol = 2π, n = 2.
        let (u, h) = (0.7f64, 0.4f64);
        let s = 2.0 * PI / (2.0 * PI.sqrt() * 2.0 * h * h * h);
        let w = (-(u * u) / (4.0 * h * h)).exp();
        let l = build_laplacian(
            &cloud(&[[0.0, 0.0], [u, 0.0]]),
            &ManifoldConfig::circle(h).unwrap(),
        )
        .unwrap();
        assert!((l.get(0, 1) - s * w).abs() < 1e-14);
        assert!((l.get(1, 0) - s * w).abs() < 1e-14);
        assert!((l.get(0, 0) + s * w).abs() < 1e-14);
        assert!((l.get(1, 1) + s * w).abs() < 1e-14);
    }

    #[test]
    fn gram_three_four_five() {
        let d = gram_distances(&cloud(&[[0.0, 0.0], [3.0, 4.0]]));
        assert_eq!(d.get(0, 1), 5.0);
        assert_eq!(d.get(1, 0), 5.0);
        let d = gram_distances(&cloud(&[[1.0, 1.0]]));
        assert_eq!((d.len(), d.get(0, 0)), (1, 0.0));
    }

    #[test]
    fn gram_matches_double_loop() {
        let pts = [[0.3, -1.2], [2.5, 0.1], [-0.7, 0.9], [1.1, 1.1]];
        let d = gram_distances(&cloud(&pts));
        for (i, p) in pts.iter().enumerate() {
            for (j, q) in pts.iter().enumerate() {
                let mut acc = 0.0;
                for k in 0..2 {
                    acc += (p[k] - q[k]).powi(2);
                }
                assert!((d.get(i, j) - acc.sqrt()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn doubling_volume_doubles_entries() {
        let c = cloud(&[[0.0, 0.0], [0.5, 0.1], [0.2, 0.9]]);
        let a = build_laplacian(&c, &ManifoldConfig::new(1, 1.5, 0.3).unwrap()).unwrap();
        let b = build_laplacian(&c, &ManifoldConfig::new(1, 3.0, 0.3).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(b.get(i, j), 2.0 * a.get(i, j));
            }
        }
    }

    #[test]
    fn weights_grow_with_bandwidth() {
        for sq in [0.01, 0.5, 3.0] {
            let mut prev = 0.0;
            for h in [0.1, 0.2, 0.5, 1.0, 2.0] {
                let w = gaussian_weight(sq, h);
                assert!(w > prev);
                prev = w;
            }
        }
    }
}
