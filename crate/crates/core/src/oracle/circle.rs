//! The unit circle S¹ ⊂ ℝ²: sampling, geodesics, Laplace–Beltrami
//! eigenfunctions and band-limited distances.
//!
//! Basis index 0 is the constant `1/√(2π)`. Index `i ≥ 1` has harmonic
//! `k = ⌈i/2⌉` and is `sin kθ/√π` for odd `i`, `cos kθ/√π` for even `i`,
//! with eigenvalue `−k²`.

use std::f64::consts::{PI, TAU};

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::bandlimit::{band_limited_distance, BandLimitedPair};
use crate::error::{Error, Result};
use crate::types::{PointCloud, SpectralDecomposition};

/// Grid resolution for sup norms and the derivative constraint.
pub const FINE_GRID: usize = 10_000;

/// An angle normalised to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirclePoint {
    theta: f64,
}

impl CirclePoint {
    pub fn new(theta: f64) -> Self {
        let t = theta.rem_euclid(TAU);
        // rem_euclid can round up to exactly 2π.
        Self {
            theta: if t >= TAU { 0.0 } else { t },
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn embedding(&self) -> [f64; 2] {
        [self.theta.cos(), self.theta.sin()]
    }
}

/// Arc length `min(|θa − θb|, 2π − |θa − θb|)`.
pub fn circle_geodesic(a: CirclePoint, b: CirclePoint) -> f64 {
    let d = (a.theta - b.theta).abs();
    d.min(TAU - d)
}

pub(crate) fn harmonic_of(index: usize) -> usize {
    index.div_ceil(2)
}

/// Orthonormal basis function `index` evaluated at `theta`.
pub fn circle_basis(index: usize, theta: f64) -> f64 {
    if index == 0 {
        return 1.0 / TAU.sqrt();
    }
    let k = harmonic_of(index) as f64;
    let s = 1.0 / PI.sqrt();
    if index % 2 == 1 {
        s * (k * theta).sin()
    } else {
        s * (k * theta).cos()
    }
}

pub fn circle_basis_derivative(index: usize, theta: f64) -> f64 {
    if index == 0 {
        return 0.0;
    }
    let k = harmonic_of(index) as f64;
    let s = k / PI.sqrt();
    if index % 2 == 1 {
        s * (k * theta).cos()
    } else {
        -s * (k * theta).sin()
    }
}

/// Eigenvalue of basis function `index`.
pub fn circle_eigenvalue(index: usize) -> f64 {
    let k = harmonic_of(index) as f64;
    -k * k
}

/// `n` angles drawn i.i.d. uniform from a seeded ChaCha8 stream.
pub fn sample_uniform_angles(n: usize, seed: u64) -> Vec<CirclePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| CirclePoint::new(rng.random::<f64>() * TAU))
        .collect()
}

pub fn embed(points: &[CirclePoint]) -> Result<PointCloud> {
    let flat: Vec<f64> = points.iter().flat_map(|p| p.embedding()).collect();
    PointCloud::from_flat(flat, 2)
}

/// Uniform sample of the embedded circle.
pub fn sample_uniform_circle(n: usize, seed: u64) -> Result<PointCloud> {
    embed(&sample_uniform_angles(n, seed))
}

/// Largest distance from any point of S¹ to its nearest sample, i.e. half
/// the widest gap between consecutive angles.
pub fn covering_radius_circle(points: &[CirclePoint]) -> f64 {
    if points.is_empty() {
        return f64::INFINITY;
    }
    let mut t: Vec<f64> = points.iter().map(|p| p.theta).collect();
    t.sort_by(f64::total_cmp);
    let wrap = t[0] + TAU - t[t.len() - 1];
    let widest = t.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max);
    widest / 2.0
}

/// The first `count` non-constant eigenfunctions sampled at `points`,
/// column `i − 1` holding basis function `i`, and their eigenvalues.
pub fn analytic_eigenbasis(points: &[CirclePoint], count: usize) -> (Vec<f64>, Mat<f64>) {
    let values = (1..=count).map(circle_eigenvalue).collect();
    let vectors = Mat::from_fn(points.len(), count, |m, i| {
        circle_basis(i + 1, points[m].theta)
    });
    (values, vectors)
}

/// Exact eigendecomposition of the circle Laplacian restricted to the
/// equispaced grid `θ_m = 2πm/n`: the discrete Fourier basis with
/// eigenvalues `−k²`. For even `n` the Nyquist harmonic contributes only its
/// cosine, since its sine vanishes on the grid.
pub fn grid_decomposition(n: usize) -> SpectralDecomposition {
    let theta = |m: usize| TAU * m as f64 / n as f64;
    let nf = n as f64;
    let mut values = Vec::with_capacity(n);
    let mut vectors = Mat::<f64>::zeros(n, n);
    for idx in 0..n {
        let k = harmonic_of(idx);
        values.push(-((k * k) as f64));
        let column: Box<dyn Fn(usize) -> f64> = if idx == 0 {
            Box::new(|_| 1.0 / nf.sqrt())
        } else if 2 * k == n {
            Box::new(move |m| (k as f64 * theta(m)).cos() / nf.sqrt())
        } else if idx % 2 == 1 {
            Box::new(move |m| (2.0 / nf).sqrt() * (k as f64 * theta(m)).sin())
        } else {
            Box::new(move |m| (2.0 / nf).sqrt() * (k as f64 * theta(m)).cos())
        };
        for m in 0..n {
            vectors[(m, idx)] = column(m);
        }
    }
    SpectralDecomposition::assemble(values, vectors)
}

/// Coefficients of `θ ↦ d_geo(θ, t0)` in the orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoefficients {
    /// Coefficient of the constant basis function.
    pub constant: f64,
    /// Coefficients of basis functions `1..=q`.
    pub coeffs: Vec<f64>,
}

impl FourierCoefficients {
    pub fn eval(&self, theta: f64) -> f64 {
        self.constant * circle_basis(0, theta)
            + self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * circle_basis(i + 1, theta))
                .sum::<f64>()
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * circle_basis_derivative(i + 1, theta))
            .sum()
    }
}

/// Fourier coefficients of the distance to `t0` up to basis index `q`.
///
/// The distance is the triangle wave
/// `π/2 − (4/π) Σ_{k odd} cos(k(θ − t0))/k²`.
pub fn distance_fourier_coeffs(t0: f64, q: usize) -> FourierCoefficients {
    let constant = PI / 2.0 * TAU.sqrt();
    let coeffs = (1..=q)
        .map(|i| {
            let k = harmonic_of(i);
            if k % 2 == 0 {
                return 0.0;
            }
            let kf = k as f64;
            let a = -4.0 / (PI * kf * kf) * PI.sqrt();
            if i % 2 == 1 {
                a * (kf * t0).sin()
            } else {
                a * (kf * t0).cos()
            }
        })
        .collect();
    FourierCoefficients { constant, coeffs }
}

/// Sup norm of `f′` on the fine grid.
fn sup_derivative(f: &FourierCoefficients) -> f64 {
    (0..FINE_GRID)
        .map(|g| f.derivative(TAU * g as f64 / FINE_GRID as f64).abs())
        .fold(0.0, f64::max)
}

/// Partial-sum heuristic: truncate the distance function to basis index `q`
/// and rescale so that its derivative is at most one,
/// `|f_q(t0) − f_q(t1)| / max(sup|f_q′|, 1)`.
pub fn partial_sum_distance(t0: f64, t1: f64, q: usize) -> f64 {
    let f = distance_fourier_coeffs(t0, q);
    let gap = (f.eval(t0) - f.eval(t1)).abs();
    gap / sup_derivative(&f).max(1.0)
}

/// Distance at resolution `q`: the sup of `|f(t0) − f(t1)|` over `f` in the
/// span of basis functions `1..=q` with `|f′| ≤ 1`.
pub fn q_resolved_distance(t0: f64, t1: f64, q: usize) -> Result<f64> {
    if !t0.is_finite() || !t1.is_finite() {
        return Err(Error::Parameter("angles must be finite".into()));
    }
    band_limited_distance(t0, t1, q, FINE_GRID)
}

/// `q_resolved_distance` for every `q` in `0..=q_max`, sharing work.
pub fn q_resolved_profile(t0: f64, t1: f64, q_max: usize) -> Result<Vec<f64>> {
    if !t0.is_finite() || !t1.is_finite() {
        return Err(Error::Parameter("angles must be finite".into()));
    }
    let mut pair = BandLimitedPair::new(t0, t1, q_max, FINE_GRID);
    (0..=q_max).map(|q| pair.distance(q)).collect()
}

/// `∫ φ_i φ_j φ_k dθ` by the trapezoid rule, exact for these degrees.
pub fn triple_product(i: usize, j: usize, k: usize) -> f64 {
    let top = harmonic_of(i) + harmonic_of(j) + harmonic_of(k);
    let m = 2 * top + 8;
    let w = TAU / m as f64;
    (0..m)
        .map(|g| {
            let t = w * g as f64;
            circle_basis(i, t) * circle_basis(j, t) * circle_basis(k, t)
        })
        .sum::<f64>()
        * w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trapezoid(f: impl Fn(f64) -> f64, m: usize) -> f64 {
        let w = TAU / m as f64;
        (0..m).map(|g| f(w * g as f64)).sum::<f64>() * w
    }

    #[test]
    fn geodesic_examples() {
        let p = |t| CirclePoint::new(t);
        assert!((circle_geodesic(p(0.0), p(PI)) - PI).abs() < 1e-15);
        assert!((circle_geodesic(p(0.1), p(TAU - 0.1)) - 0.2).abs() < 1e-12);
        assert_eq!(circle_geodesic(p(1.0), p(1.0)), 0.0);
        assert!((CirclePoint::new(-0.5).theta() - (TAU - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn basis_is_orthonormal() {
        for i in 0..9 {
            for j in 0..9 {
                let g = trapezoid(|t| circle_basis(i, t) * circle_basis(j, t), 64);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g - expect).abs() < 1e-12, "({i},{j}) {g}");
            }
        }
    }

    #[test]
    fn basis_functions_are_eigenfunctions() {
        // Second derivative by central differences.
        let h = 1e-4;
        for i in 1..7 {
            for &t in &[0.3, 1.9, 4.4] {
                let dd = (circle_basis(i, t + h) - 2.0 * circle_basis(i, t)
                    + circle_basis(i, t - h))
                    / (h * h);
                assert!((dd - circle_eigenvalue(i) * circle_basis(i, t)).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn uniform_bound() {
        let bound = 1.0 / PI.sqrt();
        for i in 1..21 {
            for g in 0..500 {
                assert!(circle_basis(i, g as f64 * 0.0127).abs() <= bound + 1e-15);
            }
        }
    }

    #[test]
    fn triple_products_respect_frequencies() {
        for i in 1..7 {
            for j in 1..7 {
                for k in 1..13 {
                    let (a, b, c) = (harmonic_of(i), harmonic_of(j), harmonic_of(k));
                    let resonant = c == a + b || c == a.abs_diff(b);
                    if !resonant {
                        assert!(triple_product(i, j, k).abs() < 1e-8, "({i},{j},{k})");
                    }
                }
            }
        }
        // cos θ · cos θ · cos 2θ integrates to π/2 before normalisation.
        let expect = PI / 2.0 / PI.powf(1.5);
        assert!((triple_product(2, 2, 4) - expect).abs() < 1e-12);
    }

    #[test]
    fn grid_decomposition_is_exact() {
        for n in [5, 8, 12] {
            let spec = grid_decomposition(n);
            spec.validate().unwrap();
            assert_eq!(spec.kernel_dim(), 1);
            assert_eq!(spec.rank(), n - 1);
            // Circulant Laplacian with eigenvalues −k² on the DFT modes.
            let l = spec.reconstruct();
            for a in 0..n {
                for b in 0..n {
                    let lag = (a + n - b) % n;
                    let expect: f64 = (0..n)
                        .map(|m| {
                            let k = m.min(n - m) as f64;
                            -k * k * (TAU * (m * lag) as f64 / n as f64).cos()
                        })
                        .sum::<f64>()
                        / n as f64;
                    assert!((l[(a, b)] - expect).abs() < 1e-9);
                }
            }
        }
        let spec = grid_decomposition(8);
        assert_eq!(
            spec.eigenvalues(),
            &[-1.0, -1.0, -4.0, -4.0, -9.0, -9.0, -16.0]
        );
    }

    #[test]
    fn analytic_gram_is_near_identity() {
        let pts = sample_uniform_angles(1000, 3);
        let (values, e) = analytic_eigenbasis(&pts, 6);
        assert_eq!(values, vec![-1.0, -1.0, -4.0, -4.0, -9.0, -9.0]);
        let scale = TAU / pts.len() as f64;
        for a in 0..6 {
            for b in 0..6 {
                let g: f64 = (0..pts.len()).map(|m| e[(m, a)] * e[(m, b)]).sum::<f64>() * scale;
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((g - expect).abs() < 0.15, "({a},{b}) {g}");
            }
        }
    }

    #[test]
    fn fourier_coefficients_match_quadrature() {
        for &t0 in &[0.0, 0.9, 3.0, 5.5] {
            let f = distance_fourier_coeffs(t0, 10);
            let geo = |t: f64| circle_geodesic(CirclePoint::new(t), CirclePoint::new(t0));
            let c0 = trapezoid(|t| geo(t) * circle_basis(0, t), 100_000);
            assert!((c0 - f.constant).abs() < 1e-6);
            for (i, c) in f.coeffs.iter().enumerate() {
                let quad = trapezoid(|t| geo(t) * circle_basis(i + 1, t), 100_000);
                assert!((quad - c).abs() < 1e-6, "t0={t0} i={} {quad} vs {c}", i + 1);
            }
        }
    }

    #[test]
    fn partial_sums_converge_to_distance() {
        let f = distance_fourier_coeffs(1.0, 400);
        for &t in &[0.0, 1.0, 2.5, 4.1] {
            let geo = circle_geodesic(CirclePoint::new(t), CirclePoint::new(1.0));
            assert!((f.eval(t) - geo).abs() < 5e-3);
        }
    }

    #[test]
    fn partial_sum_distance_is_lipschitz_bounded() {
        for q in [2, 6, 20] {
            for &(a, b) in &[(0.0, 1.0), (0.5, 3.6), (2.0, 2.2)] {
                let d = partial_sum_distance(a, b, q);
                let geo = circle_geodesic(CirclePoint::new(a), CirclePoint::new(b));
                assert!(d <= geo + 1e-9, "q={q} {d} > {geo}");
            }
        }
    }

    #[test]
    fn resolved_distance_is_monotone_and_bounded() {
        let (a, b) = (0.3, 2.4);
        let geo = circle_geodesic(CirclePoint::new(a), CirclePoint::new(b));
        let mut prev = 0.0;
        for q in [0, 2, 4, 8, 16] {
            let d = q_resolved_distance(a, b, q).unwrap();
            assert!(d + 1e-9 >= prev, "q={q}");
            assert!(d <= geo + 1e-6, "q={q} {d} > {geo}");
            prev = d;
        }
        assert!(prev > 0.97 * geo, "{prev} vs {geo}");
        let profile = q_resolved_profile(a, b, 16).unwrap();
        for q in [0, 2, 4, 8, 16] {
            let single = q_resolved_distance(a, b, q).unwrap();
            assert!((profile[q] - single).abs() < 1e-6, "q={q}");
        }
    }

    #[test]
    fn covering_radius() {
        let pts: Vec<_> = (0..4)
            .map(|m| CirclePoint::new(m as f64 * PI / 2.0))
            .collect();
        assert!((covering_radius_circle(&pts) - PI / 4.0).abs() < 1e-15);
        assert!((covering_radius_circle(&[CirclePoint::new(1.0)]) - PI).abs() < 1e-15);
        assert!(covering_radius_circle(&sample_uniform_angles(2000, 1)) < 0.02);
    }

    #[test]
    fn sampling_is_deterministic() {
        assert_eq!(sample_uniform_angles(50, 9), sample_uniform_angles(50, 9));
        assert_ne!(sample_uniform_angles(50, 9), sample_uniform_angles(50, 10));
        let cloud = sample_uniform_circle(20, 4).unwrap();
        for p in cloud.points() {
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-15);
        }
    }
}
