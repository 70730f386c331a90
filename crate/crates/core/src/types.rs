//! Domain types shared by every stage of the pipeline.
//!
//! All types are immutable once built and every constructor validates the
//! invariants listed on the type, so an instance obtained through the public
//! API is always well formed. Each type also exposes a `validate` method that
//! re-checks those invariants from scratch.

use std::ops::Deref;

use faer::{Mat, MatRef};

use crate::error::{Error, Result};

/// Relative magnitude below which an eigenvalue is treated as zero.
pub const ZERO_EIGENVALUE_RTOL: f64 = 1e-9;
/// Magnitude a coordinate must exceed to count as the "first non-zero" one
/// when fixing eigenvector signs.
pub const SIGN_COORDINATE_ATOL: f64 = 1e-12;

const SYMMETRY_RTOL: f64 = 1e-12;
const ROW_SUM_RTOL: f64 = 1e-9;
const ORTHONORMALITY_ATOL: f64 = 1e-9;

/// `n` samples in ambient `R^N`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    coords: Vec<f64>,
    n: usize,
    dim: usize,
}

impl PointCloud {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        validate_point_cloud(rows)
    }

    /// Builds a cloud from row-major coordinates.
    pub fn from_flat(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyInput);
        }
        if dim == 0 || coords.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                row: coords.len() / dim.max(1),
                expected: dim,
                found: coords.len() % dim.max(1),
            });
        }
        let cloud = Self {
            n: coords.len() / dim,
            coords,
            dim,
        };
        cloud.validate()?;
        Ok(cloud)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Ambient dimension `N`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn sq_dist(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::EmptyInput);
        }
        if self.dim == 0 || self.coords.len() != self.n * self.dim {
            return Err(Error::DimensionMismatch {
                row: 0,
                expected: self.dim,
                found: 0,
            });
        }
        for (row, p) in self.points().enumerate() {
            if let Some(col) = p.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite { row, col });
            }
        }
        Ok(())
    }
}

/// Checks raw coordinate rows and packs them into a [`PointCloud`].
pub fn validate_point_cloud(raw: &[Vec<f64>]) -> Result<PointCloud> {
    let first = raw.first().ok_or(Error::EmptyInput)?;
    let dim = first.len();
    if dim == 0 {
        return Err(Error::DimensionMismatch {
            row: 0,
            expected: 1,
            found: 0,
        });
    }
    let mut coords = Vec::with_capacity(raw.len() * dim);
    for (row, p) in raw.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                row,
                expected: dim,
                found: p.len(),
            });
        }
        if let Some(col) = p.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
        coords.extend_from_slice(p);
    }
    Ok(PointCloud {
        n: raw.len(),
        coords,
        dim,
    })
}

/// Known geometry of the sampled manifold plus the kernel bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldConfig {
    intrinsic_dim: usize,
    volume: f64,
    bandwidth: f64,
}

impl ManifoldConfig {
    pub fn new(intrinsic_dim: usize, volume: f64, bandwidth: f64) -> Result<Self> {
        let cfg = Self {
            intrinsic_dim,
            volume,
            bandwidth,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The unit circle: `d = 1`, `vol = 2π`.
    pub fn circle(bandwidth: f64) -> Result<Self> {
        Self::new(1, std::f64::consts::TAU, bandwidth)
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::InvalidBandwidth(self.bandwidth));
        }
        if self.intrinsic_dim == 0 {
            return Err(Error::InvalidConfig(
                "intrinsic dimension must be >= 1".into(),
            ));
        }
        if !(self.volume > 0.0 && self.volume.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "volume must be positive, got {}",
                self.volume
            )));
        }
        Ok(())
    }
}

/// A symmetric negative semidefinite operator on functions sampled at the
/// points, with zero row sums.
#[derive(Debug, Clone)]
pub struct GraphLaplacian {
    matrix: Mat<f64>,
}

impl GraphLaplacian {
    pub fn new(matrix: Mat<f64>) -> Result<Self> {
        let lap = Self { matrix };
        lap.validate()?;
        Ok(lap)
    }

    /// Skips validation; for constructions that hold the invariants by design.
    pub(crate) fn new_unchecked(matrix: Mat<f64>) -> Self {
        Self { matrix }
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    pub fn matrix(&self) -> MatRef<'_, f64> {
        self.matrix.as_ref()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// Matrix-vector product `L v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.len(), "vector length must match the operator");
        let mut out = vec![0.0; v.len()];
        // Column-major storage: accumulate column by column.
        for (j, &vj) in v.iter().enumerate() {
            if vj == 0.0 {
                continue;
            }
            for (o, &l) in out.iter_mut().zip(self.matrix.col_as_slice(j)) {
                *o += l * vj;
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.matrix.nrows();
        if n == 0 || self.matrix.ncols() != n {
            return Err(Error::InvalidMatrix(
                "Laplacian must be square and non-empty".into(),
            ));
        }
        let mut max_abs = 0.0f64;
        for j in 0..n {
            for &x in self.matrix.col_as_slice(j) {
                if !x.is_finite() {
                    return Err(Error::InvalidMatrix("non-finite entry".into()));
                }
                max_abs = max_abs.max(x.abs());
            }
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (self.matrix[(i, j)], self.matrix[(j, i)]);
                if (a - b).abs() > SYMMETRY_RTOL * max_abs {
                    return Err(Error::InvalidMatrix(format!(
                        "not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
            }
        }
        for i in 0..n {
            let (sum, row_max) = (0..n).fold((0.0, 0.0f64), |(s, m), j| {
                let x = self.matrix[(i, j)];
                (s + x, m.max(x.abs()))
            });
            if sum.abs() > ROW_SUM_RTOL * row_max.max(f64::MIN_POSITIVE) && row_max > 0.0 {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} sums to {sum}, not 0"
                )));
            }
        }
        if !self.is_diagonally_dominant_nsd() {
            let values = self
                .matrix
                .self_adjoint_eigenvalues(faer::Side::Lower)
                .map_err(|e| Error::Numerical(format!("eigenvalue check failed: {e:?}")))?;
            let radius = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let top = values.last().copied().unwrap_or(0.0);
            if top > ZERO_EIGENVALUE_RTOL * radius {
                return Err(Error::InvalidMatrix(format!(
                    "not negative semidefinite: largest eigenvalue {top}"
                )));
            }
        }
        Ok(())
    }

    /// Gershgorin certificate: non-positive diagonal that dominates its row.
    fn is_diagonally_dominant_nsd(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| {
            let diag = self.matrix[(i, i)];
            let off: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| self.matrix[(i, j)].abs())
                .sum();
            diag <= 0.0 && -diag >= off * (1.0 - 1e-12)
        })
    }
}

/// Full eigendecomposition of a Laplacian.
///
/// Columns of `vectors` are ordered to match `values`, which are sorted
/// non-increasing. The first `kernel_dim` columns span the kernel; the
/// remaining columns hold `e_1, e_2, …` for the non-zero eigenvalues
/// `λ_1 ≥ λ_2 ≥ …`. Each column's first coordinate of magnitude above
/// [`SIGN_COORDINATE_ATOL`] is positive.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    values: Vec<f64>,
    vectors: Mat<f64>,
    kernel_dim: usize,
}

impl SpectralDecomposition {
    /// Builds a decomposition from arbitrary eigenpairs (columns of
    /// `vectors`), sorting, sign-normalizing and validating them.
    pub fn from_parts(values: Vec<f64>, vectors: Mat<f64>) -> Result<Self> {
        let n = vectors.nrows();
        if values.len() != n || vectors.ncols() != n {
            return Err(Error::InvalidMatrix(format!(
                "expected {n} eigenpairs for an {n}x{n} basis, got {} values and {} columns",
                values.len(),
                vectors.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite eigenvalue".into()));
        }
        let spec = Self::assemble(values, vectors);
        spec.validate()?;
        Ok(spec)
    }

    /// Sorts, classifies the kernel and fixes signs without the O(n³)
    /// orthonormality check.
    pub(crate) fn assemble(values: Vec<f64>, vectors: Mat<f64>) -> Self {
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        let radius = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let is_zero = |v: f64| v.abs() <= ZERO_EIGENVALUE_RTOL * radius;

        // Kernel first, then the non-zero eigenvalues in non-increasing order.
        let (kernel, nonzero): (Vec<usize>, Vec<usize>) =
            order.into_iter().partition(|&i| is_zero(values[i]));
        let kernel_dim = kernel.len();
        let order: Vec<usize> = kernel.into_iter().chain(nonzero).collect();

        let sorted_values: Vec<f64> = order
            .iter()
            .enumerate()
            .map(|(pos, &i)| if pos < kernel_dim { 0.0 } else { values[i] })
            .collect();
        let mut sorted = Mat::<f64>::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            let col = vectors.col_as_slice(src);
            let sign = col
                .iter()
                .find(|x| x.abs() > SIGN_COORDINATE_ATOL)
                .map_or(1.0, |x| x.signum());
            for (o, &x) in sorted.col_as_slice_mut(dst).iter_mut().zip(col) {
                *o = sign * x;
            }
        }
        Self {
            values: sorted_values,
            vectors: sorted,
            kernel_dim,
        }
    }

    /// Number of sample points.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of non-zero eigenvalues.
    pub fn rank(&self) -> usize {
        self.values.len() - self.kernel_dim
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel_dim
    }

    /// Non-zero eigenvalues `λ_1 ≥ λ_2 ≥ … ≥ λ_rank`; slice index `i - 1`
    /// holds `λ_i`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.values[self.kernel_dim..]
    }

    /// `λ_i` for `1 ≤ i ≤ rank`.
    pub fn eigenvalue(&self, i: usize) -> f64 {
        assert!(
            (1..=self.rank()).contains(&i),
            "eigenvalue index {i} out of 1..={}",
            self.rank()
        );
        self.values[self.kernel_dim + i - 1]
    }

    /// `e_i` for `1 ≤ i ≤ rank`.
    pub fn eigenvector(&self, i: usize) -> &[f64] {
        assert!(
            (1..=self.rank()).contains(&i),
            "eigenvector index {i} out of 1..={}",
            self.rank()
        );
        self.vectors.col_as_slice(self.kernel_dim + i - 1)
    }

    /// The `j`-th kernel basis vector, `0 ≤ j < kernel_dim`.
    pub fn kernel_vector(&self, j: usize) -> &[f64] {
        assert!(j < self.kernel_dim, "kernel index {j} out of range");
        self.vectors.col_as_slice(j)
    }

    /// All eigenvalues (kernel zeros first), aligned with [`Self::vectors`].
    pub fn all_values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> MatRef<'_, f64> {
        self.vectors.as_ref()
    }

    /// Column `j` of the basis in storage order (kernel columns first).
    pub fn column(&self, j: usize) -> &[f64] {
        self.vectors.col_as_slice(j)
    }

    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Rebuilds `E Λ Eᵀ`.
    pub fn reconstruct(&self) -> Mat<f64> {
        let n = self.len();
        let scaled = Mat::<f64>::from_fn(n, n, |i, j| self.vectors[(i, j)] * self.values[j]);
        &scaled * self.vectors.transpose()
    }

    /// Orthonormality, ordering, kernel classification and sign convention.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        let radius = self.spectral_radius();
        let thresh = ZERO_EIGENVALUE_RTOL * radius;
        if self.values[..self.kernel_dim].iter().any(|&v| v != 0.0) {
            return Err(Error::InvalidMatrix(
                "kernel eigenvalues must be stored as 0".into(),
            ));
        }
        let nonzero = self.eigenvalues();
        if nonzero.iter().any(|&v| v >= -thresh) {
            return Err(Error::InvalidMatrix(
                "non-zero eigenvalues must be negative (operator is not NSD)".into(),
            ));
        }
        if nonzero.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidMatrix(
                "eigenvalues are not sorted non-increasing".into(),
            ));
        }
        for j in 0..n {
            let col = self.vectors.col_as_slice(j);
            if let Some(x) = col.iter().find(|x| x.abs() > SIGN_COORDINATE_ATOL) {
                if *x < 0.0 {
                    return Err(Error::InvalidMatrix(format!(
                        "eigenvector {j} violates the sign convention"
                    )));
                }
            }
        }
        let gram = self.vectors.transpose() * &self.vectors;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - target).abs() > ORTHONORMALITY_ATOL {
                    return Err(Error::InvalidMatrix(format!(
                        "eigenvectors not orthonormal: (EᵀE)[{i},{j}] = {}",
                        gram[(i, j)]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checks `L E = E Λ` entrywise to `1e-8 · ‖L‖`.
    pub fn validate_against(&self, lap: &GraphLaplacian) -> Result<()> {
        let n = self.len();
        if lap.len() != n {
            return Err(Error::InvalidMatrix("size mismatch with Laplacian".into()));
        }
        let norm = self.spectral_radius();
        let le = lap.matrix() * &self.vectors;
        for j in 0..n {
            for i in 0..n {
                let lhs = le[(i, j)];
                let rhs = self.vectors[(i, j)] * self.values[j];
                if (lhs - rhs).abs() > 1e-8 * norm.max(f64::MIN_POSITIVE) {
                    return Err(Error::InvalidMatrix(format!(
                        "L·E ≠ E·Λ at ({i}, {j}): {lhs} vs {rhs}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The linear/quadratic truncation pair `(q, r)` with gap slack `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationParams {
    q: usize,
    r: usize,
    epsilon: f64,
}

impl TruncationParams {
    pub fn new(q: usize, r: usize, epsilon: f64, rank: usize) -> Result<Self> {
        let t = Self { q, r, epsilon };
        t.validate(rank)?;
        Ok(t)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn validate(&self, rank: usize) -> Result<()> {
        if !(1 <= self.q && self.q <= self.r && self.r <= rank) {
            return Err(Error::Parameter(format!(
                "need 1 <= q <= r <= rank, got q = {}, r = {}, rank = {rank}",
                self.q, self.r
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Parameter(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Symmetric matrix of pairwise distance estimates. Entries may be `+inf`
/// to mark disconnected pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = f(i, j);
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        let m = Self { n, data };
        m.validate()?;
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Iterates `(i, j, d)` over the strict upper triangle.
    pub fn upper_pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| ((i + 1)..self.n).map(move |j| (i, j, self.get(i, j))))
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.len() != self.n * self.n {
            return Err(Error::InvalidMatrix("storage size mismatch".into()));
        }
        for i in 0..self.n {
            if self.get(i, i) != 0.0 {
                return Err(Error::InvalidMatrix(format!("non-zero diagonal at {i}")));
            }
            for j in (i + 1)..self.n {
                let d = self.get(i, j);
                if d.is_nan() || d < 0.0 {
                    return Err(Error::InvalidMatrix(format!(
                        "invalid distance {d} at ({i}, {j})"
                    )));
                }
                if d != self.get(j, i) {
                    return Err(Error::InvalidMatrix(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(())
    }
}

/// A candidate coefficient vector `v̂ ∈ [-1, 1]^q`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateCoefficients {
    coeffs: Vec<f64>,
}

impl CandidateCoefficients {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        let c = Self { coeffs };
        c.validate()?;
        Ok(c)
    }

    /// Maps any non-zero vector into the box by dividing by its largest
    /// magnitude; the zero vector stays zero.
    pub fn rescaled(raw: &[f64]) -> Result<Self> {
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parameter("non-finite coefficient".into()));
        }
        let m = raw.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let coeffs = if m > 0.0 {
            raw.iter().map(|x| (x / m).clamp(-1.0, 1.0)).collect()
        } else {
            raw.to_vec()
        };
        Ok(Self { coeffs })
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn validate(&self) -> Result<()> {
        match self.coeffs.iter().position(|x| !(x.abs() <= 1.0)) {
            Some(k) => Err(Error::Parameter(format!(
                "coefficient {k} = {} lies outside [-1, 1]",
                self.coeffs[k]
            ))),
            None => Ok(()),
        }
    }
}

impl Deref for CandidateCoefficients {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.coeffs
    }
}
