//! Eigendecomposition, leading-eigenspace projection, truncation selection
//! and spectral error against a reference spectrum.

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::types::{GraphLaplacian, SpectralDecomposition};

/// Reference eigenvalues within this relative gap form one eigenspace.
pub const MULTIPLICITY_RTOL: f64 = 1e-6;

/// Dense symmetric eigendecomposition of `L`.
pub fn eigendecompose(lap: &GraphLaplacian) -> Result<SpectralDecomposition> {
    let evd = lap.matrix().self_adjoint_eigen(Side::Lower).map_err(|e| {
        Error::Numerical(format!(
            "symmetric eigensolver did not converge on a {n}x{n} matrix: {e:?}",
            n = lap.len()
        ))
    })?;
    let values: Vec<f64> = evd.S().column_vector().iter().copied().collect();
    let vectors = evd.U().to_owned();
    Ok(SpectralDecomposition::assemble(values, vectors))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(out: &mut [f64], alpha: f64, x: &[f64]) {
    for (o, xi) in out.iter_mut().zip(x) {
        *o += alpha * xi;
    }
}

fn check_r(spec: &SpectralDecomposition, r: usize) -> Result<()> {
    if r == 0 || r > spec.rank() {
        return Err(Error::Parameter(format!(
            "truncation r = {r} outside 1..={}",
            spec.rank()
        )));
    }
    Ok(())
}

/// Orthogonal projection of `v` onto `span(e_1, …, e_r)`.
pub fn project_leading(spec: &SpectralDecomposition, v: &[f64], r: usize) -> Result<Vec<f64>> {
    check_r(spec, r)?;
    if v.len() != spec.len() {
        return Err(Error::Parameter(format!(
            "vector length {} does not match n = {}",
            v.len(),
            spec.len()
        )));
    }
    let mut out = vec![0.0; v.len()];
    for i in 1..=r {
        let e = spec.eigenvector(i);
        axpy(&mut out, dot(v, e), e);
    }
    Ok(out)
}

/// Largest `q ≥ 1` with `2|λ_q| + ε < |λ_r|`.
pub fn select_q(spec: &SpectralDecomposition, r: usize, epsilon: f64) -> Result<usize> {
    check_r(spec, r)?;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Parameter(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    let lambda_r = spec.eigenvalue(r).abs();
    // |λ_q| is non-decreasing in q, so the admissible set is a prefix.
    let q = (1..=r)
        .take_while(|&q| 2.0 * spec.eigenvalue(q).abs() + epsilon < lambda_r)
        .last();
    q.ok_or(Error::NoAdmissibleQ {
        r,
        epsilon,
        lambda_1: spec.eigenvalue(1).abs(),
        lambda_r,
    })
}

/// `err_r`: the worst eigenvalue or sup-norm eigenvector deviation over the
/// first `r` eigenpairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralError {
    pub value: f64,
    pub r: usize,
}

/// Reference eigenpairs evaluated at the sample points.
#[derive(Debug, Clone)]
pub struct SpectralReference {
    /// `λ_1, λ_2, …` (at least `r` of them).
    pub eigenvalues: Vec<f64>,
    /// `n × m` matrix whose column `i - 1` holds `e_i` at the samples.
    pub eigenvectors: Mat<f64>,
    /// Factor applied to the computed (unit-norm) eigenvectors to match the
    /// reference normalization; `sqrt(n / vol)` for `L²`-normalized
    /// eigenfunctions sampled uniformly.
    pub vector_scale: f64,
}

/// Compares the first `r` eigenpairs of `spec` against `reference`.
///
/// Reference eigenvalues closer than [`MULTIPLICITY_RTOL`] are grouped into
/// one eigenspace; within a group the computed vectors are rotated onto the
/// reference by orthogonal Procrustes before the sup-norm comparison.
pub fn spectral_error(
    spec: &SpectralDecomposition,
    reference: &SpectralReference,
    r: usize,
) -> Result<SpectralError> {
    check_r(spec, r)?;
    let n = spec.len();
    if reference.eigenvalues.len() < r || reference.eigenvectors.ncols() < r {
        return Err(Error::Parameter(format!(
            "reference holds fewer than r = {r} eigenpairs"
        )));
    }
    if reference.eigenvectors.nrows() != n {
        return Err(Error::Parameter(
            "reference sampled at a different number of points".into(),
        ));
    }

    let mut worst = 0.0f64;
    for i in 1..=r {
        worst = worst.max((spec.eigenvalue(i) - reference.eigenvalues[i - 1]).abs());
    }

    for group in eigenspace_groups(&reference.eigenvalues[..r]) {
        let m = group.len();
        let computed = Mat::<f64>::from_fn(n, m, |row, c| {
            reference.vector_scale * spec.eigenvector(group[c] + 1)[row]
        });
        let target = Mat::<f64>::from_fn(n, m, |row, c| reference.eigenvectors[(row, group[c])]);
        let rotation = procrustes(&computed, &target)?;
        let aligned = &computed * &rotation;
        for c in 0..m {
            for row in 0..n {
                worst = worst.max((aligned[(row, c)] - target[(row, c)]).abs());
            }
        }
    }
    Ok(SpectralError { value: worst, r })
}

/// Index groups (0-based) of consecutive values within the multiplicity gap.
pub(crate) fn eigenspace_groups(values: &[f64]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match groups.last_mut() {
            Some(g) => {
                let prev = values[*g.last().unwrap()];
                if (v - prev).abs() <= MULTIPLICITY_RTOL * v.abs().max(prev.abs()) {
                    g.push(i);
                } else {
                    groups.push(vec![i]);
                }
            }
            None => groups.push(vec![i]),
        }
    }
    groups
}

/// Orthogonal `Q` minimizing `‖A Q - B‖_F`.
fn procrustes(a: &Mat<f64>, b: &Mat<f64>) -> Result<Mat<f64>> {
    let cross = a.transpose() * b;
    let svd = cross
        .svd()
        .map_err(|e| Error::Numerical(format!("Procrustes SVD failed: {e:?}")))?;
    Ok(svd.U() * svd.V().transpose())
}
