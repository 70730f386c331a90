//! Spectral surrogate for the Connes distance.
//!
//! For a sample function `v`, the squared discrete Dirac operator
//!
//! ```text
//! D̂²v = ½ L (v ⊙ v)_(r) − (v ⊙ L v)_(r)
//! ```
//!
//! estimates `‖∇f‖²` at every sample, where `(·)_(r)` projects onto the
//! kernel of `L` plus its first `r` eigenvectors. Candidate functions are
//! expanded as `v = Σ_{k=1..q} v̂_k e_k`, and the distance between samples
//! `a` and `b` is estimated by maximizing `|v_a − v_b| / sqrt(max D̂²v)` over
//! `v̂ ∈ [-1, 1]^q`.
//!
//! The kernel is kept inside the quadratic projection: `v ⊙ L v` has a
//! non-zero mean (it integrates to `-∫‖∇f‖²`), and dropping it would shift
//! every coordinate of `D̂²v` by that mean.

use log::debug;

use crate::error::{Error, Result};
use crate::types::{CandidateCoefficients, SpectralDecomposition, TruncationParams};

/// `max D̂²` below this value marks a candidate as degenerate.
pub const DEGENERATE_GRAD: f64 = 1e-12;
/// Coordinates of `D̂²` below `-NEGATIVITY_TOL` are reported as numerical noise.
pub const NEGATIVITY_TOL: f64 = 1e-8;

/// Linear (`q`) and quadratic (`r`) truncation of one decomposition.
#[derive(Debug, Clone, Copy)]
pub struct DiracConfig<'a> {
    spec: &'a SpectralDecomposition,
    q: usize,
    r: usize,
}

/// A candidate expanded at every sample: `v = Σ v̂_k e_k` and `sqrt(max D̂²v)`.
#[derive(Debug, Clone)]
pub struct Evaluated {
    pub values: Vec<f64>,
    pub grad_sup: f64,
}

impl Evaluated {
    /// `|v_a - v_b| / ∇̂`, `Some(0)` for a vanishing ratio `0/0`, and `None`
    /// when the gradient vanishes but the numerator does not.
    pub fn ratio(&self, a: usize, b: usize) -> Option<f64> {
        let num = (self.values[a] - self.values[b]).abs();
        if self.grad_sup < DEGENERATE_GRAD {
            (num < DEGENERATE_GRAD).then_some(0.0)
        } else {
            Some(num / self.grad_sup)
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.grad_sup < DEGENERATE_GRAD
    }
}

impl<'a> DiracConfig<'a> {
    pub fn new(spec: &'a SpectralDecomposition, trunc: TruncationParams) -> Result<Self> {
        trunc.validate(spec.rank())?;
        Ok(Self {
            spec,
            q: trunc.q(),
            r: trunc.r(),
        })
    }

    pub fn with_qr(spec: &'a SpectralDecomposition, q: usize, r: usize) -> Result<Self> {
        Self::new(spec, TruncationParams::new(q, r, 0.0, spec.rank())?)
    }

    pub fn spec(&self) -> &'a SpectralDecomposition {
        self.spec
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn len(&self) -> usize {
        self.spec.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spec.is_empty()
    }

    /// Columns spanned by the quadratic projection: kernel, then `e_1..e_r`.
    fn quadratic_basis(&self) -> impl Iterator<Item = (&'a [f64], f64)> + 'a {
        let spec = self.spec;
        let cols = spec.kernel_dim() + self.r;
        (0..cols).map(move |j| (spec.column(j), spec.all_values()[j]))
    }

    fn check_vhat(&self, vhat: &[f64]) -> Result<()> {
        if vhat.len() != self.q {
            return Err(Error::Parameter(format!(
                "expected {} coefficients, got {}",
                self.q,
                vhat.len()
            )));
        }
        if vhat.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parameter("non-finite coefficient".into()));
        }
        Ok(())
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.len() {
            return Err(Error::Parameter(format!(
                "sample index {i} out of range for n = {}",
                self.len()
            )));
        }
        Ok(())
    }

    /// `½ L (v⊙v)_(r) − (v⊙Lv)_(r)` given `v` and `Lv`.
    fn dirac_squared_from(&self, v: &[f64], lv: &[f64]) -> Vec<f64> {
        let square: Vec<f64> = v.iter().map(|x| x * x).collect();
        let cross: Vec<f64> = v.iter().zip(lv).map(|(x, y)| x * y).collect();
        let mut out = vec![0.0; v.len()];
        for (col, lambda) in self.quadratic_basis() {
            let c = 0.5 * lambda * dot(&square, col) - dot(&cross, col);
            axpy(&mut out, c, col);
        }
        out
    }

    /// Pre-square-root Dirac vector `D̂²v` for an arbitrary sample function.
    pub fn dirac_squared(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.len() {
            return Err(Error::Parameter(format!(
                "vector length {} does not match n = {}",
                v.len(),
                self.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parameter("non-finite input vector".into()));
        }
        let spec = self.spec;
        // L v through the full decomposition (kernel columns contribute 0).
        let mut lv = vec![0.0; v.len()];
        for i in 1..=spec.rank() {
            let e = spec.eigenvector(i);
            axpy(&mut lv, spec.eigenvalue(i) * dot(v, e), e);
        }
        Ok(self.dirac_squared_from(v, &lv))
    }

    /// `v = Σ_{k=1..q} v̂_k e_k` at every sample.
    pub fn expand(&self, vhat: &[f64]) -> Result<Vec<f64>> {
        self.check_vhat(vhat)?;
        let mut v = vec![0.0; self.len()];
        for (k, &c) in vhat.iter().enumerate() {
            axpy(&mut v, c, self.spec.eigenvector(k + 1));
        }
        Ok(v)
    }

    /// Coefficients `⟨values, e_k⟩` for `k = 1..q`.
    pub fn eigen_coefficients(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.len() {
            return Err(Error::Parameter(
                "sample vector has the wrong length".into(),
            ));
        }
        Ok((1..=self.q)
            .map(|k| dot(values, self.spec.eigenvector(k)))
            .collect())
    }

    /// `D̂²v` for `v = Σ v̂_k e_k`, using `L v = Σ λ_k v̂_k e_k`.
    pub fn candidate_dirac_squared(&self, vhat: &[f64]) -> Result<Vec<f64>> {
        let v = self.expand(vhat)?;
        let lv = self.expand_scaled(vhat);
        Ok(self.dirac_squared_from(&v, &lv))
    }

    fn expand_scaled(&self, vhat: &[f64]) -> Vec<f64> {
        let mut lv = vec![0.0; self.len()];
        for (k, &c) in vhat.iter().enumerate() {
            axpy(
                &mut lv,
                c * self.spec.eigenvalue(k + 1),
                self.spec.eigenvector(k + 1),
            );
        }
        lv
    }

    /// Same quadratic form assembled from triple products
    /// `c_ijk = Σ_m e_i[m] e_j[m] e_k[m]`:
    ///
    /// `D̂²v = Σ_k Σ_{i,j} (λ_k/2 − λ_j) c_ijk v̂_i v̂_j e_k`,
    ///
    /// with `i, j` over `0..=q` where index 0 is the first kernel vector
    /// carrying coefficient `constant` (and `λ_0 = 0`), and `k` over the
    /// quadratic basis.
    pub fn spectral_dirac_squared(&self, constant: f64, vhat: &[f64]) -> Result<Vec<f64>> {
        self.check_vhat(vhat)?;
        let spec = self.spec;
        let n = self.len();
        let mut linear: Vec<(&[f64], f64, f64)> = Vec::with_capacity(self.q + 1);
        if spec.kernel_dim() > 0 {
            linear.push((spec.kernel_vector(0), 0.0, constant));
        }
        for (k, &c) in vhat.iter().enumerate() {
            linear.push((spec.eigenvector(k + 1), spec.eigenvalue(k + 1), c));
        }
        let mut out = vec![0.0; n];
        for (ek, lambda_k) in self.quadratic_basis() {
            let mut weight = 0.0;
            for (ei, _, ci) in &linear {
                for (ej, lambda_j, cj) in &linear {
                    let c_ijk: f64 = (0..n).map(|m| ei[m] * ej[m] * ek[m]).sum();
                    weight += (0.5 * lambda_k - lambda_j) * c_ijk * ci * cj;
                }
            }
            axpy(&mut out, weight, ek);
        }
        Ok(out)
    }

    /// Expands `v̂` and computes `∇̂ v̂ = sqrt(max_i D̂²v)`.
    pub fn evaluate(&self, vhat: &[f64]) -> Result<Evaluated> {
        let values = self.expand(vhat)?;
        let lv = self.expand_scaled(vhat);
        let d2 = self.dirac_squared_from(&values, &lv);
        Ok(Evaluated {
            grad_sup: sup_root(&d2),
            values,
        })
    }

    /// `∇̂ v̂`, the estimated sup-norm of the gradient of `Σ v̂_k e_k`.
    pub fn grad_sup(&self, vhat: &[f64]) -> Result<f64> {
        Ok(sup_root(&self.candidate_dirac_squared(vhat)?))
    }

    /// `|Σ_k v̂_k (e_k[a] − e_k[b])| / ∇̂ v̂`; `None` marks a degenerate
    /// candidate (vanishing gradient, non-vanishing numerator).
    pub fn objective(&self, vhat: &[f64], a: usize, b: usize) -> Result<Option<f64>> {
        self.check_index(a)?;
        self.check_index(b)?;
        Ok(self.evaluate(vhat)?.ratio(a, b))
    }

    /// Objective at the box-rescaled coefficients of a known target
    /// function (a single feasible point of the estimator's problem).
    pub fn oracle_plugin_estimate(&self, coeffs: &[f64], a: usize, b: usize) -> Result<f64> {
        let vhat = CandidateCoefficients::rescaled(coeffs)?;
        self.objective(&vhat, a, b)?.ok_or(Error::EstimationFailure)
    }
}

/// `sqrt(max_i d2_i)` with negative coordinates clamped to zero.
fn sup_root(d2: &[f64]) -> f64 {
    let noisy = d2.iter().filter(|&&x| x < -NEGATIVITY_TOL).count();
    if noisy > 0 {
        debug!("clamped {noisy} negative Dirac coordinates to zero");
    }
    d2.iter().fold(0.0f64, |m, &x| m.max(x)).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(out: &mut [f64], alpha: f64, x: &[f64]) {
    for (o, xi) in out.iter_mut().zip(x) {
        *o += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::circle::grid_decomposition;

    #[test]
    fn constant_vector_has_zero_gradient() {
        let spec = grid_decomposition(16);
        let cfg = DiracConfig::with_qr(&spec, 4, 8).unwrap();
        let d2 = cfg.dirac_squared(&[0.7; 16]).unwrap();
        assert!(d2.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn zero_candidate_is_zero() {
        let spec = grid_decomposition(12);
        let cfg = DiracConfig::with_qr(&spec, 3, 6).unwrap();
        assert_eq!(cfg.grad_sup(&[0.0; 3]).unwrap(), 0.0);
        assert_eq!(cfg.objective(&[0.0; 3], 0, 5).unwrap(), Some(0.0));
        assert_eq!(cfg.oracle_plugin_estimate(&[0.0; 3], 0, 5).unwrap(), 0.0);
    }

    #[test]
    fn index_and_length_errors() {
        let spec = grid_decomposition(8);
        let cfg = DiracConfig::with_qr(&spec, 2, 6).unwrap();
        assert!(cfg.objective(&[0.5, 0.5], 0, 8).is_err());
        assert!(cfg.objective(&[0.5], 0, 1).is_err());
        assert!(cfg.dirac_squared(&[0.0; 7]).is_err());
        assert!(DiracConfig::with_qr(&spec, 3, 2).is_err());
        assert!(DiracConfig::with_qr(&spec, 2, 8).is_err());
    }

    #[test]
    fn sine_gradient_on_grid() {
        // ‖∇ sin θ‖² = cos² θ.
        let n = 500;
        let spec = grid_decomposition(n);
        let cfg = DiracConfig::with_qr(&spec, 2, 40).unwrap();
        let theta: Vec<f64> = (0..n)
            .map(|m| std::f64::consts::TAU * m as f64 / n as f64)
            .collect();
        let v: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
        let d2 = cfg.dirac_squared(&v).unwrap();
        let err = d2
            .iter()
            .zip(&theta)
            .map(|(d, t)| (d - t.cos().powi(2)).abs())
            .fold(0.0, f64::max);
        assert!(err < 0.05, "max error {err}");
    }

    #[test]
    fn constant_coefficient_changes_nothing() {
        let spec = grid_decomposition(10);
        let cfg = DiracConfig::with_qr(&spec, 3, 7).unwrap();
        let vhat = [0.4, -0.9, 0.25];
        let without = cfg.spectral_dirac_squared(0.0, &vhat).unwrap();
        let with = cfg.spectral_dirac_squared(1.7, &vhat).unwrap();
        for (a, b) in without.iter().zip(&with) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
