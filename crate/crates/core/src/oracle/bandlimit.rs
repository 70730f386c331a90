//! Connes distance restricted to band-limited functions on the circle.
//!
//! `sup |f(t1) − f(t0)|` over trigonometric polynomials `f` in the span of
//! the first `q` non-constant circle harmonics subject to `|f′| ≤ 1`. The
//! derivative bound is enforced on a uniform grid by a cutting-plane loop:
//! solve the LP on a subset of grid points, add the grid points where the
//! solution violates the bound, repeat. The LP value bounds the answer from
//! above and the solution rescaled to slope one bounds it from below; the
//! loop stops once the two agree.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus,
};

use super::circle::{circle_basis, circle_basis_derivative, harmonic_of};
use crate::error::{Error, Result};

const GAP_RTOL: f64 = 1e-7;
const MAX_ROUNDS: usize = 60;
// Accepted if the rounds run out: far below any tolerance used downstream.
const FALLBACK_RTOL: f64 = 1e-6;

/// Band-limited distances between two fixed angles for a range of band
/// limits, sharing the tabulated basis derivatives.
#[derive(Debug, Clone)]
pub struct BandLimitedPair {
    t0: f64,
    t1: f64,
    q_max: usize,
    grid: usize,
    /// Row `g` holds the basis derivatives at angle `2πg/grid`.
    derivative: Vec<Vec<f64>>,
    active: Vec<usize>,
    in_active: Vec<bool>,
}

impl BandLimitedPair {
    /// Derivative bound imposed on `grid` uniformly spaced angles.
    pub fn new(t0: f64, t1: f64, q_max: usize, grid: usize) -> Self {
        let top = harmonic_of(q_max);
        let grid = grid.max(8 * top + 8);
        let derivative = (0..grid)
            .map(|g| {
                let t = std::f64::consts::TAU * g as f64 / grid as f64;
                (1..=q_max).map(|i| circle_basis_derivative(i, t)).collect()
            })
            .collect();
        Self {
            t0,
            t1,
            q_max,
            grid,
            derivative,
            active: Vec::new(),
            in_active: vec![false; grid],
        }
    }

    fn activate(&mut self, g: usize) {
        if !self.in_active[g] {
            self.in_active[g] = true;
            self.active.push(g);
        }
    }

    /// Distance with basis functions `1..=q`. The returned value is attained
    /// by a function satisfying the bound at every grid point.
    pub fn distance(&mut self, q: usize) -> Result<f64> {
        if q > self.q_max {
            return Err(Error::Parameter(format!(
                "q = {q} exceeds the prepared limit {}",
                self.q_max
            )));
        }
        if q == 0 {
            return Ok(0.0);
        }
        let gain: Vec<f64> = (1..=q)
            .map(|i| circle_basis(i, self.t1) - circle_basis(i, self.t0))
            .collect();
        if gain.iter().all(|g| g.abs() < 1e-15) {
            return Ok(0.0);
        }
        // Cuts from other band limits are mostly slack here and only slow
        // the solver down, so each call starts afresh.
        for &g in &self.active {
            self.in_active[g] = false;
        }
        self.active.clear();
        let seed_points = 4 * harmonic_of(q) + 8;
        for s in 0..seed_points {
            self.activate(s * self.grid / seed_points);
        }

        let grid = self.grid;
        let mut lower = 0.0;
        let mut upper = f64::INFINITY;
        for _ in 0..MAX_ROUNDS {
            let (value, coeffs) =
                solve(&gain, self.active.iter().map(|&g| &self.derivative[g][..q]))?;
            let slope: Vec<f64> = self
                .derivative
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(&coeffs)
                        .map(|(a, c)| a * c)
                        .sum::<f64>()
                        .abs()
                })
                .collect();
            let steepest = slope.iter().fold(0.0f64, |m, &s| m.max(s));
            upper = upper.min(value);
            lower = f64::max(lower, value / steepest.max(1.0));
            if upper - lower <= GAP_RTOL * upper.max(1.0) {
                return Ok(lower.max(0.0));
            }
            // Add every local maximum of |f′| that breaks the bound.
            let before = self.active.len();
            for g in 0..grid {
                let prev = slope[(g + grid - 1) % grid];
                let next = slope[(g + 1) % grid];
                if slope[g] > 1.0 && slope[g] >= prev && slope[g] >= next {
                    self.activate(g);
                }
            }
            if self.active.len() == before {
                break;
            }
        }
        if upper - lower <= FALLBACK_RTOL * upper.max(1.0) {
            return Ok(lower.max(0.0));
        }
        Err(Error::Numerical(format!(
            "band-limited distance stalled with bounds [{lower}, {upper}]"
        )))
    }
}

/// Band-limited distance with the derivative bound imposed on `grid`
/// uniformly spaced angles.
pub fn band_limited_distance(t0: f64, t1: f64, q: usize, grid: usize) -> Result<f64> {
    BandLimitedPair::new(t0, t1, q, grid).distance(q)
}

/// `max gainᵀx` subject to `|rowᵀx| ≤ 1` for every row, by interior point.
/// An interior-point solution sits in the middle of a degenerate optimal
/// face, which keeps the cutting-plane iterates stable.
fn solve<'a>(gain: &[f64], rows: impl Iterator<Item = &'a [f64]>) -> Result<(f64, Vec<f64>)> {
    let rows: Vec<&[f64]> = rows.collect();
    let (m, q) = (rows.len(), gain.len());
    // Constraint matrix [R; −R] in compressed-column form.
    let mut colptr = Vec::with_capacity(q + 1);
    let mut rowval = Vec::with_capacity(2 * m * q);
    let mut nzval = Vec::with_capacity(2 * m * q);
    colptr.push(0);
    for j in 0..q {
        for sign in [1.0, -1.0] {
            for (i, row) in rows.iter().enumerate() {
                if row[j] != 0.0 {
                    rowval.push(if sign > 0.0 { i } else { m + i });
                    nzval.push(sign * row[j]);
                }
            }
        }
        colptr.push(rowval.len());
    }
    let a = CscMatrix::new(2 * m, q, colptr, rowval, nzval);
    let p = CscMatrix::<f64>::zeros((q, q));
    let cost: Vec<f64> = gain.iter().map(|g| -g).collect();
    let b = vec![1.0; 2 * m];
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .build()
        .map_err(|e| Error::Numerical(format!("LP settings: {e:?}")))?;
    let mut solver = DefaultSolver::new(&p, &cost, &a, &b, &[NonnegativeConeT(2 * m)], settings)
        .map_err(|e| Error::Numerical(format!("band-limited LP setup failed: {e:?}")))?;
    solver.solve();
    match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {
            Ok((-solver.solution.obj_val, solver.solution.x.clone()))
        }
        status => Err(Error::Numerical(format!(
            "band-limited LP ended with status {status:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn single_harmonic_closed_form() {
        // span{sin θ, cos θ} with |f′| ≤ 1: best is cos θ, gap |cos t0 − cos t1|
        // after rotating; for antipodes that is 2.
        let d = band_limited_distance(0.0, PI, 2, 4000).unwrap();
        assert!((d - 2.0).abs() < 1e-7, "{d}");
        // Chord length 2 sin(s/2) for general separation s.
        let d = band_limited_distance(0.4, 1.5, 2, 4000).unwrap();
        assert!((d - 2.0 * (1.1f64 / 2.0).sin()).abs() < 1e-6, "{d}");
    }

    #[test]
    fn zero_for_empty_band_or_same_point() {
        assert_eq!(band_limited_distance(0.0, 1.0, 0, 100).unwrap(), 0.0);
        assert_eq!(band_limited_distance(1.0, 1.0, 6, 100).unwrap(), 0.0);
    }
}
