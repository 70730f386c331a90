//! Maximizing the distance objective over the coefficient box.
//!
//! Candidates `v̂ ∈ [-1, 1]^q` are drawn sequentially from a seeded ChaCha8
//! stream, so a run with more samples sees a superset of the candidates of a
//! shorter run. The `keep_top` best are then polished by coordinate pattern
//! search: try `±step` along each axis (clamped to the box), keep any
//! improvement, and halve the step after a sweep without one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{DiracConfig, Evaluated};
use crate::laplacian::gram_distances;
use crate::types::{DistanceMatrix, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub n_samples: usize,
    pub n_refine: usize,
    pub step0: f64,
    pub seed: u64,
    pub keep_top: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            n_samples: 2000,
            n_refine: 20,
            step0: 0.5,
            seed: 0,
            keep_top: 8,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidConfig("n_samples must be at least 1".into()));
        }
        self.validate_search()
    }

    fn validate_search(&self) -> Result<()> {
        if !(self.step0 > 0.0 && self.step0 <= 2.0) {
            return Err(Error::InvalidConfig(format!(
                "step0 must lie in (0, 2], got {}",
                self.step0
            )));
        }
        if self.keep_top == 0 {
            return Err(Error::InvalidConfig("keep_top must be at least 1".into()));
        }
        Ok(())
    }

    /// The Monte-Carlo candidates, in draw order.
    pub fn candidates(&self, q: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.n_samples)
            .map(|_| (0..q).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .collect()
    }
}

/// Result of a single-pair search.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceEstimate {
    pub value: f64,
    pub coeffs: Vec<f64>,
}

/// `(index, score)` of the `keep` highest scores, ties broken by index.
fn top_indices(scores: &[Option<f64>], keep: usize) -> Vec<usize> {
    let mut ranked: Vec<(usize, f64)> = scores
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|s| (i, s)))
        .collect();
    ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    ranked.truncate(keep);
    ranked.into_iter().map(|(i, _)| i).collect()
}

/// Coordinate pattern search from `start`; `visit` sees every trial point
/// and returns its score (`None` for degenerate points).
fn pattern_search(
    start: &[f64],
    score: f64,
    opt: &OptimizerConfig,
    mut visit: impl FnMut(&[f64]) -> Result<Option<f64>>,
) -> Result<(Vec<f64>, f64)> {
    let mut x = start.to_vec();
    let mut best = score;
    let mut step = opt.step0;
    for _ in 0..opt.n_refine {
        let mut improved = false;
        for k in 0..x.len() {
            for dir in [1.0, -1.0] {
                let moved = (x[k] + dir * step).clamp(-1.0, 1.0);
                if moved == x[k] {
                    continue;
                }
                let mut trial = x.clone();
                trial[k] = moved;
                if let Some(s) = visit(&trial)? {
                    if s > best {
                        x = trial;
                        best = s;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    Ok((x, best))
}

/// Best objective value for the pair `(a, b)` over the candidate stream and
/// its refinements.
pub fn estimate_distance(
    cfg: &DiracConfig<'_>,
    a: usize,
    b: usize,
    opt: &OptimizerConfig,
) -> Result<DistanceEstimate> {
    opt.validate()?;
    if a.max(b) >= cfg.len() {
        return Err(Error::Parameter(format!(
            "sample index {} out of range for n = {}",
            a.max(b),
            cfg.len()
        )));
    }
    if a == b {
        return Ok(DistanceEstimate {
            value: 0.0,
            coeffs: vec![0.0; cfg.q()],
        });
    }
    let candidates = opt.candidates(cfg.q());
    let scores = candidates
        .par_iter()
        .map(|v| cfg.objective(v, a, b))
        .collect::<Result<Vec<_>>>()?;
    let retained = top_indices(&scores, opt.keep_top);
    if retained.is_empty() {
        return Err(Error::EstimationFailure);
    }
    let refined = retained
        .par_iter()
        .map(|&i| {
            let start = scores[i].expect("retained candidates are scored");
            pattern_search(&candidates[i], start, opt, |v| cfg.objective(v, a, b))
        })
        .collect::<Result<Vec<_>>>()?;
    // Earlier retained entries win ties, matching the ranking order.
    let (coeffs, value) = refined
        .into_iter()
        .reduce(|best, next| if next.1 > best.1 { next } else { best })
        .expect("at least one retained candidate");
    Ok(DistanceEstimate { value, coeffs })
}

/// Raises every entry of `best` (row-major upper triangle, row `i` holding
/// pairs `(i, j > i)`) by the ratios of `eval`.
fn absorb(best: &mut [Vec<f64>], eval: &Evaluated) {
    best.par_iter_mut().enumerate().for_each(|(i, row)| {
        for (off, slot) in row.iter_mut().enumerate() {
            if let Some(d) = eval.ratio(i, i + 1 + off) {
                if d > *slot {
                    *slot = d;
                }
            }
        }
    });
}

/// Best ratio of `eval` over all pairs, with its pair.
fn best_pair(eval: &Evaluated) -> Option<(f64, usize, usize)> {
    let n = eval.values.len();
    (0..n)
        .into_par_iter()
        .filter_map(|i| {
            ((i + 1)..n)
                .filter_map(|j| eval.ratio(i, j).map(|d| (d, i, j)))
                .reduce(|x, y| if y.0 > x.0 { y } else { x })
        })
        .reduce_with(|x, y| {
            if y.0 > x.0 || (y.0 == x.0 && (y.1, y.2) < (x.1, x.2)) {
                y
            } else {
                x
            }
        })
}

/// All-pairs estimate: start from Euclidean distances and raise every entry
/// by every evaluated candidate. Refinement of each retained candidate
/// targets the pair on which it scored best.
pub fn estimate_all_distances(
    cfg: &DiracConfig<'_>,
    cloud: &PointCloud,
    opt: &OptimizerConfig,
) -> Result<DistanceMatrix> {
    opt.validate_search()?;
    let n = cloud.len();
    if n != cfg.len() {
        return Err(Error::Parameter(format!(
            "point cloud has {n} points but the decomposition has {}",
            cfg.len()
        )));
    }
    let euclid = gram_distances(cloud);
    let mut best: Vec<Vec<f64>> = (0..n).map(|i| euclid.row(i)[i + 1..].to_vec()).collect();

    let candidates = opt.candidates(cfg.q());
    let mut scores = Vec::with_capacity(candidates.len());
    let mut targets = Vec::with_capacity(candidates.len());
    for v in &candidates {
        let eval = cfg.evaluate(v)?;
        absorb(&mut best, &eval);
        let top = best_pair(&eval);
        scores.push(top.map(|t| t.0));
        targets.push(top.map(|t| (t.1, t.2)));
    }

    for i in top_indices(&scores, opt.keep_top) {
        let (a, b) = targets[i].expect("retained candidates are scored");
        let start = scores[i].expect("retained candidates are scored");
        pattern_search(&candidates[i], start, opt, |v| {
            let eval = cfg.evaluate(v)?;
            absorb(&mut best, &eval);
            Ok(eval.ratio(a, b))
        })?;
    }
    DistanceMatrix::from_fn(n, |i, j| best[i][j - i - 1])
}
