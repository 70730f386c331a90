//! Loss experiment on the circle: how well the spectral objective, evaluated
//! at the partial Fourier sum of the distance function, recovers the
//! band-limited distance between the first two samples as `n` grows.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::DiracConfig;
use crate::io::format_float;
use crate::laplacian::build_laplacian;
use crate::optimizer::{estimate_distance, OptimizerConfig};
use crate::oracle::circle::{
    circle_geodesic, embed, partial_sum_distance, sample_uniform_angles, CirclePoint,
};
use crate::spectral::{eigendecompose, select_q};
use crate::types::{ManifoldConfig, SpectralDecomposition};

pub const CSV_HEADER: [&str; 9] = [
    "n", "q_spec", "q_used", "r_used", "seed", "estimate", "oracle", "loss", "status",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Manifold {
    #[default]
    Circle,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QValues {
    #[serde(default)]
    pub fixed: Vec<usize>,
    #[serde(default)]
    pub adaptive: bool,
}

/// Quadratic truncation `r` as a function of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RRule {
    Fixed(usize),
    /// `⌊fraction · n⌋`.
    Fraction(f64),
    /// `min(cap, n − 2)`.
    Capped(usize),
}

impl Default for RRule {
    fn default() -> Self {
        RRule::Capped(20)
    }
}

impl RRule {
    pub fn apply(&self, n: usize) -> usize {
        match *self {
            RRule::Fixed(r) => r,
            RRule::Fraction(f) => (f * n as f64).floor() as usize,
            RRule::Capped(cap) => cap.min(n.saturating_sub(2)),
        }
    }
}

/// Kernel bandwidth as a function of `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    /// `h = c · n^(−alpha)`.
    PowerLaw { c: f64, alpha: f64 },
    /// One bandwidth per entry of `n_values`.
    List(Vec<f64>),
}

impl Default for BandwidthRule {
    fn default() -> Self {
        BandwidthRule::PowerLaw {
            c: 0.5,
            alpha: 0.25,
        }
    }
}

/// How the distance is estimated from the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Objective at the coefficients of the partial Fourier sum.
    #[default]
    PlugIn,
    /// Full Monte-Carlo plus pattern search.
    Search,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub manifold: Manifold,
    pub n_values: Vec<usize>,
    pub q_values: QValues,
    #[serde(default)]
    pub r_rule: RRule,
    #[serde(default)]
    pub bandwidth_rule: BandwidthRule,
    pub n_seeds: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub estimator: EstimatorKind,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    pub output_path: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_values.is_empty() {
            return bad("n_values must not be empty".into());
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_values must be strictly increasing".into());
        }
        if self.n_values[0] < 3 {
            return bad("every n must be at least 3".into());
        }
        if self.n_seeds == 0 {
            return bad("n_seeds must be at least 1".into());
        }
        if self.q_values.fixed.is_empty() && !self.q_values.adaptive {
            return bad("q_values selects no q".into());
        }
        if self.q_values.fixed.contains(&0) {
            return bad("fixed q must be at least 1".into());
        }
        match &self.bandwidth_rule {
            BandwidthRule::PowerLaw { c, alpha } => {
                if !(*c > 0.0 && c.is_finite() && alpha.is_finite()) {
                    return bad(format!(
                        "invalid power-law bandwidth c = {c}, alpha = {alpha}"
                    ));
                }
            }
            BandwidthRule::List(hs) => {
                if hs.len() != self.n_values.len() {
                    return bad("bandwidth list must match n_values in length".into());
                }
                if let Some(h) = hs.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
                    return bad(format!("invalid bandwidth {h}"));
                }
            }
        }
        if let RRule::Fraction(f) = self.r_rule {
            if !(f > 0.0 && f <= 1.0) {
                return bad(format!("r fraction must lie in (0, 1], got {f}"));
            }
        }
        if self.estimator == EstimatorKind::Search {
            self.optimizer.validate()?;
        }
        Ok(())
    }

    pub fn bandwidth(&self, index: usize) -> f64 {
        match &self.bandwidth_rule {
            BandwidthRule::PowerLaw { c, alpha } => c * (self.n_values[index] as f64).powf(-alpha),
            BandwidthRule::List(hs) => hs[index],
        }
    }

    fn q_specs(&self) -> Vec<QSpec> {
        let mut specs: Vec<QSpec> = self
            .q_values
            .fixed
            .iter()
            .map(|&q| QSpec::Fixed(q))
            .collect();
        if self.q_values.adaptive {
            specs.push(QSpec::Adaptive);
        }
        specs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QSpec {
    Fixed(usize),
    Adaptive,
}

impl std::fmt::Display for QSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QSpec::Fixed(q) => write!(f, "{q}"),
            QSpec::Adaptive => f.write_str("adaptive"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    /// Fixed `q` exceeded `r` and was lowered to it.
    Clamped,
    NoAdmissibleQ,
    Degenerate,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Clamped => "clamped",
            RunStatus::NoAdmissibleQ => "no_admissible_q",
            RunStatus::Degenerate => "degenerate",
        }
    }

    pub fn has_loss(&self) -> bool {
        matches!(self, RunStatus::Ok | RunStatus::Clamped)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossRow {
    pub n: usize,
    pub q_spec: QSpec,
    pub q_used: usize,
    pub r_used: usize,
    pub seed: u64,
    pub estimate: f64,
    pub oracle: f64,
    pub loss: f64,
    pub status: RunStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub n: usize,
    pub q_spec: QSpec,
    pub runs: usize,
    pub mean_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossTable {
    pub rows: Vec<LossRow>,
    pub summary: Vec<SummaryRow>,
}

impl LossTable {
    pub fn mean_loss(&self, n: usize, q_spec: QSpec) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.n == n && s.q_spec == q_spec)
            .map(|s| s.mean_loss)
    }
}

struct Sample {
    thetas: Vec<f64>,
    spec: SpectralDecomposition,
    r: usize,
}

fn one_row(
    cfg: &ExperimentConfig,
    n: usize,
    seed: u64,
    sample: &Sample,
    q_spec: QSpec,
) -> Result<LossRow> {
    let Sample { thetas, spec, r } = sample;
    let (t0, t1) = (&thetas[0], &thetas[1]);
    let mut row = LossRow {
        n,
        q_spec,
        q_used: 0,
        r_used: *r,
        seed,
        estimate: f64::NAN,
        oracle: f64::NAN,
        loss: f64::NAN,
        status: RunStatus::Ok,
    };
    let oracle = match q_spec {
        QSpec::Fixed(q) => {
            row.q_used = q.min(*r);
            if row.q_used < q {
                row.status = RunStatus::Clamped;
            }
            partial_sum_distance(*t0, *t1, q)
        }
        QSpec::Adaptive => match select_q(spec, *r, 0.0) {
            Ok(q) => {
                row.q_used = q;
                circle_geodesic_angles(*t0, *t1)
            }
            Err(Error::NoAdmissibleQ { .. }) => {
                row.status = RunStatus::NoAdmissibleQ;
                return Ok(row);
            }
            Err(e) => return Err(e),
        },
    };
    row.oracle = oracle;
    let dirac = DiracConfig::with_qr(spec, row.q_used, *r)?;
    let estimate = match cfg.estimator {
        EstimatorKind::PlugIn => {
            // Spectral coefficients of the sampled distance to the first point.
            let values: Vec<f64> = thetas
                .iter()
                .map(|&t| circle_geodesic_angles(*t0, t))
                .collect();
            let coeffs = dirac.eigen_coefficients(&values)?;
            dirac.oracle_plugin_estimate(&coeffs, 0, 1)
        }
        EstimatorKind::Search => {
            let opt = OptimizerConfig {
                seed: cfg.optimizer.seed.wrapping_add(seed),
                ..cfg.optimizer
            };
            estimate_distance(&dirac, 0, 1, &opt).map(|e| e.value)
        }
    };
    match estimate {
        Ok(v) => {
            row.estimate = v;
            row.loss = (v - oracle).abs();
        }
        Err(Error::EstimationFailure) => row.status = RunStatus::Degenerate,
        Err(e) => return Err(e),
    }
    Ok(row)
}

fn circle_geodesic_angles(t0: f64, t1: f64) -> f64 {
    circle_geodesic(CirclePoint::new(t0), CirclePoint::new(t1))
}

fn run_seed(cfg: &ExperimentConfig, index: usize, seed: u64) -> Result<Vec<LossRow>> {
    let n = cfg.n_values[index];
    let points = sample_uniform_angles(n, seed);
    let cloud = embed(&points)?;
    let lap = build_laplacian(&cloud, &ManifoldConfig::circle(cfg.bandwidth(index))?)?;
    let spec = eigendecompose(&lap)?;
    let r = cfg.r_rule.apply(n).min(spec.rank());
    let sample = Sample {
        thetas: points.iter().map(|p| p.theta()).collect(),
        spec,
        r,
    };
    cfg.q_specs()
        .into_iter()
        .map(|q| one_row(cfg, n, seed, &sample, q))
        .collect()
}

/// Runs every `(n, seed)` replicate, in parallel, and returns the rows in
/// `(n, q_spec, seed)` order with per-`(n, q_spec)` mean losses.
pub fn compute_loss_table(cfg: &ExperimentConfig) -> Result<LossTable> {
    cfg.validate()?;
    let specs = cfg.q_specs();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for index in 0..cfg.n_values.len() {
        let by_seed = (0..cfg.n_seeds as u64)
            .into_par_iter()
            .map(|s| run_seed(cfg, index, cfg.base_seed.wrapping_add(s)))
            .collect::<Result<Vec<_>>>()?;
        for (k, &q_spec) in specs.iter().enumerate() {
            let group: Vec<LossRow> = by_seed.iter().map(|rs| rs[k].clone()).collect();
            let losses: Vec<f64> = group
                .iter()
                .filter(|r| r.status.has_loss())
                .map(|r| r.loss)
                .collect();
            summary.push(SummaryRow {
                n: cfg.n_values[index],
                q_spec,
                runs: losses.len(),
                mean_loss: if losses.is_empty() {
                    f64::NAN
                } else {
                    losses.iter().sum::<f64>() / losses.len() as f64
                },
            });
            rows.extend(group);
        }
    }
    Ok(LossTable { rows, summary })
}

fn float_field(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format_float(x)
    }
}

pub fn write_rows<W: Write>(rows: &[LossRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.q_spec.to_string(),
            r.q_used.to_string(),
            r.r_used.to_string(),
            r.seed.to_string(),
            float_field(r.estimate),
            float_field(r.oracle),
            float_field(r.loss),
            r.status.as_str().to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(summary: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "q_spec", "runs", "mean_loss"])
        .map_err(csv_error)?;
    for s in summary {
        w.write_record([
            s.n.to_string(),
            s.q_spec.to_string(),
            s.runs.to_string(),
            float_field(s.mean_loss),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// `<stem>_<suffix>` next to `path`.
pub fn sibling_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("loss");
    path.with_file_name(format!("{stem}_{suffix}"))
}

/// Rows with an adaptive `q` must still satisfy `2|λ_q| < |λ_r|` on their
/// own spectrum; recomputes each spectrum to confirm.
fn recheck_adaptive(cfg: &ExperimentConfig, rows: &[LossRow]) -> Result<()> {
    for row in rows
        .iter()
        .filter(|r| r.q_spec == QSpec::Adaptive && r.status.has_loss())
    {
        let index = cfg
            .n_values
            .iter()
            .position(|&n| n == row.n)
            .expect("row n is configured");
        let cloud = embed(&sample_uniform_angles(row.n, row.seed))?;
        let lap = build_laplacian(&cloud, &ManifoldConfig::circle(cfg.bandwidth(index))?)?;
        let spec = eigendecompose(&lap)?;
        let (lq, lr) = (spec.eigenvalue(row.q_used), spec.eigenvalue(row.r_used));
        if !(2.0 * lq.abs() < lr.abs()) {
            return Err(Error::Numerical(format!(
                "adaptive q = {} violates 2|λ_q| < |λ_r| at n = {}, seed = {}",
                row.q_used, row.n, row.seed
            )));
        }
    }
    Ok(())
}

/// Runs the experiment and writes the rows CSV to `output_path`, plus
/// `<stem>_summary.csv` and `<stem>_meta.json` beside it.
pub fn run_loss_experiment(cfg: &ExperimentConfig) -> Result<LossTable> {
    let table = compute_loss_table(cfg)?;
    recheck_adaptive(cfg, &table.rows)?;
    write_rows(&table.rows, BufWriter::new(File::create(&cfg.output_path)?))?;
    write_summary(
        &table.summary,
        BufWriter::new(File::create(sibling_path(&cfg.output_path, "summary.csv"))?),
    )?;
    let meta = serde_json::json!({
        "config": cfg,
        "bandwidths": (0..cfg.n_values.len()).map(|i| cfg.bandwidth(i)).collect::<Vec<_>>(),
        "r_values": cfg.n_values.iter().map(|&n| cfg.r_rule.apply(n)).collect::<Vec<_>>(),
        "pair": [0, 1],
        "version": env!("CARGO_PKG_VERSION"),
    });
    let mut f = BufWriter::new(File::create(sibling_path(&cfg.output_path, "meta.json"))?);
    serde_json::to_writer_pretty(&mut f, &meta)?;
    f.flush()?;
    Ok(table)
}
