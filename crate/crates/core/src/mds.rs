//! Projection of a (possibly non-Euclidean) distance matrix back to a
//! `p`-dimensional configuration.
//!
//! Classical (Torgerson) scaling is the deterministic default. SMACOF stress
//! majorization with uniform random starts is available for studying the
//! variability that an iterative MDS solver adds on top of the consensus.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{canonicalize, distance_matrix, CanonicalEmbedding, DistanceMatrix, Embedding};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MdsMethod {
    Classical,
    Smacof,
}

impl MdsMethod {
    pub fn label(self) -> &'static str {
        match self {
            MdsMethod::Classical => "classical",
            MdsMethod::Smacof => "smacof",
        }
    }
}

impl std::str::FromStr for MdsMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(MdsMethod::Classical),
            "smacof" => Ok(MdsMethod::Smacof),
            other => Err(Error::InvalidConfig(format!("unknown MDS method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdsConfig {
    pub dim: usize,
    pub method: MdsMethod,
    pub smacof_trials: usize,
    pub smacof_max_iters: usize,
    pub smacof_tol: f64,
    pub seed: u64,
}

impl Default for MdsConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            method: MdsMethod::Classical,
            smacof_trials: 4,
            smacof_max_iters: 300,
            smacof_tol: 1e-6,
            seed: 0,
        }
    }
}

impl MdsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(Error::InvalidConfig("target dimension must be at least 1".into()));
        }
        if self.smacof_trials < 1 {
            return Err(Error::InvalidConfig("smacof_trials must be at least 1".into()));
        }
        if self.smacof_max_iters < 1 {
            return Err(Error::InvalidConfig("smacof_max_iters must be at least 1".into()));
        }
        if self.smacof_tol.is_nan() || self.smacof_tol <= 0.0 {
            return Err(Error::InvalidConfig("smacof_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Result of projecting a matrix with either method.
#[derive(Debug, Clone)]
pub struct Projection {
    pub embedding: CanonicalEmbedding,
    pub method: MdsMethod,
    /// Raw stress of the returned embedding (SMACOF only).
    pub stress: Option<f64>,
}

pub fn project(x: &DistanceMatrix, cfg: &MdsConfig) -> Result<Projection> {
    cfg.validate()?;
    match cfg.method {
        MdsMethod::Classical => Ok(Projection {
            embedding: classical_mds(x, cfg.dim)?,
            method: MdsMethod::Classical,
            stress: None,
        }),
        MdsMethod::Smacof => {
            let fit = smacof_mds(x, cfg)?;
            Ok(Projection {
                embedding: fit.embedding,
                method: MdsMethod::Smacof,
                stress: Some(fit.stress),
            })
        }
    }
}

fn check_target_dim(x: &DistanceMatrix, p: usize) -> Result<()> {
    if p < 1 || p > x.n() {
        return Err(Error::InvalidConfig(format!(
            "target dimension {p} must lie in 1..={}",
            x.n()
        )));
    }
    if x.n() < 2 {
        return Err(Error::InvalidMatrix("need at least 2 points".into()));
    }
    Ok(())
}

/// First entry of largest magnitude in `values`.
fn pivot<'a>(values: impl IntoIterator<Item = &'a f64>) -> f64 {
    values
        .into_iter()
        .fold(0.0f64, |acc, &v| if v.abs() > acc.abs() { v } else { acc })
}

/// Makes the largest-magnitude entry of every column nonnegative.
fn fix_column_signs(points: &mut DMatrix<f64>) {
    for mut col in points.column_iter_mut() {
        if pivot(col.iter()) < 0.0 {
            col.neg_mut();
        }
    }
}

/// Torgerson coordinates at the scale of `x`: the top `p` eigenpairs of
/// `-J (x∘x) J / 2`, negative eigenvalues clamped to zero.
pub fn classical_mds_coordinates(x: &DistanceMatrix, p: usize) -> Result<Embedding> {
    check_target_dim(x, p)?;
    let n = x.n();
    let sq = x.entries().map(|v| v * v);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));

    let eig = SymmetricEigen::try_new(b, f64::EPSILON, 100 * n.max(10))
        .ok_or(Error::EigenFailure { n })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut coords = DMatrix::zeros(n, p);
    for (k, &idx) in order.iter().take(p).enumerate() {
        let scale = eig.eigenvalues[idx].max(0.0).sqrt();
        coords.set_column(k, &(eig.eigenvectors.column(idx) * scale));
    }
    fix_column_signs(&mut coords);
    Embedding::new(coords)
}

/// Classical MDS followed by canonicalization.
///
/// Distances of the output equal `x` only when `x` already has the scale of a
/// canonical configuration; otherwise they agree up to one positive factor.
pub fn classical_mds(x: &DistanceMatrix, p: usize) -> Result<CanonicalEmbedding> {
    let coords = classical_mds_coordinates(x, p)?;
    let mut out = canonicalize(&coords)?;
    // Recentering can move a near-tie pivot; re-apply the convention.
    for j in 0..p {
        if pivot(out.points().column(j).iter()) < 0.0 {
            out.negate_column(j);
        }
    }
    Ok(out)
}

/// `sum_{i<j} (x_ij - d_ij(points))^2`.
pub fn raw_stress(x: &DistanceMatrix, points: &DMatrix<f64>) -> f64 {
    let n = x.n();
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (points.row(i) - points.row(j)).norm();
            let r = x.entries()[(i, j)] - d;
            total += r * r;
        }
    }
    total
}

#[derive(Debug, Clone)]
pub struct SmacofRun {
    pub points: DMatrix<f64>,
    pub stress: f64,
    /// Stress at the start followed by one entry per Guttman step.
    pub stress_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// One majorization descent from `init`, stopping when the relative stress
/// decrease falls below `tol`.
pub fn smacof_descent(x: &DistanceMatrix, init: DMatrix<f64>, max_iters: usize, tol: f64) -> SmacofRun {
    let n = x.n();
    let delta = x.entries();
    let mut points = init;
    let mut stress = raw_stress(x, &points);
    let mut trace = vec![stress];
    let mut converged = stress == 0.0;
    let mut iterations = 0;

    while !converged && iterations < max_iters {
        // Guttman transform: X <- B(X) X / n.
        let mut b = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (points.row(i) - points.row(j)).norm();
                if d > 0.0 {
                    let v = -delta[(i, j)] / d;
                    b[(i, j)] = v;
                    b[(j, i)] = v;
                }
            }
        }
        for i in 0..n {
            let off: f64 = b.row(i).sum();
            b[(i, i)] = -off;
        }
        points = (b * &points) / n as f64;
        let next = raw_stress(x, &points);
        iterations += 1;
        trace.push(next);
        converged = stress - next <= tol * stress || next == 0.0;
        stress = next;
    }

    SmacofRun {
        points,
        stress,
        stress_trace: trace,
        iterations,
        converged,
    }
}

#[derive(Debug, Clone)]
pub struct SmacofFit {
    pub embedding: CanonicalEmbedding,
    /// Raw stress of the canonical output against `x`.
    pub stress: f64,
    pub best_trial: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Best of `cfg.smacof_trials` SMACOF descents, each started from points
/// drawn uniformly from `[0, 1)` on every axis.
pub fn smacof_mds(x: &DistanceMatrix, cfg: &MdsConfig) -> Result<SmacofFit> {
    cfg.validate()?;
    check_target_dim(x, cfg.dim)?;
    let (n, p) = (x.n(), cfg.dim);

    let runs: Vec<SmacofRun> = (0..cfg.smacof_trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = seed::stream(cfg.seed, &[trial as u64]);
            let init = DMatrix::from_fn(n, p, |_, _| rng.random::<f64>());
            smacof_descent(x, init, cfg.smacof_max_iters, cfg.smacof_tol)
        })
        .collect();

    // Lowest stress wins; the earlier trial wins ties.
    let (best_trial, best) = runs
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.stress.total_cmp(&b.stress))
        .expect("at least one trial");

    let embedding = canonicalize(&Embedding::new(best.points.clone())?)?;
    let stress = raw_stress(x, embedding.points());
    Ok(SmacofFit {
        embedding,
        stress,
        best_trial,
        iterations: best.iterations,
        converged: best.converged,
    })
}

/// Frobenius gap between `x` and the distances of an embedding.
pub fn projection_gap(x: &DistanceMatrix, e: &Embedding) -> Result<f64> {
    crate::geometry::frobenius_distance(x, &distance_matrix(e))
}
