//! Geometric median of distance matrices by smoothed Weiszfeld iteration.
//!
//! The iterate lives in the ambient space of symmetric hollow matrices. Every
//! iterate is a convex combination of the inputs, so it stays symmetric,
//! hollow and nonnegative, and it keeps the triangle inequality. It need not
//! be realizable in `p` dimensions; that is repaired by the MDS projection.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{frobenius_gap, DistanceMatrix};

/// How the weight-smoothing constant is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Smoothing {
    /// A fixed epsilon.
    Absolute(f64),
    /// Epsilon as a multiple of the mean Frobenius norm of the inputs.
    Relative(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeiszfeldConfig {
    pub epsilon: Smoothing,
    /// Relative Frobenius change of the iterate that counts as converged.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for WeiszfeldConfig {
    fn default() -> Self {
        Self {
            epsilon: Smoothing::Relative(1e-8),
            tol: 1e-6,
            max_iters: 1000,
        }
    }
}

impl WeiszfeldConfig {
    pub fn validate(&self) -> Result<()> {
        let eps = match self.epsilon {
            Smoothing::Absolute(v) | Smoothing::Relative(v) => v,
        };
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidConfig(format!("epsilon must be positive, got {eps}")));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    /// Resolves the smoothing constant for a given ensemble.
    pub fn resolve_epsilon(&self, matrices: &[DistanceMatrix]) -> f64 {
        match self.epsilon {
            Smoothing::Absolute(v) => v,
            Smoothing::Relative(factor) => {
                let mean_norm = matrices.iter().map(DistanceMatrix::frobenius_norm).sum::<f64>()
                    / matrices.len().max(1) as f64;
                if mean_norm > 0.0 {
                    factor * mean_norm
                } else {
                    factor
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianDiagnostics {
    pub iterations: usize,
    /// Mean Frobenius distance from the returned matrix to the inputs.
    pub final_objective: f64,
    pub converged: bool,
    /// Objective at the initializer followed by one entry per iteration.
    pub objective_trace: Vec<f64>,
    pub epsilon: f64,
}

fn check_shapes(matrices: &[DistanceMatrix]) -> Result<usize> {
    let first = matrices.first().ok_or(Error::EmptyEnsemble { needed: 1, got: 0 })?;
    let n = first.n();
    if let Some(bad) = matrices.iter().find(|m| m.n() != n) {
        return Err(Error::mismatch(
            format!("{n}x{n} matrix"),
            format!("{0}x{0} matrix", bad.n()),
        ));
    }
    Ok(n)
}

/// `(1/m) * sum_i ||x_i - x||_F`.
pub fn median_objective(x: &DistanceMatrix, matrices: &[DistanceMatrix]) -> Result<f64> {
    let n = check_shapes(matrices)?;
    if x.n() != n {
        return Err(Error::mismatch(
            format!("{n}x{n} matrix"),
            format!("{0}x{0} matrix", x.n()),
        ));
    }
    Ok(gaps(x.entries(), matrices).iter().sum::<f64>() / matrices.len() as f64)
}

fn gaps(x: &DMatrix<f64>, matrices: &[DistanceMatrix]) -> Vec<f64> {
    matrices.iter().map(|m| frobenius_gap(x, m.entries())).collect()
}

fn elementwise_mean(matrices: &[DistanceMatrix], n: usize) -> DMatrix<f64> {
    let mut acc = DMatrix::zeros(n, n);
    for m in matrices {
        acc += m.entries();
    }
    acc / matrices.len() as f64
}

fn weighted_average(matrices: &[DistanceMatrix], weights: &[f64], n: usize) -> DMatrix<f64> {
    let total: f64 = weights.iter().sum();
    let mut acc = DMatrix::zeros(n, n);
    {
        let out = acc.as_mut_slice();
        for (m, &w) in matrices.iter().zip(weights) {
            for (o, v) in out.iter_mut().zip(m.entries().as_slice()) {
                *o += w * v;
            }
        }
    }
    acc / total
}

/// Geometric median of `matrices` under the Frobenius distance.
///
/// Starts from the elementwise mean and applies the reweighting
/// `x <- sum w_i x_i / sum w_i` with `w_i = 1 / (||x - x_i||_F + eps)` until
/// the relative change of the iterate drops below `cfg.tol`.
pub fn weiszfeld_median(
    matrices: &[DistanceMatrix],
    cfg: &WeiszfeldConfig,
) -> Result<(DistanceMatrix, MedianDiagnostics)> {
    cfg.validate()?;
    let n = check_shapes(matrices)?;
    let m = matrices.len() as f64;
    let eps = cfg.resolve_epsilon(matrices);

    let mut x = elementwise_mean(matrices, n);
    let mut dists = gaps(&x, matrices);
    let mut objective = dists.iter().sum::<f64>() / m;
    let mut trace = vec![objective];
    let mut iterations = 0;
    let mut converged = matrices.len() == 1;

    while !converged && iterations < cfg.max_iters {
        let weights: Vec<f64> = dists.iter().map(|d| 1.0 / (d + eps)).collect();
        let next = weighted_average(matrices, &weights, n);
        let change = frobenius_gap(&next, &x);
        let scale = x.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        x = next;
        dists = gaps(&x, matrices);
        objective = dists.iter().sum::<f64>() / m;
        trace.push(objective);
        iterations += 1;
        converged = change / scale < cfg.tol;
    }

    let diagnostics = MedianDiagnostics {
        iterations,
        final_objective: objective,
        converged,
        objective_trace: trace,
        epsilon: eps,
    };
    Ok((DistanceMatrix::from_trusted(x), diagnostics))
}
