//! Instability statistics over collections of embeddings.
//!
//! Standard deviations are population deviations (divide by the count).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{canonical_distance_matrix, frobenius_distance, DistanceMatrix, Embedding};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Number of embeddings summarized.
    pub k: usize,
    pub mean_to_reference: Option<f64>,
    pub sd_to_reference: Option<f64>,
    pub mean_pairwise: Option<f64>,
    pub sd_pairwise: Option<f64>,
    /// Pairwise distances `(0,1), (0,2), ..., (1,2), ...`, length `k(k-1)/2`.
    pub pairwise_table: Vec<f64>,
}

/// Mean and population standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn check_same_n(embs: &[Embedding], n: usize) -> Result<()> {
    match embs.iter().find(|e| e.n() != n) {
        Some(bad) => Err(Error::mismatch(format!("{n} points"), format!("{} points", bad.n()))),
        None => Ok(()),
    }
}

fn canonical_matrices(embs: &[Embedding]) -> Result<Vec<DistanceMatrix>> {
    embs.par_iter().map(canonical_distance_matrix).collect()
}

/// Distances from every embedding to `reference`.
pub fn distances_to_reference(embs: &[Embedding], reference: &Embedding) -> Result<Vec<f64>> {
    if embs.is_empty() {
        return Err(Error::EmptyEnsemble { needed: 1, got: 0 });
    }
    check_same_n(embs, reference.n())?;
    let target = canonical_distance_matrix(reference)?;
    canonical_matrices(embs)?
        .iter()
        .map(|d| frobenius_distance(d, &target))
        .collect()
}

/// Mean and SD of the distance from each embedding to `reference`.
pub fn mean_distance_to_reference(embs: &[Embedding], reference: &Embedding) -> Result<(f64, f64)> {
    Ok(mean_sd(&distances_to_reference(embs, reference)?))
}

/// Upper-triangular table of pairwise embedding distances.
pub fn pairwise_table(embs: &[Embedding]) -> Result<Vec<f64>> {
    let k = embs.len();
    if k < 2 {
        return Err(Error::EmptyEnsemble { needed: 2, got: k });
    }
    check_same_n(embs, embs[0].n())?;
    let mats = canonical_matrices(embs)?;
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| ((i + 1)..k).map(move |j| (i, j))).collect();
    pairs
        .par_iter()
        .map(|&(i, j)| frobenius_distance(&mats[i], &mats[j]))
        .collect()
}

/// Mean and SD over all unordered pairs, plus the table itself.
pub fn mean_pairwise_distance(embs: &[Embedding]) -> Result<(f64, f64, Vec<f64>)> {
    let table = pairwise_table(embs)?;
    let (mean, sd) = mean_sd(&table);
    Ok((mean, sd, table))
}

/// Full report; the reference part is filled in only when one is given.
/// Pairwise statistics are left empty for a single embedding with a
/// reference, and are an error for a single embedding without one.
pub fn summarize(embs: &[Embedding], reference: Option<&Embedding>) -> Result<MetricsReport> {
    let k = embs.len();
    let mut report = MetricsReport {
        k,
        mean_to_reference: None,
        sd_to_reference: None,
        mean_pairwise: None,
        sd_pairwise: None,
        pairwise_table: Vec::new(),
    };
    if let Some(r) = reference {
        let (mean, sd) = mean_distance_to_reference(embs, r)?;
        report.mean_to_reference = Some(mean);
        report.sd_to_reference = Some(sd);
    }
    if k >= 2 || reference.is_none() {
        let (mean, sd, table) = mean_pairwise_distance(embs)?;
        report.mean_pairwise = Some(mean);
        report.sd_pairwise = Some(sd);
        report.pairwise_table = table;
    }
    Ok(report)
}
