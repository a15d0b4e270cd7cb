//! Median consensus embedding of an in-memory ensemble.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{canonical_distance_matrix, CanonicalEmbedding, DistanceMatrix, Embedding};
use crate::mds::{project, projection_gap, MdsConfig, MdsMethod};
use crate::median::{weiszfeld_median, MedianDiagnostics, WeiszfeldConfig};

#[derive(Debug, Clone)]
pub struct ConsensusResult {
    pub consensus_matrix: DistanceMatrix,
    pub embedding: CanonicalEmbedding,
    pub diagnostics: MedianDiagnostics,
    pub mds_method: MdsMethod,
    /// `||x_hat - distance_matrix(embedding)||_F`.
    pub projection_gap: f64,
    pub mds_stress: Option<f64>,
}

/// Scalar summary of a [`ConsensusResult`], suitable for reports.
#[derive(Debug, Clone, Serialize)]
pub struct ConsensusSummary<'a> {
    pub n: usize,
    pub p: usize,
    pub mds_method: &'static str,
    pub projection_gap: f64,
    pub mds_stress: Option<f64>,
    pub diagnostics: &'a MedianDiagnostics,
}

impl ConsensusResult {
    pub fn summary(&self) -> ConsensusSummary<'_> {
        ConsensusSummary {
            n: self.embedding.n(),
            p: self.embedding.p(),
            mds_method: self.mds_method.label(),
            projection_gap: self.projection_gap,
            mds_stress: self.mds_stress,
            diagnostics: &self.diagnostics,
        }
    }
}

/// Canonical distance matrices of an ensemble, computed in parallel. Errors
/// carry the index of the offending member.
pub fn ensemble_matrices(embs: &[Embedding]) -> Result<Vec<DistanceMatrix>> {
    embs.par_iter()
        .enumerate()
        .map(|(index, e)| {
            canonical_distance_matrix(e).map_err(|source| Error::Entry {
                index,
                path: format!("<member {index}>").into(),
                source: Box::new(source),
            })
        })
        .collect()
}

/// Geometric median of the canonical distance matrices, projected back to
/// `mds.dim` dimensions.
pub fn median_consensus_from_matrices(
    matrices: &[DistanceMatrix],
    weiszfeld: &WeiszfeldConfig,
    mds: &MdsConfig,
) -> Result<ConsensusResult> {
    let (consensus_matrix, diagnostics) = weiszfeld_median(matrices, weiszfeld)?;
    let projection = project(&consensus_matrix, mds)?;
    let projection_gap = projection_gap(&consensus_matrix, projection.embedding.as_embedding())?;
    Ok(ConsensusResult {
        consensus_matrix,
        embedding: projection.embedding,
        diagnostics,
        mds_method: projection.method,
        projection_gap,
        mds_stress: projection.stress,
    })
}

pub fn median_consensus(
    embs: &[Embedding],
    weiszfeld: &WeiszfeldConfig,
    mds: &MdsConfig,
) -> Result<ConsensusResult> {
    if embs.is_empty() {
        return Err(Error::EmptyEnsemble { needed: 1, got: 0 });
    }
    let n = embs[0].n();
    if let Some(bad) = embs.iter().find(|e| e.n() != n) {
        return Err(Error::mismatch(format!("{n} points"), format!("{} points", bad.n())));
    }
    median_consensus_from_matrices(&ensemble_matrices(embs)?, weiszfeld, mds)
}
