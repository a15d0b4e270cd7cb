//! File-level orchestration: manifests in, matrices/embeddings/reports out.

pub mod manifest;
pub mod table;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::consensus::{median_consensus, ConsensusResult, ConsensusSummary};
use crate::error::{Error, Result};
use crate::geometry::{canonical_distance_matrix, frobenius_distance, Embedding};
use crate::mds::{smacof_mds, MdsConfig, MdsMethod};
use crate::median::WeiszfeldConfig;
use crate::metrics::{mean_sd, summarize, MetricsReport};
use crate::seed;

pub use manifest::{EnsembleManifest, ManifestEntry};
pub use table::{load_embedding_file, load_matrix_file};

/// Runs the full consensus pipeline on the embeddings a manifest points to.
pub fn run_consensus(
    manifest: &EnsembleManifest,
    weiszfeld: &WeiszfeldConfig,
    mds: &MdsConfig,
) -> Result<ConsensusRun> {
    let embeddings = manifest.load_embeddings()?;
    let result = median_consensus(&embeddings, weiszfeld, mds).map_err(|e| match e {
        Error::Entry { index, source, .. } => Error::Entry {
            index,
            path: manifest.entries[index].path.clone(),
            source,
        },
        other => other,
    })?;
    let target = canonical_distance_matrix(result.embedding.as_embedding())?;
    let distances = embeddings
        .iter()
        .map(|e| frobenius_distance(&canonical_distance_matrix(e)?, &target))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ConsensusRun {
        entries: manifest.entries.clone(),
        distances,
        result,
    })
}

/// A consensus result together with the ensemble it came from.
#[derive(Debug, Clone)]
pub struct ConsensusRun {
    pub entries: Vec<ManifestEntry>,
    /// Distance from each input embedding to the consensus embedding.
    pub distances: Vec<f64>,
    pub result: ConsensusResult,
}

#[derive(Debug, Serialize)]
pub struct EntryDistance<'a> {
    pub path: &'a Path,
    pub tag: &'a str,
    pub distance_to_consensus: f64,
}

#[derive(Debug, Serialize)]
pub struct TagGroup {
    pub tag: String,
    pub count: usize,
    pub mean_distance: f64,
    pub sd_distance: f64,
}

#[derive(Debug, Serialize)]
pub struct ConsensusReport<'a> {
    pub m: usize,
    #[serde(flatten)]
    pub summary: ConsensusSummary<'a>,
    pub entries: Vec<EntryDistance<'a>>,
    pub tag_groups: Vec<TagGroup>,
}

impl ConsensusRun {
    /// Per-tag mean and SD of the distance to the consensus, sorted by tag.
    pub fn tag_groups(&self) -> Vec<TagGroup> {
        let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for (entry, d) in self.entries.iter().zip(&self.distances) {
            groups.entry(entry.tag.as_str()).or_default().push(*d);
        }
        groups
            .into_iter()
            .map(|(tag, ds)| {
                let (mean, sd) = mean_sd(&ds);
                TagGroup {
                    tag: tag.to_string(),
                    count: ds.len(),
                    mean_distance: mean,
                    sd_distance: sd,
                }
            })
            .collect()
    }

    pub fn report(&self) -> ConsensusReport<'_> {
        ConsensusReport {
            m: self.entries.len(),
            summary: self.result.summary(),
            entries: self
                .entries
                .iter()
                .zip(&self.distances)
                .map(|(e, d)| EntryDistance {
                    path: &e.path,
                    tag: &e.tag,
                    distance_to_consensus: *d,
                })
                .collect(),
            tag_groups: self.tag_groups(),
        }
    }

    /// Writes `<prefix>.matrix.csv`, `<prefix>.embedding.csv` and
    /// `<prefix>.report.json`, returning the three paths.
    pub fn write(&self, prefix: &Path) -> Result<[PathBuf; 3]> {
        let with_suffix = |suffix: &str| {
            let mut s = prefix.as_os_str().to_owned();
            s.push(suffix);
            PathBuf::from(s)
        };
        let paths = [
            with_suffix(".matrix.csv"),
            with_suffix(".embedding.csv"),
            with_suffix(".report.json"),
        ];
        table::write_table(&paths[0], self.result.consensus_matrix.entries())?;
        table::write_table(&paths[1], self.result.embedding.points())?;
        write_json(&paths[2], &self.report())?;
        Ok(paths)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)).map_err(|e| Error::io(path, e))
}

/// Instability statistics for the embeddings in a manifest, optionally
/// against a reference embedding file.
pub fn run_metrics(manifest: &EnsembleManifest, reference: Option<&Path>) -> Result<MetricsReport> {
    let embeddings = manifest.load_embeddings()?;
    let reference: Option<Embedding> = reference.map(load_embedding_file).transpose()?;
    summarize(&embeddings, reference.as_ref())
}

/// Repeats SMACOF `runs` times on a fixed matrix, each run with its own
/// seed derived from `mds.seed`, and reports the spread of the outputs.
pub fn run_mds_stability(matrix_path: &Path, runs: usize, mds: &MdsConfig) -> Result<MetricsReport> {
    if runs < 2 {
        return Err(Error::EmptyEnsemble { needed: 2, got: runs });
    }
    let x = load_matrix_file(matrix_path)?;
    let outputs = (0..runs as u64)
        .map(|r| {
            let cfg = MdsConfig {
                method: MdsMethod::Smacof,
                seed: seed::derive_seed(mds.seed, &[r]),
                ..*mds
            };
            smacof_mds(&x, &cfg).map(|fit| fit.embedding.into_embedding())
        })
        .collect::<Result<Vec<_>>>()?;
    summarize(&outputs, None)
}
