//! Ensemble manifests.
//!
//! A manifest is a TOML file listing embedding files and a free-form tag for
//! each (seed, perplexity, imputation index, ...). Relative paths resolve
//! against the manifest's directory.
//!
//! ```toml
//! declared_n = 100
//! declared_p = 2
//!
//! [[entries]]
//! path = "runs/tsne_0.csv"
//! tag = "perplexity=30"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Embedding;
use crate::pipeline::table::load_embedding_file;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    #[serde(default)]
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_p: Option<usize>,
    pub entries: Vec<ManifestEntry>,
    /// Directory that relative entry paths resolve against.
    #[serde(skip)]
    pub root: PathBuf,
}

impl EnsembleManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Self {
        Self {
            declared_n: None,
            declared_p: None,
            entries,
            root: PathBuf::new(),
        }
    }

    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let mut manifest: EnsembleManifest = toml::from_str(text).map_err(|e| Error::Manifest {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        manifest.root = origin.parent().map(Path::to_path_buf).unwrap_or_default();
        if manifest.entries.is_empty() {
            return Err(Error::Manifest {
                path: origin.to_path_buf(),
                message: "no entries".into(),
            });
        }
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    /// All files matching `pattern`, in lexicographic order, tagged by file stem.
    pub fn from_glob(pattern: &str) -> Result<Self> {
        let bad = |message: String| Error::Manifest {
            path: PathBuf::from(pattern),
            message,
        };
        let mut paths: Vec<PathBuf> = glob::glob(pattern)
            .map_err(|e| bad(e.to_string()))?
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(e.to_string()))?;
        paths.sort();
        if paths.is_empty() {
            return Err(bad("pattern matched no files".into()));
        }
        let entries = paths
            .into_iter()
            .map(|path| {
                let tag = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                ManifestEntry { path, tag }
            })
            .collect();
        Ok(Self::new(entries))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.root.join(&entry.path)
        }
    }

    /// Loads every entry in parallel and checks that all share `n` (and the
    /// declared shape, when given).
    pub fn load_embeddings(&self) -> Result<Vec<Embedding>> {
        let annotate = |index: usize, source: Error| Error::Entry {
            index,
            path: self.entries[index].path.clone(),
            source: Box::new(source),
        };
        let embs: Vec<Embedding> = self
            .entries
            .par_iter()
            .enumerate()
            .map(|(i, entry)| load_embedding_file(&self.resolve(entry)).map_err(|e| annotate(i, e)))
            .collect::<Result<_>>()?;

        let n = self.declared_n.unwrap_or(embs[0].n());
        for (i, e) in embs.iter().enumerate() {
            if e.n() != n {
                return Err(annotate(i, Error::mismatch(format!("{n} points"), format!("{} points", e.n()))));
            }
            if let Some(p) = self.declared_p {
                if e.p() != p {
                    return Err(annotate(
                        i,
                        Error::mismatch(format!("{p} columns"), format!("{} columns", e.p())),
                    ));
                }
            }
        }
        Ok(embs)
    }
}
