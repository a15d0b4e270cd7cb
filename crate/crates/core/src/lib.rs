//! Median consensus embedding.
//!
//! Integrates many low-dimensional embeddings of the same `n` points (for
//! example repeated t-SNE or UMAP runs with different seeds) into a single
//! consensus. Each embedding is reduced to the pairwise-distance matrix of its
//! canonical form; the consensus is the geometric median of those matrices
//! under the Frobenius norm, projected back to `p` dimensions with MDS.
//!
//! ```
//! use mce::{median_consensus, Embedding, MdsConfig, WeiszfeldConfig};
//!
//! let a = Embedding::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
//! let b = Embedding::from_rows(&[vec![0.0, 0.0], vec![0.0, 2.0], vec![-2.0, 0.0]]).unwrap();
//! let result = median_consensus(&[a, b], &WeiszfeldConfig::default(), &MdsConfig::default()).unwrap();
//! assert_eq!(result.embedding.n(), 3);
//! ```

pub mod bench;
pub mod consensus;
pub mod error;
pub mod geometry;
pub mod mds;
pub mod median;
pub mod metrics;
pub mod pipeline;
pub mod seed;

pub use consensus::{median_consensus, ConsensusResult};
pub use error::{Error, Result};
pub use geometry::{
    canonicalize, distance_matrix, embedding_distance, frobenius_distance, CanonicalEmbedding,
    DistanceMatrix, Embedding,
};
pub use mds::{classical_mds, smacof_mds, MdsConfig, MdsMethod};
pub use median::{median_objective, weiszfeld_median, MedianDiagnostics, Smoothing, WeiszfeldConfig};
pub use metrics::{mean_distance_to_reference, mean_pairwise_distance, MetricsReport};
