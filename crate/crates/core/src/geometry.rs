//! Embedding space and the metric between embeddings.
//!
//! An embedding is an `n x p` point configuration. Two embeddings that differ
//! only by translation, uniform scaling, rotation or reflection describe the
//! same object. Equivalence classes are never built explicitly: a
//! configuration is first canonicalized (centered, unit mean squared row
//! norm) and then mapped to its matrix of pairwise Euclidean distances, which
//! is constant on each class. The distance between embeddings is the
//! Frobenius distance between those matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Scale factors below this are treated as a collapsed configuration.
pub const DEGENERACY_FLOOR: f64 = 1e-14;

/// An `n x p` point configuration with `n >= 2`, `p >= 1` and finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    points: DMatrix<f64>,
}

impl Embedding {
    pub fn new(points: DMatrix<f64>) -> Result<Self> {
        if points.nrows() < 2 {
            return Err(Error::InvalidEmbedding(format!(
                "need at least 2 points, got {}",
                points.nrows()
            )));
        }
        if points.ncols() < 1 {
            return Err(Error::InvalidEmbedding(
                "need at least 1 coordinate".into(),
            ));
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            let (row, col) = (pos % points.nrows(), pos / points.nrows());
            return Err(Error::InvalidEmbedding(format!(
                "non-finite entry at ({row}, {col})"
            )));
        }
        Ok(Self { points })
    }

    /// Builds an embedding from row vectors, one per point.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::mismatch(format!("{p} columns"), format!("{} columns", bad.len())));
        }
        let points = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
        Self::new(points)
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    pub fn p(&self) -> usize {
        self.points.ncols()
    }

    pub fn into_points(self) -> DMatrix<f64> {
        self.points
    }
}

/// A configuration with zero column means and unit mean squared row norm.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalEmbedding {
    inner: Embedding,
}

impl CanonicalEmbedding {
    pub fn as_embedding(&self) -> &Embedding {
        &self.inner
    }

    pub fn into_embedding(self) -> Embedding {
        self.inner
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.inner.points
    }

    pub fn n(&self) -> usize {
        self.inner.n()
    }

    pub fn p(&self) -> usize {
        self.inner.p()
    }

    /// Flips the sign of column `j`. Both canonical constraints survive.
    pub(crate) fn negate_column(&mut self, j: usize) {
        self.inner.points.column_mut(j).neg_mut();
    }
}

impl From<CanonicalEmbedding> for Embedding {
    fn from(c: CanonicalEmbedding) -> Self {
        c.inner
    }
}

impl AsRef<Embedding> for CanonicalEmbedding {
    fn as_ref(&self) -> &Embedding {
        &self.inner
    }
}

impl AsRef<Embedding> for Embedding {
    fn as_ref(&self) -> &Embedding {
        self
    }
}

/// Square, symmetric, hollow, nonnegative matrix of pairwise dissimilarities.
///
/// Symmetry and hollowness are exact. The triangle inequality is not checked
/// on construction (it is cubic in `n`); see [`DistanceMatrix::triangle_violation`].
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    entries: DMatrix<f64>,
}

impl DistanceMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if entries.ncols() != n {
            return Err(Error::InvalidMatrix(format!(
                "not square: {}x{}",
                n,
                entries.ncols()
            )));
        }
        if n < 1 {
            return Err(Error::InvalidMatrix("empty matrix".into()));
        }
        for i in 0..n {
            if entries[(i, i)] != 0.0 {
                return Err(Error::InvalidMatrix(format!(
                    "diagonal entry ({i}, {i}) is {}",
                    entries[(i, i)]
                )));
            }
            for j in (i + 1)..n {
                let v = entries[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidMatrix(format!(
                        "entry ({i}, {j}) = {v} is not a finite nonnegative number"
                    )));
                }
                if entries[(j, i)] != v {
                    return Err(Error::InvalidMatrix(format!(
                        "asymmetric at ({i}, {j}): {v} vs {}",
                        entries[(j, i)]
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    /// Caller guarantees symmetry, hollowness and nonnegativity.
    pub(crate) fn from_trusted(entries: DMatrix<f64>) -> Self {
        debug_assert!(entries.is_square());
        Self { entries }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// Frobenius norm over the full matrix.
    pub fn frobenius_norm(&self) -> f64 {
        self.entries.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest amount by which `d[i][k] <= d[i][j] + d[j][k]` fails; `0` if it
    /// holds everywhere.
    pub fn triangle_violation(&self) -> f64 {
        let n = self.n();
        let d = &self.entries;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max(d[(i, k)] - d[(i, j)] - d[(j, k)]);
                }
            }
        }
        worst
    }
}

/// Centers `e` and rescales it to unit mean squared row norm.
pub fn canonicalize(e: &Embedding) -> Result<CanonicalEmbedding> {
    let n = e.n() as f64;
    let mut centered = e.points.clone();
    for mut col in centered.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
    }
    let scale = (centered.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    if scale.is_nan() || scale < DEGENERACY_FLOOR {
        return Err(Error::DegenerateEmbedding { scale });
    }
    centered /= scale;
    Ok(CanonicalEmbedding {
        inner: Embedding { points: centered },
    })
}

/// Pairwise Euclidean distances between the rows of `e`.
pub fn distance_matrix(e: &Embedding) -> DistanceMatrix {
    let n = e.n();
    let pts = &e.points;
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = (0..e.p())
                .map(|c| {
                    let diff = pts[(i, c)] - pts[(j, c)];
                    diff * diff
                })
                .sum::<f64>()
                .sqrt();
            d[(i, j)] = dist;
            d[(j, i)] = dist;
        }
    }
    DistanceMatrix::from_trusted(d)
}

/// `sqrt(sum_ij (a_ij - b_ij)^2)` over both triangles and the diagonal.
pub fn frobenius_distance(a: &DistanceMatrix, b: &DistanceMatrix) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::mismatch(
            format!("{0}x{0} matrix", a.n()),
            format!("{0}x{0} matrix", b.n()),
        ));
    }
    Ok(frobenius_gap(a.entries(), b.entries()))
}

pub(crate) fn frobenius_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// The distance matrix of the canonical form of `e`.
pub fn canonical_distance_matrix(e: &Embedding) -> Result<DistanceMatrix> {
    Ok(distance_matrix(canonicalize(e)?.as_embedding()))
}

/// Distance between two embeddings, invariant under similarity transforms
/// of either argument.
pub fn embedding_distance(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::mismatch(
            format!("{} points", a.n()),
            format!("{} points", b.n()),
        ));
    }
    let da = canonical_distance_matrix(a)?;
    let db = canonical_distance_matrix(b)?;
    frobenius_distance(&da, &db)
}
