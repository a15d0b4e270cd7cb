//! Monte-Carlo check that the consensus concentrates around its population
//! target as the ensemble grows.
//!
//! Embeddings are drawn i.i.d. from a [`SyntheticMeasure`]: a fixed canonical
//! configuration plus per-coordinate noise, re-canonicalized. The population
//! target is approximated by the consensus of a large reference ensemble.
//! For every ensemble size `m` the bench estimates `Pr(d(y_m, y*) >= eps)`
//! from independent repeats and fits a line to its logarithm.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consensus::median_consensus;
use crate::error::{Error, Result};
use crate::geometry::{canonicalize, embedding_distance, CanonicalEmbedding, Embedding};
use crate::mds::MdsConfig;
use crate::median::WeiszfeldConfig;
use crate::metrics::{mean_pairwise_distance, mean_sd};
use crate::seed;

const MAX_DRAW_ATTEMPTS: u64 = 10;

// Stream domains under the measure's seed.
const REFERENCE_STREAM: u64 = 0;
const ENSEMBLE_STREAM: u64 = 1;
const REPLICATE_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Gaussian,
    /// Uniform on `[-sqrt(3) sigma, sqrt(3) sigma]`, i.e. standard deviation `sigma`.
    Uniform,
}

#[derive(Debug, Clone)]
pub struct SyntheticMeasure {
    pub base: CanonicalEmbedding,
    pub sigma: f64,
    pub noise: NoiseKind,
    pub seed: u64,
}

/// A canonical configuration of `n` standard-normal points.
pub fn synthetic_base(n: usize, p: usize, seed: u64) -> Result<CanonicalEmbedding> {
    let mut rng = seed::stream(seed, &[u64::MAX]);
    let points = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    canonicalize(&Embedding::new(points)?)
}

impl SyntheticMeasure {
    pub fn new(base: CanonicalEmbedding, sigma: f64, noise: NoiseKind, seed: u64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise scale must be positive, got {sigma}")));
        }
        Ok(Self { base, sigma, noise, seed })
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn p(&self) -> usize {
        self.base.p()
    }

    /// The draw addressed by `index`.
    pub fn sample(&self, index: u64) -> Result<CanonicalEmbedding> {
        self.sample_at(&[index])
    }

    /// The draw addressed by a hierarchical stream path. Draws that collapse
    /// to a single point are redrawn up to ten times.
    pub fn sample_at(&self, path: &[u64]) -> Result<CanonicalEmbedding> {
        let mut last = Error::DegenerateEmbedding { scale: 0.0 };
        for attempt in 0..MAX_DRAW_ATTEMPTS {
            let mut full = path.to_vec();
            full.push(attempt);
            let mut rng = seed::stream(self.seed, &full);
            let noise = self.noise_matrix(&mut rng);
            let noisy = Embedding::new(self.base.points() + noise)?;
            match canonicalize(&noisy) {
                Ok(c) => return Ok(c),
                Err(e @ Error::DegenerateEmbedding { .. }) => last = e,
                Err(e) => return Err(e),
            }
        }
        Err(last)
    }

    fn noise_matrix(&self, rng: &mut impl Rng) -> DMatrix<f64> {
        let (n, p) = (self.n(), self.p());
        match self.noise {
            NoiseKind::Gaussian => {
                let normal = Normal::new(0.0, self.sigma).expect("positive sigma");
                DMatrix::from_fn(n, p, |_, _| normal.sample(rng))
            }
            NoiseKind::Uniform => {
                let half = 3f64.sqrt() * self.sigma;
                DMatrix::from_fn(n, p, |_, _| rng.random_range(-half..half))
            }
        }
    }

    /// `m` i.i.d. draws under a common stream prefix.
    pub fn ensemble(&self, prefix: &[u64], m: usize) -> Result<Vec<Embedding>> {
        (0..m as u64)
            .into_par_iter()
            .map(|i| {
                let mut path = prefix.to_vec();
                path.push(i);
                self.sample_at(&path).map(Embedding::from)
            })
            .collect()
    }
}

/// Default deviation threshold: `sigma * n / 2`. The Frobenius metric sums
/// over `n^2` entries, so a single draw sits at distance of order
/// `sigma * n` from the base.
pub fn default_epsilon(sigma: f64, n: usize) -> f64 {
    sigma * n as f64 / 2.0
}

fn mce(embs: &[Embedding], p: usize) -> Result<CanonicalEmbedding> {
    let mds = MdsConfig { dim: p, ..MdsConfig::default() };
    Ok(median_consensus(embs, &WeiszfeldConfig::default(), &mds)?.embedding)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub m_grid: Vec<usize>,
    pub epsilon: f64,
    pub repeats: usize,
    pub reference_size: usize,
    /// Distance between two independently drawn reference targets.
    pub reference_drift: f64,
    /// Estimated `Pr(d(y_m, y*) >= epsilon)` for each `m`.
    pub deviation_prob: Vec<f64>,
    /// Mean of `d(y_m, y*)` over the repeats for each `m`.
    pub mean_deviation: Vec<f64>,
    /// Least-squares slope of `ln(prob)` against `m` over entries with `prob > 0`.
    pub fitted_slope: Option<f64>,
    /// Mean `||x_hat - distance_matrix(mds(x_hat))||_F` for each `m`.
    pub projection_gap: Vec<f64>,
    /// Ensembles whose solve failed; each counts as a deviation.
    pub failures: usize,
}

/// Least-squares slope of `ln(prob)` on `m`, using entries with `prob > 0`.
pub fn log_linear_slope(m_grid: &[usize], probs: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = m_grid
        .iter()
        .zip(probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&m, &p)| (m as f64, p.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

fn validate_grid(m_grid: &[usize]) -> Result<()> {
    if m_grid.is_empty() {
        return Err(Error::InvalidConfig("m grid is empty".into()));
    }
    if m_grid[0] < 1 || m_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(format!(
            "m grid must be positive and strictly increasing, got {m_grid:?}"
        )));
    }
    Ok(())
}

struct Outcome {
    distance: Option<f64>,
    gap: Option<f64>,
}

pub fn estimate_rate(
    measure: &SyntheticMeasure,
    m_grid: &[usize],
    repeats: usize,
    epsilon: f64,
) -> Result<RateReport> {
    validate_grid(m_grid)?;
    if repeats < 20 {
        return Err(Error::InvalidConfig(format!("need at least 20 repeats, got {repeats}")));
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
    }
    let p = measure.p();
    let reference_size = 10 * m_grid[m_grid.len() - 1];

    let target = mce(&measure.ensemble(&[REFERENCE_STREAM, 0], reference_size)?, p)?;
    let check = mce(&measure.ensemble(&[REFERENCE_STREAM, 1], reference_size)?, p)?;
    let reference_drift = embedding_distance(target.as_embedding(), check.as_embedding())?;
    if reference_drift >= epsilon / 4.0 {
        return Err(Error::Calibration {
            drift: reference_drift,
            limit: epsilon / 4.0,
        });
    }

    let jobs: Vec<(usize, usize)> = (0..m_grid.len())
        .flat_map(|mi| (0..repeats).map(move |r| (mi, r)))
        .collect();
    let mds = MdsConfig { dim: p, ..MdsConfig::default() };
    let outcomes: Vec<Outcome> = jobs
        .par_iter()
        .map(|&(mi, r)| {
            let m = m_grid[mi];
            let solved = measure
                .ensemble(&[ENSEMBLE_STREAM, m as u64, r as u64], m)
                .and_then(|embs| median_consensus(&embs, &WeiszfeldConfig::default(), &mds))
                .and_then(|res| {
                    let d = embedding_distance(res.embedding.as_embedding(), target.as_embedding())?;
                    Ok((d, res.projection_gap))
                });
            match solved {
                Ok((d, gap)) => Outcome { distance: Some(d), gap: Some(gap) },
                Err(_) => Outcome { distance: None, gap: None },
            }
        })
        .collect();

    let mut deviation_prob = Vec::with_capacity(m_grid.len());
    let mut mean_deviation = Vec::with_capacity(m_grid.len());
    let mut projection_gap = Vec::with_capacity(m_grid.len());
    let mut failures = 0;
    for chunk in outcomes.chunks(repeats) {
        let exceed = chunk
            .iter()
            .filter(|o| o.distance.is_none_or(|d| d >= epsilon))
            .count();
        failures += chunk.iter().filter(|o| o.distance.is_none()).count();
        deviation_prob.push(exceed as f64 / repeats as f64);
        let ds: Vec<f64> = chunk.iter().filter_map(|o| o.distance).collect();
        let gaps: Vec<f64> = chunk.iter().filter_map(|o| o.gap).collect();
        mean_deviation.push(if ds.is_empty() { f64::NAN } else { mean_sd(&ds).0 });
        projection_gap.push(if gaps.is_empty() { f64::NAN } else { mean_sd(&gaps).0 });
    }

    Ok(RateReport {
        m_grid: m_grid.to_vec(),
        epsilon,
        repeats,
        reference_size,
        reference_drift,
        fitted_slope: log_linear_slope(m_grid, &deviation_prob),
        deviation_prob,
        mean_deviation,
        projection_gap,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstabilityPoint {
    /// Ensemble size; `1` means single draws without consensus.
    pub m: usize,
    pub mean_pairwise: f64,
    pub sd_pairwise: f64,
}

/// Mean pairwise distance among `replicates` independent consensus
/// embeddings, for each ensemble size in `sizes`.
pub fn instability_curve(
    measure: &SyntheticMeasure,
    sizes: &[usize],
    replicates: usize,
) -> Result<Vec<InstabilityPoint>> {
    validate_grid(sizes)?;
    let p = measure.p();
    sizes
        .iter()
        .map(|&m| {
            let outputs: Vec<Embedding> = (0..replicates as u64)
                .into_par_iter()
                .map(|r| {
                    let prefix = [REPLICATE_STREAM, m as u64, r];
                    if m == 1 {
                        measure.sample_at(&prefix).map(Embedding::from)
                    } else {
                        mce(&measure.ensemble(&prefix, m)?, p).map(Embedding::from)
                    }
                })
                .collect::<Result<_>>()?;
            let (mean, sd, _) = mean_pairwise_distance(&outputs)?;
            Ok(InstabilityPoint { m, mean_pairwise: mean, sd_pairwise: sd })
        })
        .collect()
}
