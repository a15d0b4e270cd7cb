//! Acceptance suite. Runs every criterion sequentially (timing checks must not
//! compete with other work), prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use mce::bench::{estimate_rate, instability_curve, synthetic_base, NoiseKind, SyntheticMeasure};
use mce::geometry::{
    canonical_distance_matrix, canonicalize, distance_matrix, embedding_distance, frobenius_distance, Embedding,
};
use mce::mds::classical_mds_coordinates;
use mce::median::{median_objective, weiszfeld_median, Smoothing, WeiszfeldConfig};
use mce::pipeline::table::write_table;
use mce::pipeline::{load_embedding_file, run_consensus, run_mds_stability, run_metrics, EnsembleManifest, ManifestEntry};
use mce::{classical_mds, median_consensus, DistanceMatrix, Error, MdsConfig, MdsMethod};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Check = std::result::Result<String, String>;
/// Name, time budget in seconds, check.
type Criterion = (&'static str, u64, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn random_embedding(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Embedding {
    Embedding::new(DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal))).unwrap()
}

/// Haar-ish random orthogonal 2x2 (rotation, optionally composed with a reflection).
fn random_orthogonal(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let s = if rng.random::<bool>() { -1.0 } else { 1.0 };
    DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin() * s, t.sin(), t.cos() * s])
}

fn random_similarity(rng: &mut ChaCha8Rng, e: &Embedding) -> Embedding {
    let q = random_orthogonal(rng);
    let scale = 10f64.powf(rng.random_range(-2.0..2.0));
    let (dx, dy) = (rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0));
    let mut moved = e.points() * q * scale;
    for mut row in moved.row_iter_mut() {
        row[0] += dx;
        row[1] += dy;
    }
    Embedding::new(moved).unwrap()
}

fn metric_axioms() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_self, mut worst_triangle) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..1000 {
        let [a, b, c] = [0, 1, 2].map(|_| canonicalize(&random_embedding(&mut rng, 8, 2)).unwrap().into_embedding());
        let d = |x: &Embedding, y: &Embedding| embedding_distance(x, y).unwrap();
        let (ab, ba, ac, bc) = (d(&a, &b), d(&b, &a), d(&a, &c), d(&b, &c));
        ensure(ab == ba, || format!("asymmetric: {ab} vs {ba}"))?;
        worst_self = worst_self.max(d(&a, &a)).max(d(&b, &b));
        worst_triangle = worst_triangle.max(ac - ab - bc);
    }
    ensure(worst_self < 1e-12, || format!("self-distance {worst_self:e}"))?;
    ensure(worst_triangle <= 1e-9, || format!("triangle violation {worst_triangle:e}"))?;
    Ok(format!("1000 triples; max self-distance {worst_self:e}; max triangle slack {worst_triangle:.3e}"))
}

fn quotient_invariance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(3..=30);
        let y = random_embedding(&mut rng, n, 2);
        let t = random_similarity(&mut rng, &y);
        worst = worst.max(embedding_distance(&y, &t).map_err(err)?);
    }
    ensure(worst < 1e-10, || format!("max distance {worst:e}"))?;
    Ok(format!("200 pairs; max d(y, T(y)) = {worst:.3e}"))
}

fn weiszfeld_correctness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = WeiszfeldConfig::default();
    let dm = |rng: &mut ChaCha8Rng, n| canonical_distance_matrix(&random_embedding(rng, n, 2)).unwrap();

    let (a, b) = (dm(&mut rng, 20), dm(&mut rng, 20));
    let (x, _) = weiszfeld_median(&[a.clone(), a.clone(), b.clone()], &cfg).map_err(err)?;
    let majority = frobenius_distance(&x, &a).map_err(err)?;
    ensure(majority <= cfg.tol * a.frobenius_norm(), || format!("majority triple off by {majority:e}"))?;

    let scaled = |s: f64| DistanceMatrix::new(a.entries() * s).unwrap();
    let (x, _) = weiszfeld_median(&[scaled(0.0), scaled(1.0), scaled(3.0)], &cfg).map_err(err)?;
    let collinear = frobenius_distance(&x, &a).map_err(err)?;
    ensure(collinear <= cfg.tol * a.frobenius_norm(), || format!("collinear triple off by {collinear:e}"))?;

    let (x, _) = weiszfeld_median(std::slice::from_ref(&b), &cfg).map_err(err)?;
    ensure(x == b, || "singleton not returned exactly".into())?;

    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let inputs: Vec<DistanceMatrix> = (0..10).map(|_| dm(&mut rng, 20)).collect();
        let (x, diag) = weiszfeld_median(&inputs, &cfg).map_err(err)?;
        let obj = median_objective(&x, &inputs).map_err(err)?;
        let best_candidate = inputs
            .iter()
            .map(|c| median_objective(c, &inputs).unwrap())
            .fold(diag.objective_trace[0], f64::min);
        worst = worst.max(obj - best_candidate);
        ensure(obj <= best_candidate + 1e-9, || format!("objective {obj} > candidate {best_candidate}"))?;
    }
    Ok(format!(
        "majority {majority:.2e}, collinear {collinear:.2e}, singleton exact; 100 ensembles, max (obj - best candidate) = {worst:.3e}"
    ))
}

fn roundtrip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_consensus = 0.0f64;
    for m in [1, 3, 10] {
        let e = random_embedding(&mut rng, 40, 2);
        let result = median_consensus(&vec![e.clone(); m], &WeiszfeldConfig::default(), &MdsConfig::default())
            .map_err(err)?;
        let target = canonical_distance_matrix(&e).map_err(err)?;
        let rel = frobenius_distance(&distance_matrix(result.embedding.as_embedding()), &target).map_err(err)?
            / target.frobenius_norm();
        worst_consensus = worst_consensus.max(rel);
    }
    ensure(worst_consensus < 1e-8, || format!("consensus roundtrip {worst_consensus:e}"))?;

    let mut worst_mds = 0.0f64;
    for p in 1..=4 {
        for n in [p + 1, 10, 60] {
            let e = random_embedding(&mut rng, n, p);
            let canonical = canonical_distance_matrix(&e).map_err(err)?;
            let out = classical_mds(&canonical, p).map_err(err)?;
            let rel = frobenius_distance(&distance_matrix(out.as_embedding()), &canonical).map_err(err)?
                / canonical.frobenius_norm();
            worst_mds = worst_mds.max(rel);

            let raw = distance_matrix(&e);
            let coords = classical_mds_coordinates(&raw, p).map_err(err)?;
            let rel = frobenius_distance(&distance_matrix(&coords), &raw).map_err(err)? / raw.frobenius_norm();
            worst_mds = worst_mds.max(rel);
        }
    }
    ensure(worst_mds < 1e-8, || format!("classical MDS roundtrip {worst_mds:e}"))?;
    Ok(format!("consensus of copies {worst_consensus:.2e}; classical MDS {worst_mds:.2e} (relative Frobenius)"))
}

fn instability_trend() -> Check {
    let measure =
        SyntheticMeasure::new(synthetic_base(100, 2, 0).map_err(err)?, 0.1, NoiseKind::Gaussian, 0).map_err(err)?;
    let curve = instability_curve(&measure, &[1, 2, 10, 20, 50], 10).map_err(err)?;
    let single = curve[0].mean_pairwise;
    let means: Vec<f64> = curve[1..].iter().map(|c| c.mean_pairwise).collect();
    let inversions: Vec<f64> = means.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[1] - w[0]) / w[0]).collect();
    ensure(inversions.len() <= 1 && inversions.iter().all(|r| *r <= 0.05), || {
        format!("not monotone: {means:?}")
    })?;
    let ratio = means[3] / single;
    ensure(ratio < 0.4, || format!("m=50 / single = {ratio}"))?;
    Ok(format!(
        "mean pairwise: single {single:.3}, m=2/10/20/50 {}; m=50 ratio {ratio:.3}",
        means.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join("/")
    ))
}

fn rate_trend_check(grid: &[usize], repeats: usize, epsilon: f64) -> Check {
    let measure =
        SyntheticMeasure::new(synthetic_base(100, 2, 0).map_err(err)?, 0.1, NoiseKind::Gaussian, 0).map_err(err)?;
    let report = estimate_rate(&measure, grid, repeats, epsilon).map_err(err)?;
    let slack = 2.0 / (repeats as f64).sqrt();
    let probs = &report.deviation_prob;
    ensure(probs.windows(2).all(|w| w[1] <= w[0] + slack), || format!("increasing probabilities {probs:?}"))?;
    let interior = probs.iter().filter(|p| **p > 0.0 && **p < 1.0).count();
    if interior >= 3 {
        let slope = report.fitted_slope.unwrap_or(f64::NAN);
        ensure(slope < 0.0, || format!("slope {slope} not negative"))?;
    }
    Ok(format!(
        "eps {epsilon}, probs {probs:?}, interior {interior}, slope {:?}, drift {:.3}",
        report.fitted_slope.map(|s| (s * 1e4).round() / 1e4),
        report.reference_drift
    ))
}

fn rate_trend_defaults() -> Check {
    rate_trend_check(&[2, 5, 10, 20, 50], 50, mce::bench::default_epsilon(0.1, 100))
}

fn rate_trend_dense() -> Check {
    rate_trend_check(&[6, 7, 8, 9, 10, 11, 12, 13, 50], 50, 4.6)
}

fn per_iteration_time(n: usize) -> Duration {
    let measure = SyntheticMeasure::new(synthetic_base(n, 2, 5).unwrap(), 0.1, NoiseKind::Gaussian, 5).unwrap();
    let embs = measure.ensemble(&[9], 10).unwrap();
    let mats: Vec<DistanceMatrix> = embs.iter().map(|e| canonical_distance_matrix(e).unwrap()).collect();
    // A tolerance that is never met, so every run performs exactly max_iters steps.
    let cfg = WeiszfeldConfig { epsilon: Smoothing::Relative(1e-8), tol: 1e-300, max_iters: 30 };
    (0..7)
        .map(|_| {
            let start = Instant::now();
            let (_, diag) = weiszfeld_median(&mats, &cfg).unwrap();
            start.elapsed() / diag.iterations as u32
        })
        .min()
        .unwrap()
}

fn complexity_guard() -> Check {
    per_iteration_time(100);
    let small = per_iteration_time(200);
    let large = per_iteration_time(400);
    let ratio = large.as_secs_f64() / small.as_secs_f64();
    ensure((2.5..=8.0).contains(&ratio), || format!("ratio {ratio:.2} ({small:?} vs {large:?})"))?;
    Ok(format!("per-iteration {small:?} (n=200) vs {large:?} (n=400), ratio {ratio:.2}"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn write_ensemble(dir: &Path, embs: &[Embedding]) -> EnsembleManifest {
    EnsembleManifest::new(
        embs.iter()
            .enumerate()
            .map(|(i, e)| {
                let path = dir.join(format!("emb_{i:03}.csv"));
                write_table(&path, e.points()).unwrap();
                ManifestEntry { path, tag: format!("seed={i}") }
            })
            .collect(),
    )
}

fn cli_contract() -> Check {
    let mut passed = 0;
    let mut tick = |ok: bool, what: &str| -> std::result::Result<(), String> {
        passed += 1;
        ensure(ok, || format!("failed: {what}"))
    };

    // load_embedding_file
    let e = load_embedding_file(&fixture("triangle.csv")).map_err(err)?;
    tick((e.n(), e.p()) == (3, 2), "triangle.csv loads as 3x2")?;
    tick(
        matches!(load_embedding_file(&fixture("ragged.csv")), Err(Error::InconsistentWidth { line: 2, .. })),
        "ragged.csv -> InconsistentWidth at line 2",
    )?;
    tick(
        matches!(load_embedding_file(&fixture("nan.csv")), Err(Error::NonFiniteValue { .. })),
        "nan.csv -> NonFiniteValue",
    )?;

    // run_consensus
    let dir = tempfile::TempDir::new().map_err(err)?;
    let (w, m) = (WeiszfeldConfig::default(), MdsConfig::default());
    let measure =
        SyntheticMeasure::new(synthetic_base(40, 2, 9).map_err(err)?, 0.1, NoiseKind::Gaussian, 9).map_err(err)?;
    let y = measure.sample(0).map_err(err)?.into_embedding();
    let copies = write_ensemble(&subdir(dir.path(), "copies"), &vec![y.clone(); 5]);
    let run = run_consensus(&copies, &w, &m).map_err(err)?;
    tick(
        embedding_distance(run.result.embedding.as_embedding(), &y).map_err(err)? < 1e-6
            && run.result.projection_gap < 1e-8,
        "consensus of identical files",
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let moved: Vec<Embedding> = (0..5).map(|_| random_similarity(&mut rng, &y)).collect();
    let run = run_consensus(&write_ensemble(&subdir(dir.path(), "moved"), &moved), &w, &m).map_err(err)?;
    tick(
        embedding_distance(run.result.embedding.as_embedding(), &y).map_err(err)? < 1e-6
            && run.result.projection_gap < 1e-8,
        "consensus of similarity transforms",
    )?;
    let noisy: Vec<Embedding> = (1..=10).map(|i| measure.sample(i).unwrap().into_embedding()).collect();
    let run = run_consensus(&write_ensemble(&subdir(dir.path(), "noisy"), &noisy), &w, &m).map_err(err)?;
    let base = measure.base.as_embedding();
    let consensus_gap = embedding_distance(run.result.embedding.as_embedding(), base).map_err(err)?;
    let input_gap = noisy.iter().map(|e| embedding_distance(e, base).unwrap()).sum::<f64>() / 10.0;
    tick(consensus_gap < input_gap, "consensus closer to base than inputs")?;

    // run_metrics
    let twins = write_ensemble(&subdir(dir.path(), "twins"), &[y.clone(), y.clone()]);
    tick(run_metrics(&twins, None).map_err(err)?.mean_pairwise == Some(0.0), "identical files -> 0")?;
    let single = EnsembleManifest::new(vec![twins.entries[0].clone()]);
    tick(
        run_metrics(&single, Some(&twins.entries[0].path)).map_err(err)?.mean_to_reference == Some(0.0),
        "single input vs itself -> 0",
    )?;
    let ten = write_ensemble(&subdir(dir.path(), "ten"), &noisy);
    let report = run_metrics(&ten, None).map_err(err)?;
    let mut brute = Vec::new();
    for i in 0..10 {
        for j in (i + 1)..10 {
            brute.push(embedding_distance(&noisy[i], &noisy[j]).unwrap());
        }
    }
    let brute_mean = brute.iter().sum::<f64>() / brute.len() as f64;
    tick((report.mean_pairwise.unwrap() - brute_mean).abs() < 1e-12, "k=10 metrics oracle")?;

    // run_mds_stability
    let exact_path = dir.path().join("exact.csv");
    write_table(&exact_path, canonical_distance_matrix(&y).map_err(err)?.entries()).map_err(err)?;
    tick(
        matches!(run_mds_stability(&exact_path, 1, &m), Err(Error::EmptyEnsemble { .. })),
        "runs=1 -> EmptyEnsemble",
    )?;
    let small = canonical_distance_matrix(&measure.sample(99).map_err(err)?.into_embedding()).map_err(err)?;
    let small_path = dir.path().join("small_exact.csv");
    write_table(&small_path, small.entries()).map_err(err)?;
    let spread = run_mds_stability(&small_path, 10, &m).map_err(err)?.mean_pairwise.unwrap();
    tick(spread < 1e-4, "exact matrix, 10 SMACOF runs agree")?;
    let fifty: Vec<Embedding> = (0..50).map(|i| measure.sample(1000 + i).unwrap().into_embedding()).collect();
    let consensus = median_consensus(&fifty, &w, &m).map_err(err)?;
    let consensus_path = dir.path().join("consensus.csv");
    write_table(&consensus_path, consensus.consensus_matrix.entries()).map_err(err)?;
    let mds_spread = run_mds_stability(&consensus_path, 100, &MdsConfig { method: MdsMethod::Smacof, ..m })
        .map_err(err)?;
    let mds_mean = mds_spread.mean_pairwise.unwrap();
    tick(mds_mean.is_finite(), "consensus matrix, 100 SMACOF runs reported")?;

    // Binary: golden files and determinism.
    let bin = env!("CARGO_BIN_EXE_mce");
    let mut produced = Vec::new();
    for run in 0..2 {
        let prefix = dir.path().join(format!("hex{run}"));
        let status = Command::new(bin)
            .args(["consensus", "--manifest"])
            .arg(fixture("hex.toml"))
            .arg("--out-prefix")
            .arg(&prefix)
            .output()
            .map_err(err)?;
        tick(status.status.success(), "mce consensus exits 0")?;
        produced.push(
            ["matrix.csv", "embedding.csv", "report.json"]
                .map(|s| fs::read(dir.path().join(format!("hex{run}.{s}"))).unwrap()),
        );
    }
    tick(produced[0] == produced[1], "identical runs give identical bytes")?;
    let golden = ["matrix.csv", "embedding.csv", "report.json"].map(|s| fs::read(fixture(&format!("golden/hex.{s}"))).unwrap());
    tick(produced[0] == golden, "outputs match golden files")?;
    let out = Command::new(bin).arg("distance").arg(fixture("ragged.csv")).arg(fixture("triangle.csv")).output().map_err(err)?;
    tick(
        !out.status.success() && String::from_utf8_lossy(&out.stderr).starts_with("error[inconsistent-width]"),
        "CLI error category",
    )?;

    Ok(format!("{passed} checks; SMACOF spread on consensus matrix {mds_mean:.4} (sd {:.4})", mds_spread.sd_pairwise.unwrap()))
}

fn subdir(root: &Path, name: &str) -> PathBuf {
    let dir = root.join(name);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("metric axioms", 10, metric_axioms),
        ("quotient invariance", 5, quotient_invariance),
        ("weiszfeld correctness", 30, weiszfeld_correctness),
        ("realizable roundtrip", 60, roundtrip),
        ("instability reduction trend", 300, instability_trend),
        ("deviation-probability trend (defaults)", 600, rate_trend_defaults),
        ("deviation-probability trend (dense grid)", 600, rate_trend_dense),
        ("complexity guard", 300, complexity_guard),
        ("cli contract", 300, cli_contract),
    ];
    let mut failures = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(budget);
        let (tag, detail) = match (&outcome, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("over time budget: {d}")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if tag == "FAIL" {
            failures += 1;
        }
        println!("[{tag}] {name} ({:.2} s / {budget} s): {detail}", elapsed.as_secs_f64());
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
