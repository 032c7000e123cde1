//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every line is printed whether or not
//! it passes. The process exits non-zero when any gating criterion fails;
//! the external-dataset check (8) reports but never gates.
//!
//! ```text
//! cargo test --release --test acceptance
//! ```

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::Point2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stemhull::cloud::{build_spatial_index, read_point_cloud, CloudFormat, Point3, PointCloud};
use stemhull::ground::{classify_ground, rasterize_min_elevation, smrf_surface, GroundModel, SmrfParams};
use stemhull::metrics::{bias, read_reference_csv, rmse, stddev, write_report_csv, MatchConfig, Method};
use stemhull::pipeline::{run_inventory, PipelineConfig};
use stemhull::segment::{dbscan, estimate_features, euclidean_cluster, DbscanParams, TrunkCluster};
use stemhull::synth::{generate_plot, generate_trunk, Extent, SceneConfig, TerrainParams, TrunkSpec};
use stemhull::trunk::{convex_hull, estimate_dbh, DbhConfig, DbhEstimate};

/// Outcome of one criterion.
struct Verdict {
    id: u32,
    title: &'static str,
    pass: bool,
    gating: bool,
    detail: String,
}

impl Verdict {
    fn new(id: u32, title: &'static str, pass: bool, detail: String) -> Self {
        Verdict { id, title, pass, gating: true, detail }
    }

    fn print(&self) {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        println!("criterion {}: {tag} — {} — {}", self.id, self.title, self.detail);
    }
}

// ─── shared helpers ────────────────────────────────────────────────────────

fn cross(o: &Point2<f64>, a: &Point2<f64>, b: &Point2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn dist2<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn flat_terrain() -> TerrainParams {
    TerrainParams { extent: Extent::new(-2.0, -2.0, 2.0, 2.0), ..TerrainParams::default() }
}

/// Full DBH estimate for one isolated synthetic trunk on flat ground.
fn estimate_single(spec: &TrunkSpec, index: usize, seed: u64) -> (DbhEstimate, f64) {
    let (cloud, truth) = generate_trunk(index, spec, &flat_terrain(), seed);
    let ground = GroundModel::flat(0.0);
    let features = estimate_features(&cloud, &build_spatial_index(&cloud), 16).expect("enough points");
    let cluster = TrunkCluster::from_indices(&cloud, &ground, (0..cloud.len()).collect()).expect("non-empty");
    let e = estimate_dbh(index, &cluster, &cloud, &ground, Some(&features.normals), &DbhConfig::default())
        .expect("trunk covers breast height");
    (e, truth.dbh_cm)
}

// ─── 1. oracle equivalence ─────────────────────────────────────────────────

/// Extreme points by exhaustive edge search: `i → j` is a hull edge when
/// every other point is strictly left of it or on the open segment.
fn brute_force_hull(points: &[Point2<f64>]) -> Vec<Point2<f64>> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    let mut out = Vec::new();
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            if i == j {
                continue;
            }
            let (a, b) = (&pts[i], &pts[j]);
            let edge = pts.iter().enumerate().all(|(k, p)| {
                if k == i || k == j {
                    return true;
                }
                let c = cross(a, b, p);
                c > 0.0 || (c == 0.0 && (p - a).dot(&(b - a)) > 0.0 && (p - b).dot(&(a - b)) > 0.0)
            });
            if edge {
                out.push(*a);
                out.push(*b);
            }
        }
    }
    out.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    out.dedup();
    out
}

/// Textbook quadratic DBSCAN with the same labelling order.
fn reference_dbscan<const D: usize>(points: &[[f64; D]], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let n = points.len();
    let e2 = eps * eps;
    let nb = |i: usize| (0..n).filter(move |&j| dist2(&points[i], &points[j]) <= e2);
    let core: Vec<bool> = (0..n).map(|i| nb(i).count() >= min_pts).collect();
    let mut labels = vec![None; n];
    let mut id = 0;
    for seed in 0..n {
        if labels[seed].is_some() || !core[seed] {
            continue;
        }
        labels[seed] = Some(id);
        let mut frontier = vec![seed];
        while let Some(i) = frontier.pop() {
            for j in nb(i) {
                if labels[j].is_none() {
                    labels[j] = Some(id);
                    if core[j] {
                        frontier.push(j);
                    }
                }
            }
        }
        id += 1;
    }
    labels
}

/// Connected components by all-pairs union–find.
fn reference_euclidean(points: &[Point3], tol: f64, min_size: usize) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            i = p[i];
        }
        i
    }
    let coords: Vec<[f64; 3]> = points.iter().map(|p| [p.x, p.y, p.z]).collect();
    for i in 0..n {
        for j in i + 1..n {
            if dist2(&coords[i], &coords[j]) <= tol * tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().filter(|g| g.len() >= min_size.max(1)).collect();
    out.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    out
}

/// Blobs of points, half the time snapped to a coarse lattice so that
/// collinear, duplicate and exactly-at-radius configurations occur.
fn random_points<const D: usize>(rng: &mut ChaCha8Rng, n: usize, lattice: bool) -> Vec<[f64; D]> {
    let centres: Vec<[f64; D]> = (0..rng.random_range(1..6)).map(|_| std::array::from_fn(|_| rng.random_range(0.0..10.0))).collect();
    (0..n)
        .map(|_| {
            let c = centres[rng.random_range(0..centres.len())];
            std::array::from_fn(|d| {
                let v = c[d] + rng.random_range(-1.5..1.5);
                if lattice {
                    (v * 4.0).round() / 4.0
                } else {
                    v
                }
            })
        })
        .collect()
}

fn criterion_1() -> Verdict {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut hull_bad = 0;
    for set in 0..1000 {
        let pts: Vec<Point2<f64>> = if set % 2 == 0 {
            (0..200).map(|_| Point2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
        } else {
            (0..200).map(|_| Point2::new(rng.random_range(0..30) as f64, rng.random_range(0..30) as f64)).collect()
        };
        let mut got = convex_hull(&pts).expect("non-degenerate").vertices().to_vec();
        got.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        hull_bad += (got != brute_force_hull(&pts)) as usize;
    }
    let (mut db_bad, mut ec_bad) = (0, 0);
    for inst in 0..500 {
        let n = rng.random_range(1..=500);
        let lattice = inst % 2 == 1;
        let eps = if lattice { 0.25 * rng.random_range(1..4) as f64 } else { rng.random_range(0.05..0.6) };
        let min_pts = rng.random_range(1..12);
        let pts2: Vec<[f64; 2]> = random_points(&mut rng, n, lattice);
        db_bad += (dbscan(&pts2, &DbscanParams { eps, min_pts }) != reference_dbscan(&pts2, eps, min_pts)) as usize;
        let pts3: Vec<Point3> = random_points::<3>(&mut rng, n, lattice).into_iter().map(|p| Point3::new(p[0], p[1], p[2])).collect();
        let min_size = rng.random_range(1..20);
        ec_bad += (euclidean_cluster(&pts3, eps, min_size) != reference_euclidean(&pts3, eps, min_size)) as usize;
    }
    let elapsed = t0.elapsed();
    Verdict::new(
        1,
        "oracle equivalence",
        hull_bad == 0 && db_bad == 0 && ec_bad == 0 && elapsed < Duration::from_secs(60),
        format!(
            "hull mismatches {hull_bad}/1000, dbscan {db_bad}/500, euclidean {ec_bad}/500, {:.1} s (limit 60 s)",
            elapsed.as_secs_f64()
        ),
    )
}

// ─── 2. girth-tape fidelity ────────────────────────────────────────────────

fn criterion_2() -> Verdict {
    let mut ok = true;
    let mut rows = Vec::new();
    for (i, d) in [0.10, 0.30, 0.80].into_iter().enumerate() {
        let mut spec = TrunkSpec::new(0.0, 0.0, d);
        spec.height = 2.0;
        // ≥ 5,000 points in the 20 cm breast-height slice
        spec.density = 6000.0 / (std::f64::consts::PI * d * 0.2);
        let (e, truth) = estimate_single(&spec, i, 40 + i as u64);
        let vals = [e.dbh_hull, e.dbh_cylinder, e.dbh_ellipse];
        let all: Vec<f64> = vals.iter().flatten().copied().collect();
        let spread = all.iter().cloned().fold(f64::MIN, f64::max) / all.iter().cloned().fold(f64::MAX, f64::min) - 1.0;
        let hull_err = e.dbh_hull.map_or(f64::INFINITY, |h| (h - truth).abs());
        ok &= all.len() == 3 && hull_err <= 0.2 && spread <= 0.01;
        rows.push(format!("d {:.0}: hull err {hull_err:.3} cm, spread {:.2}%", 100.0 * d, 100.0 * spread));
    }
    Verdict::new(2, "girth-tape fidelity (hull ≤ 0.2 cm, methods within 1%)", ok, rows.join("; "))
}

// ─── 3. cylinder under-fitting on furrowed stems ───────────────────────────

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let trials = 100;
    let (mut under, mut better, mut sum_hull, mut sum_cyl) = (0, 0, 0.0, 0.0);
    for i in 0..trials {
        let mut spec = TrunkSpec::new(0.0, 0.0, rng.random_range(0.2..0.6));
        spec.height = 2.0;
        spec.furrow_amplitude = rng.random_range(0.01..0.03);
        spec.furrow_count = rng.random_range(16..=32);
        spec.furrow_phase = rng.random_range(0.0..TAU);
        spec.noise_sigma = 0.005;
        spec.density = 2000.0;
        let (e, truth) = estimate_single(&spec, i, 1100 + i as u64);
        let (h, c) = (e.dbh_hull.expect("hull") - truth, e.dbh_cylinder.expect("cylinder") - truth);
        under += (c < 0.0) as usize;
        better += (h.abs() < c.abs()) as usize;
        sum_hull += h.abs();
        sum_cyl += c.abs();
    }
    let ratio = sum_cyl / sum_hull;
    Verdict::new(
        3,
        "cylinder under-fits furrowed trunks",
        under >= 95 && better >= 90 && ratio >= 2.5,
        format!(
            "cylinder < truth {under}/{trials} (≥ 95), hull closer {better}/{trials} (≥ 90), mean |err| hull {:.2} cm vs cylinder {:.2} cm, ratio {ratio:.2} (≥ 2.5)",
            sum_hull / trials as f64,
            sum_cyl / trials as f64
        ),
    )
}

// ─── 4 & 9. end-to-end plot and determinism ────────────────────────────────

struct PlotRun {
    report_csv: Vec<u8>,
    points: usize,
    elapsed: Duration,
    recall: (usize, usize),
    false_positives: usize,
    rmse_final: Option<f64>,
    rmse_hull: Option<f64>,
    rmse_cylinder: Option<f64>,
}

fn run_plot(seed: u64) -> PlotRun {
    let t0 = Instant::now();
    let scene = generate_plot(&SceneConfig::benchmark(seed)).expect("valid benchmark");
    let cfg = PipelineConfig { seed, ..PipelineConfig::default() };
    let run = run_inventory(&scene.cloud, &cfg).expect("inventory runs");
    let refs = scene.references();
    let report = run.report(&refs, &MatchConfig::default()).expect("report");
    let elapsed = t0.elapsed();
    let eligible = refs.iter().filter(|r| r.dbh >= cfg.min_dbh_cm).count();
    let found = report.pairs.iter().filter(|p| p.reference.dbh >= cfg.min_dbh_cm).count();
    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("report.csv");
    write_report_csv(&path, &report).expect("report written");
    PlotRun {
        report_csv: std::fs::read(&path).expect("report readable"),
        points: scene.cloud.len(),
        elapsed,
        recall: (found, eligible),
        false_positives: report.unmatched_estimates.len(),
        rmse_final: report.method(Method::Final).rmse,
        rmse_hull: report.method(Method::Hull).rmse,
        rmse_cylinder: report.method(Method::Cylinder).rmse,
    }
}

fn criterion_4(run: &PlotRun) -> Verdict {
    let (found, eligible) = run.recall;
    let recall = found as f64 / eligible.max(1) as f64;
    let rmse = run.rmse_final.unwrap_or(f64::INFINITY);
    let f = |v: Option<f64>| v.map_or("-".into(), |v| format!("{v:.2}"));
    Verdict::new(
        4,
        "end-to-end synthetic plot",
        recall >= 0.9 && run.false_positives == 0 && rmse <= 2.0 && run.elapsed < Duration::from_secs(300),
        format!(
            "{} points, recall {found}/{eligible}, false positives {}, DBH RMSE {rmse:.2} cm (≤ 2.0; hull {}, cylinder {}), {:.1} s (limit 300 s)",
            run.points,
            run.false_positives,
            f(run.rmse_hull),
            f(run.rmse_cylinder),
            run.elapsed.as_secs_f64()
        ),
    )
}

fn criterion_9(a: &PlotRun, b: &PlotRun) -> Verdict {
    Verdict::new(
        9,
        "determinism",
        a.report_csv == b.report_csv,
        format!("two seeded runs: report CSVs of {} and {} bytes, identical: {}", a.report_csv.len(), b.report_csv.len(), a.report_csv == b.report_csv),
    )
}

// ─── 5. metric identities ──────────────────────────────────────────────────

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut identity_bad = 0;
    for _ in 0..1000 {
        let n = rng.random_range(2..60);
        let shift = rng.random_range(-5.0..5.0);
        let r: Vec<f64> = (0..n).map(|_| shift + rng.random_range(-10.0..10.0)).collect();
        let (b, m, s) = (bias(&r).unwrap(), rmse(&r).unwrap(), stddev(&r).unwrap());
        let rhs = b * b + (n as f64 - 1.0) / n as f64 * s * s;
        identity_bad += (m < b.abs() || ((m * m - rhs) / (m * m)).abs() > 1e-9) as usize;
    }
    let fx = [2.0, -1.0, 3.0];
    let fixture_ok = (bias(&fx).unwrap() - 4.0 / 3.0).abs() < 1e-12
        && (rmse(&fx).unwrap() - (14.0f64 / 3.0).sqrt()).abs() < 1e-12
        && (stddev(&fx).unwrap() - 2.0817).abs() < 5e-5;

    // printed (bias, rmse, std) per column; n = 11 trees in A, 9 in B
    let table: [(&str, f64, f64, f64, f64); 8] = [
        ("A NeRF hull", -0.28, 1.26, 1.29, 11.0),
        ("A NeRF RANSAC", -4.35, 4.96, 2.49, 11.0),
        ("A SLAM hull", -1.35, 2.32, 1.97, 11.0),
        ("A SLAM RANSAC", -6.89, 7.12, 1.86, 11.0),
        ("B NeRF hull", -0.86, 2.09, 2.02, 9.0),
        ("B NeRF RANSAC", -4.59, 5.28, 2.77, 9.0),
        ("B SLAM hull", 1.56, 1.93, 0.93, 9.0),
        ("B SLAM RANSAC", -3.69, 4.53, 2.88, 9.0),
    ];
    let mut columns = Vec::new();
    let mut inconsistent = Vec::new();
    for (name, b, printed, s, n) in table {
        let implied = (b * b + (n - 1.0) / n * s * s).sqrt();
        if (implied - printed).abs() > 0.01 {
            inconsistent.push(format!("{name}: printed {printed:.2}, implied {implied:.2}"));
        }
        columns.push(implied);
    }
    Verdict::new(
        5,
        "metric identities",
        identity_bad == 0 && fixture_ok && inconsistent.is_empty(),
        format!(
            "random identity violations {identity_bad}/1000, hand fixture {}, Table II columns within ±0.01 cm: {}/8{}",
            if fixture_ok { "exact" } else { "WRONG" },
            8 - inconsistent.len(),
            if inconsistent.is_empty() { String::new() } else { format!(" (inconsistent: {})", inconsistent.join("; ")) }
        ),
    )
}

// ─── 6. partial coverage ───────────────────────────────────────────────────

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let trials = 10;
    let (mut ok, mut worst_final, mut least_under) = (0, 0.0f64, f64::INFINITY);
    for i in 0..trials {
        let mut spec = TrunkSpec::new(0.0, 0.0, 0.30);
        spec.height = 2.0;
        spec.coverage_arc = 120f64.to_radians();
        spec.coverage_start = rng.random_range(0.0..TAU);
        spec.noise_sigma = 0.002;
        spec.density = 6000.0;
        let (e, truth) = estimate_single(&spec, i, 600 + i as u64);
        let final_err = (e.dbh_final - truth).abs();
        let hull_under = truth - e.dbh_hull.unwrap_or(0.0);
        worst_final = worst_final.max(final_err);
        least_under = least_under.min(hull_under);
        ok += (final_err <= 2.0 && hull_under > 5.0) as usize;
    }
    Verdict::new(
        6,
        "partial-coverage fallback (120° arc, d = 30 cm)",
        ok == trials,
        format!("{ok}/{trials} trials; worst |final − truth| {worst_final:.2} cm (≤ 2), smallest hull shortfall {least_under:.2} cm (> 5)"),
    )
}

// ─── 7. ground filter on a slope ───────────────────────────────────────────

fn criterion_7() -> Verdict {
    let mut details = Vec::new();
    let mut ok = true;
    for (label, slope) in [("along x", [0.12, 0.0]), ("diagonal", [0.12 * 0.6, 0.12 * 0.8])] {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trunks = (0..6)
            .map(|i| {
                let mut t = TrunkSpec::new(3.0 + 6.0 * (i % 3) as f64 + rng.random_range(-1.0..1.0), 5.0 + 9.0 * (i / 3) as f64, rng.random_range(0.15..0.6));
                t.noise_sigma = 0.005;
                t.density = 1500.0;
                t
            })
            .collect();
        let scene = generate_plot(&SceneConfig {
            seed: 7,
            terrain: TerrainParams { amplitude: 0.3, slope, density: 1500.0, ..TerrainParams::default() },
            trunks,
        })
        .expect("valid scene");
        let params = SmrfParams::default();
        let grid = rasterize_min_elevation(&scene.cloud, params.cell_size).expect("non-empty");
        let ground = smrf_surface(&grid, &params).expect("surface");
        let (g, _) = classify_ground(&scene.cloud, &ground, params.height_threshold);
        let terrain_total = scene.labels.iter().filter(|l| l.is_none()).count();
        let terrain_hit = g.iter().filter(|&&i| scene.labels[i].is_none()).count();
        // height above the true surface, independent of the estimate
        let high_trunk_as_ground = g
            .iter()
            .filter(|&&i| {
                let p = scene.cloud.points()[i];
                scene.labels[i].is_some() && p.z - scene.terrain.height(p.x, p.y) > 1.0
            })
            .count();
        let frac = terrain_hit as f64 / terrain_total as f64;
        ok &= frac >= 0.99 && high_trunk_as_ground == 0;
        details.push(format!("{label}: terrain as ground {:.2}% (≥ 99), trunk points above 1 m as ground {high_trunk_as_ground}", 100.0 * frac));
    }
    Verdict::new(7, "ground filter on 0.12 slope", ok, details.join("; "))
}

// ─── 8. published dataset (optional) ───────────────────────────────────────

/// Needs `STEMHULL_DATASET_A_CLOUD` (the NeRF cloud, .ply or .xyz) and
/// `STEMHULL_DATASET_A_REFERENCE` (a `tree_id,east_m,north_m,dbh_cm` table
/// in the cloud's coordinate frame).
fn criterion_8() -> Option<Verdict> {
    let cloud_path = std::env::var_os("STEMHULL_DATASET_A_CLOUD")?;
    let ref_path = std::env::var_os("STEMHULL_DATASET_A_REFERENCE")?;
    let cloud_path = std::path::PathBuf::from(cloud_path);
    let run = || -> Result<f64, Box<dyn std::error::Error>> {
        let format = CloudFormat::from_path(&cloud_path).ok_or("unknown cloud extension")?;
        let cloud: PointCloud = read_point_cloud(&cloud_path, format)?.cloud;
        let refs = read_reference_csv(std::path::Path::new(&ref_path))?;
        let cfg = PipelineConfig::default();
        let inv = run_inventory(&cloud, &cfg)?;
        let report = inv.report(&refs, &cfg.matching)?;
        report.method(Method::Hull).rmse.ok_or_else(|| "no matched trees".into())
    };
    let mut v = match run() {
        Ok(r) => Verdict::new(8, "published NeRF dataset A", (r - 1.26).abs() <= 0.75, format!("hull RMSE {r:.2} cm (1.26 ± 0.75)")),
        Err(e) => Verdict::new(8, "published NeRF dataset A", false, format!("could not evaluate: {e}")),
    };
    v.gating = false;
    Some(v)
}

fn main() -> ExitCode {
    // tolerate libtest-style arguments passed through by `cargo test`
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !filter.is_empty() && !filter.iter().any(|f| "acceptance".contains(f.as_str())) {
        return ExitCode::SUCCESS;
    }
    let mut verdicts = Vec::new();
    let mut record = |v: Verdict| {
        v.print();
        verdicts.push(v);
    };
    record(criterion_1());
    record(criterion_2());
    record(criterion_3());
    let first = run_plot(1);
    record(criterion_4(&first));
    record(criterion_5());
    record(criterion_6());
    record(criterion_7());
    match criterion_8() {
        Some(v) => record(v),
        None => println!(
            "criterion 8: SKIP — published NeRF dataset A — set STEMHULL_DATASET_A_CLOUD and STEMHULL_DATASET_A_REFERENCE to run (non-gating)"
        ),
    }
    let second = run_plot(1);
    record(criterion_9(&first, &second));

    let failed: Vec<u32> = verdicts.iter().filter(|v| v.gating && !v.pass).map(|v| v.id).collect();
    if failed.is_empty() {
        println!("acceptance: all gating criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
