//! Synthetic forest scenes with exact girth-tape truth.
//!
//! Terrain is an undulating sheet, optionally tilted; each trunk is a
//! tapered, leaning stem with sinusoidal bark furrows, sampled uniformly by
//! area with Gaussian radial noise over a chosen coverage arc. All sampling
//! is seeded, and each trunk draws from its own stream derived from the scene
//! seed, so scenes are bit-reproducible and trunks generate in parallel.

mod graham;
mod trunk;

use std::path::Path;

use nalgebra::Point2;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{Point3, PointCloud};
use crate::metrics::ReferenceTree;

pub use graham::graham_hull;
pub use trunk::{generate_trunk, girth_truth, TrunkSpec, TrunkTruth};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid scene: {0}")]
    Argument(String),
    #[error("{}: {message}", path.display())]
    Config { path: std::path::PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: std::path::PathBuf, source: std::io::Error },
}

/// Axis-aligned rectangle [m].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Extent {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Extent {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Extent { min_x, min_y, max_x, max_y }
    }

    pub fn area(&self) -> f64 {
        (self.max_x - self.min_x) * (self.max_y - self.min_y)
    }
}

/// Terrain surface `z = a·sin(2πx/λ)·cos(2πy/λ) + sx·x + sy·y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerrainParams {
    pub extent: Extent,
    /// Undulation amplitude `a` [m].
    pub amplitude: f64,
    /// Undulation wavelength `λ` [m].
    pub wavelength: f64,
    /// Planar slope along x and y [m/m].
    pub slope: [f64; 2],
    /// Sample density [points/m²].
    pub density: f64,
}

impl Default for TerrainParams {
    fn default() -> Self {
        TerrainParams {
            extent: Extent::new(0.0, 0.0, 20.0, 20.0),
            amplitude: 0.0,
            wavelength: 30.0,
            slope: [0.0, 0.0],
            density: 100.0,
        }
    }
}

impl TerrainParams {
    pub fn height(&self, x: f64, y: f64) -> f64 {
        let k = std::f64::consts::TAU / self.wavelength;
        self.amplitude * (k * x).sin() * (k * y).cos() + self.slope[0] * x + self.slope[1] * y
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let e = &self.extent;
        if !(e.max_x > e.min_x && e.max_y > e.min_y) {
            return Err(SynthError::Argument(format!("terrain extent is empty: {e:?}")));
        }
        if !(self.wavelength > 0.0 && self.density > 0.0 && self.amplitude >= 0.0) {
            return Err(SynthError::Argument(
                "terrain needs wavelength > 0, density > 0 and amplitude ≥ 0".into(),
            ));
        }
        if !self.slope.iter().all(|s| s.is_finite()) {
            return Err(SynthError::Argument("terrain slope must be finite".into()));
        }
        Ok(())
    }
}

/// Seed of stream `stream` derived from a scene seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng.next_u64()
}

/// Uniform xy samples over the extent; `round(density · area)` points.
pub fn generate_terrain(params: &TerrainParams, seed: u64) -> Result<PointCloud, SynthError> {
    params.validate()?;
    let e = params.extent;
    let n = (params.density * e.area()).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let x = rng.random_range(e.min_x..e.max_x);
            let y = rng.random_range(e.min_y..e.max_y);
            Point3::new(x, y, params.height(x, y))
        })
        .collect())
}

/// Declarative scene: terrain plus trunks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub terrain: TerrainParams,
    #[serde(default, rename = "trunk")]
    pub trunks: Vec<TrunkSpec>,
}

impl SceneConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// A 20 × 20 m benchmark plot: ten furrowed, tapered, leaning trunks of
    /// 10–80 cm on a loose 4-column grid over terrain undulating by ±0.5 m,
    /// with 0.5 cm sensor noise. Trunk shapes and positions are drawn from
    /// `seed`; the bare scene is about 3 M points.
    pub fn benchmark(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trunks = (0..10)
            .map(|i| {
                let (col, row) = ((i % 4) as f64, (i / 4) as f64);
                let d = 0.1 + 0.7 * i as f64 / 9.0;
                let mut t = TrunkSpec::new(
                    2.5 + 5.0 * col + rng.random_range(-0.8..0.8),
                    3.0 + 6.0 * row + rng.random_range(-0.8..0.8),
                    d,
                );
                t.height = rng.random_range(4.0..6.0);
                t.taper = d * rng.random_range(0.01..0.04);
                t.lean_angle = rng.random_range(0.0..10f64.to_radians());
                t.lean_azimuth = rng.random_range(0.0..std::f64::consts::TAU);
                t.furrow_amplitude = rng.random_range(0.005..0.015f64).min(d / 8.0);
                t.furrow_count = rng.random_range(16..=32);
                t.furrow_phase = rng.random_range(0.0..std::f64::consts::TAU);
                t.noise_sigma = 0.005;
                t.density = 2000.0;
                t
            })
            .collect();
        SceneConfig {
            seed,
            terrain: TerrainParams { amplitude: 0.5, density: 7000.0, ..TerrainParams::default() },
            trunks,
        }
    }

    pub fn load(path: &Path) -> Result<Self, SynthError> {
        let text = std::fs::read_to_string(path).map_err(|source| SynthError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text).map_err(|message| SynthError::Config { path: path.to_path_buf(), message })
    }
}

/// A generated plot. `labels[i]` is the trunk index of point `i`, `None`
/// for terrain.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub cloud: PointCloud,
    pub labels: Vec<Option<usize>>,
    pub truth: Vec<TrunkTruth>,
    pub terrain: TerrainParams,
}

impl Scene {
    /// Truth in reference-table form; ids are `T<index>`.
    pub fn references(&self) -> Vec<ReferenceTree> {
        self.truth
            .iter()
            .map(|t| ReferenceTree {
                tree_id: format!("T{}", t.index),
                location: t.location,
                dbh: t.dbh_cm,
            })
            .collect()
    }
}

/// Rejects trunk pairs whose bases interpenetrate unless either is flagged
/// conjoined.
fn check_spacing(trunks: &[TrunkSpec]) -> Result<(), SynthError> {
    for (i, a) in trunks.iter().enumerate() {
        for (j, b) in trunks.iter().enumerate().skip(i + 1) {
            if a.conjoined || b.conjoined {
                continue;
            }
            let gap = (Point2::new(a.x, a.y) - Point2::new(b.x, b.y)).norm();
            let need = a.max_radius() + b.max_radius();
            if gap < need {
                return Err(SynthError::Argument(format!(
                    "trunks {i} and {j} interpenetrate: spacing {gap:.3} m < {need:.3} m"
                )));
            }
        }
    }
    Ok(())
}

/// Terrain and trunks merged into one cloud (terrain first, then trunks in
/// spec order) with truth for every trunk.
pub fn generate_plot(config: &SceneConfig) -> Result<Scene, SynthError> {
    config.terrain.validate()?;
    for (i, t) in config.trunks.iter().enumerate() {
        t.validate().map_err(|m| SynthError::Argument(format!("trunk {i}: {m}")))?;
    }
    check_spacing(&config.trunks)?;

    let terrain = config.terrain;
    let mut cloud = generate_terrain(&terrain, derive_seed(config.seed, 0))?;
    let mut labels = vec![None; cloud.len()];
    let trunks: Vec<(PointCloud, TrunkTruth)> = config
        .trunks
        .par_iter()
        .enumerate()
        .map(|(i, spec)| generate_trunk(i, spec, &terrain, derive_seed(config.seed, i as u64 + 1)))
        .collect();
    let mut truth = Vec::with_capacity(trunks.len());
    for (i, (c, t)) in trunks.into_iter().enumerate() {
        labels.extend(std::iter::repeat_n(Some(i), c.len()));
        cloud.extend(&c);
        truth.push(t);
    }
    Ok(Scene { cloud, labels, truth, terrain })
}
