use std::f64::consts::TAU;

use nalgebra::{Point2, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::graham::{graham_hull, perimeter};
use super::TerrainParams;
use crate::cloud::{Point3, PointCloud};
use crate::trunk::BREAST_HEIGHT;

/// Depth the stem extends below its base so that it meets sloped terrain
/// without a gap [m]; samples under the terrain surface are discarded.
const EMBED_DEPTH: f64 = 0.3;

/// Vertices of the polygon used for girth truth.
pub const TRUTH_VERTICES: usize = 100_000;

mod defaults {
    pub fn height() -> f64 {
        3.0
    }
    pub fn density() -> f64 {
        4000.0
    }
    pub fn coverage() -> f64 {
        std::f64::consts::TAU
    }
}

/// One synthetic stem.
///
/// The surface in the cross-section plane at axial position `s` is
/// `r(θ, s) = d(s)/2 + A·sin(m·θ + φ)` with `d(s) = base_diameter − taper·s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrunkSpec {
    /// Base location [m].
    pub x: f64,
    pub y: f64,
    /// Diameter where the axis meets the terrain [m].
    pub base_diameter: f64,
    /// Stem length along the axis [m].
    #[serde(default = "defaults::height")]
    pub height: f64,
    /// Diameter loss per meter of stem [m/m].
    #[serde(default)]
    pub taper: f64,
    /// Direction the stem leans toward, from +x [rad].
    #[serde(default)]
    pub lean_azimuth: f64,
    /// Axis angle from vertical [rad].
    #[serde(default)]
    pub lean_angle: f64,
    /// Furrow amplitude `A` [m].
    #[serde(default)]
    pub furrow_amplitude: f64,
    /// Furrow count `m` around the circumference.
    #[serde(default)]
    pub furrow_count: u32,
    /// Furrow phase `φ` [rad].
    #[serde(default)]
    pub furrow_phase: f64,
    /// Surface sample density [points/m²].
    #[serde(default = "defaults::density")]
    pub density: f64,
    /// Gaussian radial noise σ [m].
    #[serde(default)]
    pub noise_sigma: f64,
    /// Scanned arc of the circumference [rad], `2π` for full coverage.
    #[serde(default = "defaults::coverage")]
    pub coverage_arc: f64,
    /// Angle where the scanned arc starts [rad].
    #[serde(default)]
    pub coverage_start: f64,
    /// Allows this stem to overlap its neighbors (fused bases).
    #[serde(default)]
    pub conjoined: bool,
}

impl TrunkSpec {
    /// Straight, smooth, fully covered stem with default height and density.
    pub fn new(x: f64, y: f64, base_diameter: f64) -> Self {
        TrunkSpec {
            x,
            y,
            base_diameter,
            height: defaults::height(),
            taper: 0.0,
            lean_azimuth: 0.0,
            lean_angle: 0.0,
            furrow_amplitude: 0.0,
            furrow_count: 0,
            furrow_phase: 0.0,
            density: defaults::density(),
            noise_sigma: 0.0,
            coverage_arc: defaults::coverage(),
            coverage_start: 0.0,
            conjoined: false,
        }
    }

    pub fn diameter_at(&self, s: f64) -> f64 {
        self.base_diameter - self.taper * s
    }

    pub fn radius(&self, theta: f64, s: f64) -> f64 {
        self.diameter_at(s) / 2.0 + self.furrow_amplitude * (self.furrow_count as f64 * theta + self.furrow_phase).sin()
    }

    fn radius_slope(&self, theta: f64) -> f64 {
        let m = self.furrow_count as f64;
        self.furrow_amplitude * m * (m * theta + self.furrow_phase).cos()
    }

    /// Largest surface radius anywhere on the stem, including the buried part.
    pub fn max_radius(&self) -> f64 {
        self.diameter_at(-EMBED_DEPTH).max(self.diameter_at(self.height)) / 2.0 + self.furrow_amplitude
    }

    pub fn axis(&self) -> Vector3<f64> {
        let (s, c) = self.lean_angle.sin_cos();
        Vector3::new(s * self.lean_azimuth.cos(), s * self.lean_azimuth.sin(), c)
    }

    pub fn validate(&self) -> Result<(), String> {
        let finite = [
            self.x,
            self.y,
            self.base_diameter,
            self.height,
            self.taper,
            self.lean_azimuth,
            self.lean_angle,
            self.furrow_amplitude,
            self.furrow_phase,
            self.density,
            self.noise_sigma,
            self.coverage_arc,
            self.coverage_start,
        ];
        if !finite.iter().all(|v| v.is_finite()) {
            return Err("all parameters must be finite".into());
        }
        if !(self.base_diameter > 0.0 && self.height > BREAST_HEIGHT && self.density > 0.0) {
            return Err("need base_diameter > 0, height > 1.3 m and density > 0".into());
        }
        if self.furrow_amplitude < 0.0 || self.noise_sigma < 0.0 {
            return Err("furrow amplitude and noise must be ≥ 0".into());
        }
        if !(self.coverage_arc > 0.0 && self.coverage_arc <= TAU) {
            return Err(format!("coverage arc must lie in (0, 2π], got {}", self.coverage_arc));
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&self.lean_angle) {
            return Err(format!("lean angle must lie in [0, π/2), got {}", self.lean_angle));
        }
        let thinnest = self.diameter_at(-EMBED_DEPTH).min(self.diameter_at(self.height));
        if thinnest / 2.0 <= self.furrow_amplitude {
            return Err("furrows or taper make the radius non-positive".into());
        }
        Ok(())
    }
}

/// Ground truth of one generated stem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrunkTruth {
    pub index: usize,
    /// Axis position at breast height [m].
    pub location: Point2<f64>,
    /// Girth-tape diameter at breast height [cm].
    pub dbh_cm: f64,
    /// Axial coordinate of the breast-height cross-section [m].
    pub breast_s: f64,
}

/// Girth-tape diameter [m] of the cross-section `r(θ) = d/2 + A·sin(mθ + φ)`:
/// perimeter over π of the convex hull of a dense polygon.
pub fn girth_truth(diameter: f64, amplitude: f64, furrows: u32, phase: f64) -> f64 {
    let vertices: Vec<Point2<f64>> = (0..TRUTH_VERTICES)
        .map(|i| {
            let t = TAU * i as f64 / TRUTH_VERTICES as f64;
            let r = diameter / 2.0 + amplitude * (furrows as f64 * t + phase).sin();
            Point2::new(r * t.cos(), r * t.sin())
        })
        .collect();
    perimeter(&graham_hull(&vertices)) / std::f64::consts::PI
}

/// Axial coordinate where the axis sits 1.3 m above the terrain below it.
fn breast_height_s(spec: &TrunkSpec, terrain: &TerrainParams) -> f64 {
    let axis = spec.axis();
    let zb = terrain.height(spec.x, spec.y);
    let mut s = BREAST_HEIGHT / axis.z;
    for _ in 0..20 {
        let (cx, cy) = (spec.x + s * axis.x, spec.y + s * axis.y);
        let above = zb + s * axis.z - terrain.height(cx, cy);
        s += (BREAST_HEIGHT - above) / axis.z;
    }
    s
}

/// Arc length of the scanned cross-section at axial position `s`.
fn arc_length(spec: &TrunkSpec, s: f64) -> f64 {
    let steps = 2048;
    let dt = spec.coverage_arc / steps as f64;
    (0..steps)
        .map(|i| {
            let t = spec.coverage_start + (i as f64 + 0.5) * dt;
            spec.radius(t, s).hypot(spec.radius_slope(t)) * dt
        })
        .sum()
}

/// Samples one stem uniformly by surface area and computes its truth.
pub fn generate_trunk(index: usize, spec: &TrunkSpec, terrain: &TerrainParams, seed: u64) -> (PointCloud, TrunkTruth) {
    let axis = spec.axis();
    let rot = Rotation3::rotation_between(&Vector3::z(), &axis).unwrap_or_else(Rotation3::identity);
    let base = Point3::new(spec.x, spec.y, terrain.height(spec.x, spec.y));
    let (s0, s1) = (-EMBED_DEPTH, spec.height);
    let area = 0.5 * (arc_length(spec, s0) + arc_length(spec, s1)) * (s1 - s0);
    let target = (spec.density * area).round() as usize;

    // rejection weight: local surface stretch relative to its maximum
    let w_max = spec.max_radius().hypot(spec.furrow_amplitude * spec.furrow_count as f64);
    let noise = Normal::new(0.0, spec.noise_sigma).expect("σ ≥ 0 validated");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(target);
    let mut accepted = 0;
    while accepted < target {
        let s = rng.random_range(s0..s1);
        let t = spec.coverage_start + rng.random::<f64>() * spec.coverage_arc;
        let w = spec.radius(t, s).hypot(spec.radius_slope(t));
        if rng.random::<f64>() * w_max > w {
            continue;
        }
        accepted += 1;
        let r = spec.radius(t, s) + noise.sample(&mut rng);
        let p = base + rot * Vector3::new(r * t.cos(), r * t.sin(), s);
        if p.z >= terrain.height(p.x, p.y) {
            points.push(p);
        }
    }

    let breast_s = breast_height_s(spec, terrain);
    let center = base + axis * breast_s;
    let truth = TrunkTruth {
        index,
        location: Point2::new(center.x, center.y),
        dbh_cm: 100.0 * girth_truth(spec.diameter_at(breast_s), spec.furrow_amplitude, spec.furrow_count, spec.furrow_phase),
        breast_s,
    };
    (PointCloud::new(points), truth)
}
