//! End-to-end inventory: ground filter, stem segmentation and per-tree DBH,
//! driven by one declarative configuration.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{build_spatial_index, CloudError, PointCloud};
use crate::ground::{classify_ground, rasterize_min_elevation, smrf_surface, write_ground_model, GroundError, GroundModel, SmrfParams};
use crate::metrics::{report, write_report_csv, InventoryReport, InventorySummary, MatchConfig, MetricsIoError, ReferenceTree};
use crate::segment::{
    complete_stems, curvature_filter, estimate_features, verticality_filter, euclidean_cluster, merge_stem_clusters, split_conjoined, DbscanParams, TrunkCluster,
};
use crate::trunk::{breast_height_section, estimate_dbh, DbhConfig, DbhEstimate, CROP_HIGH, CROP_LOW};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Cloud(#[from] CloudError),
    #[error(transparent)]
    Ground(#[from] GroundError),
    #[error(transparent)]
    Metrics(#[from] MetricsIoError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("pipeline failed: {0}")]
    Failed(String),
}

impl PipelineError {
    /// Process exit status: 1 configuration, 2 I/O, 3 pipeline failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Io { .. } | PipelineError::Metrics(_) => 2,
            PipelineError::Cloud(CloudError::Io { .. } | CloudError::Parse { .. }) => 2,
            PipelineError::Ground(GroundError::Io { .. } | GroundError::Format { .. }) => 2,
            PipelineError::Cloud(_) | PipelineError::Ground(_) | PipelineError::Failed(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentConfig {
    /// Neighborhood size for normals and curvature.
    pub k: usize,
    /// Largest `|n_z|` of a trunk point.
    pub max_normal_z: f64,
    pub max_curvature: f64,
    /// Euclidean clustering distance [m].
    pub cluster_tolerance: f64,
    pub min_cluster_size: usize,
    /// Fragment merge: largest xy centroid distance [m].
    pub merge_xy_gap: f64,
    /// Fragment merge: largest vertical overlap [m].
    pub merge_z_overlap: f64,
    /// DBSCAN on the xy projection used to split fused stems.
    pub split: DbscanParams,
    /// Above-ground points this close to a stem member rejoin the stem
    /// after filtering [m]; 0 disables.
    pub completion_radius: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            k: 16,
            max_normal_z: 0.5,
            max_curvature: 0.1,
            cluster_tolerance: 0.15,
            min_cluster_size: 100,
            merge_xy_gap: 0.3,
            merge_z_overlap: 0.2,
            split: DbscanParams { eps: 0.1, min_pts: 10 },
            completion_radius: 0.05,
        }
    }
}

/// Every tunable of the inventory, plus paths and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    /// Reference table; when present the report is matched against it.
    pub reference: Option<PathBuf>,
    pub seed: u64,
    /// Worker thread cap; all cores when absent.
    pub threads: Option<usize>,
    pub debug_dumps: bool,
    /// Stems with a smaller final diameter are left out of the report [cm].
    pub min_dbh_cm: f64,
    pub ground: SmrfParams,
    pub segment: SegmentConfig,
    pub dbh: DbhConfig,
    pub matching: MatchConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            out_dir: None,
            reference: None,
            seed: 0,
            threads: None,
            debug_dumps: false,
            min_dbh_cm: 8.0,
            ground: SmrfParams::default(),
            segment: SegmentConfig::default(),
            dbh: DbhConfig::default(),
            matching: MatchConfig::default(),
        }
    }
}

/// Accepted range for the slice denoising radius [m].
pub const DENOISE_EPS_RANGE: std::ops::RangeInclusive<f64> = 0.01..=0.03;

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }

    /// Checks every module precondition; nothing runs on an invalid config.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        self.ground.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        let s = &self.segment;
        if s.k < 3 {
            return bad(format!("segment.k must be ≥ 3, got {}", s.k));
        }
        for (name, v) in [
            ("segment.max_normal_z", s.max_normal_z),
            ("segment.max_curvature", s.max_curvature),
            ("segment.cluster_tolerance", s.cluster_tolerance),
            ("segment.merge_xy_gap", s.merge_xy_gap),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(s.merge_z_overlap >= 0.0) {
            return bad(format!("segment.merge_z_overlap must be ≥ 0, got {}", s.merge_z_overlap));
        }
        if !(s.completion_radius >= 0.0 && s.completion_radius.is_finite()) {
            return bad(format!("segment.completion_radius must be ≥ 0, got {}", s.completion_radius));
        }
        s.split.validate().map_err(|e| PipelineError::Config(format!("segment.split: {e}")))?;
        let d = &self.dbh;
        if !(d.slice_thickness > 0.0 && d.slice_thickness.is_finite()) {
            return bad(format!("dbh.slice_thickness must be positive, got {}", d.slice_thickness));
        }
        if !DENOISE_EPS_RANGE.contains(&d.denoise_eps) {
            return bad(format!("dbh.denoise_eps must lie in [0.01, 0.03] m, got {}", d.denoise_eps));
        }
        if !(d.max_coverage_gap > 0.0) {
            return bad("dbh.max_coverage_gap must be positive".into());
        }
        let r = &d.ransac;
        if !(r.dist_threshold > 0.0 && r.max_tilt > 0.0 && r.iterations > 0) {
            return bad("dbh.ransac needs dist_threshold > 0, max_tilt > 0 and iterations > 0".into());
        }
        if !(self.matching.max_dist > 0.0) {
            return bad(format!("matching.max_dist must be positive, got {}", self.matching.max_dist));
        }
        if !(self.min_dbh_cm >= 0.0 && self.min_dbh_cm.is_finite()) {
            return bad(format!("min_dbh_cm must be ≥ 0, got {}", self.min_dbh_cm));
        }
        if self.threads == Some(0) {
            return bad("threads must be ≥ 1".into());
        }
        Ok(())
    }
}

/// Everything one inventory run produces.
#[derive(Debug, Clone)]
pub struct InventoryRun {
    pub ground: GroundModel,
    /// Indices into the input cloud of the points classified ground.
    pub ground_indices: Vec<usize>,
    /// Stems in tree-id order; member indices refer to the input cloud.
    pub stems: Vec<TrunkCluster>,
    /// Reported trees, ascending tree id.
    pub estimates: Vec<DbhEstimate>,
    /// Machine-readable notes on skipped and unmeasurable stems.
    pub warnings: Vec<String>,
    pub detection_only: usize,
    normals: Vec<Vector3<f64>>,
}

/// Runs ground filter → segmentation → per-tree DBH on an in-memory cloud.
pub fn run_inventory(cloud: &PointCloud, cfg: &PipelineConfig) -> Result<InventoryRun, PipelineError> {
    cfg.validate()?;
    let grid = rasterize_min_elevation(cloud, cfg.ground.cell_size)?;
    let ground = smrf_surface(&grid, &cfg.ground)?;
    let (ground_indices, above) = classify_ground(cloud, &ground, cfg.ground.height_threshold);
    log::info!("ground: {} of {} points", ground_indices.len(), cloud.len());

    let seg = &cfg.segment;
    let mut warnings = Vec::new();
    let mut normals = vec![Vector3::zeros(); cloud.len()];
    let mut stems = Vec::new();
    if above.len() >= seg.k {
        let off = cloud.select(&above);
        let index = build_spatial_index(&off);
        let features = estimate_features(&off, &index, seg.k).map_err(|e| PipelineError::Failed(e.to_string()))?;
        let mut keep = verticality_filter(&features, seg.max_normal_z);
        let smooth = curvature_filter(&features, seg.max_curvature);
        keep.retain(|i| smooth.binary_search(i).is_ok() && !features.degenerate[*i]);
        for (i, &src) in above.iter().enumerate() {
            normals[src] = features.normals[i];
        }
        let trunk_pts: Vec<_> = keep.iter().map(|&i| off.points()[i]).collect();
        log::info!("trunk candidates: {} of {} above-ground points", trunk_pts.len(), off.len());
        let clusters: Vec<TrunkCluster> = euclidean_cluster(&trunk_pts, seg.cluster_tolerance, seg.min_cluster_size)
            .into_iter()
            .filter_map(|members| TrunkCluster::from_indices(cloud, &ground, members.into_iter().map(|j| above[keep[j]]).collect()))
            .collect();
        let merged = merge_stem_clusters(clusters, seg.merge_xy_gap, seg.merge_z_overlap);
        for c in merged {
            for part in split_conjoined(&c, cloud, &ground, &seg.split) {
                if part.base_height <= CROP_LOW && part.top_height >= CROP_HIGH {
                    stems.push(part);
                } else {
                    warnings.push(format!(
                        "cluster of {} points at ({:.2}, {:.2}) spans {:.2}–{:.2} m and misses breast height; skipped",
                        part.len(),
                        part.centroid.x,
                        part.centroid.y,
                        part.base_height,
                        part.top_height
                    ));
                }
            }
        }
    }
    // stable ids: west to east, then south to north
    stems.sort_by(|a, b| {
        a.centroid.x.total_cmp(&b.centroid.x).then(a.centroid.y.total_cmp(&b.centroid.y)).then(a.indices[0].cmp(&b.indices[0]))
    });
    let stems = complete_stems(stems, cloud, &ground, &above, seg.completion_radius);
    log::info!("stems: {}", stems.len());

    let dbh_cfg = DbhConfig {
        ransac: crate::trunk::RansacConfig { seed: cfg.seed, ..cfg.dbh.ransac },
        ..cfg.dbh
    };
    let results: Vec<_> = stems
        .par_iter()
        .enumerate()
        .map(|(id, stem)| estimate_dbh(id, stem, cloud, &ground, Some(&normals), &dbh_cfg))
        .collect();
    let mut estimates = Vec::new();
    let mut detection_only = 0;
    for r in results {
        match r {
            Ok(e) if e.dbh_final < cfg.min_dbh_cm => warnings.push(format!(
                "tree {}: DBH {:.2} cm below the {:.1} cm minimum; dropped",
                e.tree_id, e.dbh_final, cfg.min_dbh_cm
            )),
            Ok(e) => estimates.push(e),
            Err(d) => {
                detection_only += 1;
                warnings.push(d.to_string());
            }
        }
    }
    Ok(InventoryRun {
        ground,
        ground_indices,
        stems,
        estimates,
        warnings,
        detection_only,
        normals,
    })
}

impl InventoryRun {
    pub fn report(&self, references: &[ReferenceTree], matching: &MatchConfig) -> Result<InventoryReport, PipelineError> {
        report(&self.estimates, references, matching).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn summary(&self, report: &InventoryReport) -> InventorySummary {
        InventorySummary::from_report(report, self.detection_only, self.warnings.clone())
    }

    /// Per-stem cross-section, hull and ground raster dumps for plotting.
    pub fn write_debug_dumps(&self, cloud: &PointCloud, cfg: &PipelineConfig, dir: &Path) -> Result<(), PipelineError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| PipelineError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        write_ground_model(&self.ground, &dir.join("ground.asc"))?;
        for (id, stem) in self.stems.iter().enumerate() {
            let Some((section, hull)) = breast_height_section(stem, cloud, &self.ground, Some(&self.normals), &cfg.dbh) else {
                continue;
            };
            for (name, pts) in [("section", section.as_slice()), ("hull", hull.vertices())] {
                let path = dir.join(format!("tree_{id:04}_{name}.csv"));
                let mut text = String::from("x_m,y_m\n");
                for p in pts {
                    text.push_str(&format!("{:.5},{:.5}\n", p.x, p.y));
                }
                std::fs::write(&path, text).map_err(io(&path))?;
            }
        }
        Ok(())
    }
}

/// Writes `report.csv` and `summary.json` into `out_dir`.
pub fn write_outputs(out_dir: &Path, report: &InventoryReport, summary: &InventorySummary) -> Result<(), PipelineError> {
    std::fs::create_dir_all(out_dir).map_err(|source| PipelineError::Io { path: out_dir.to_path_buf(), source })?;
    write_report_csv(&out_dir.join("report.csv"), report)?;
    write_summary(&out_dir.join("summary.json"), summary)
}

pub fn write_summary(path: &Path, summary: &InventorySummary) -> Result<(), PipelineError> {
    let io = |source| PipelineError::Io { path: path.to_path_buf(), source };
    let mut f = std::fs::File::create(path).map_err(io)?;
    serde_json::to_writer_pretty(&mut f, summary).map_err(|e| PipelineError::Failed(e.to_string()))?;
    writeln!(f).map_err(io)
}

/// Runs `f` on a pool capped at `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, PipelineError> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| PipelineError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
