//! Accuracy statistics against reference measurements: tree matching, bias,
//! RMSE and residual standard deviation per measurement method.

mod io;

use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use crate::trunk::{DbhEstimate, DbhMethod};

pub use io::{read_estimates_csv, read_reference_csv, write_reference_csv, write_report_csv, MetricsIoError, REFERENCE_HEADER, REPORT_HEADER};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("metric undefined: {0}")]
    Undefined(String),
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// A field-measured stem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTree {
    pub tree_id: String,
    pub location: Point2<f64>,
    /// Diameter at breast height [cm].
    pub dbh: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPair {
    pub estimate: DbhEstimate,
    pub reference: ReferenceTree,
    /// Horizontal distance between the two stem locations [m].
    pub distance: f64,
}

impl MatchedPair {
    /// Estimate minus reference for `method` [cm], if that method produced a value.
    pub fn residual(&self, method: Method) -> Option<f64> {
        method.value(&self.estimate).map(|v| v - self.reference.dbh)
    }
}

/// Which estimate column a statistic is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Hull,
    Cylinder,
    Ellipse,
    Final,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Hull, Method::Cylinder, Method::Ellipse, Method::Final];

    pub fn value(self, e: &DbhEstimate) -> Option<f64> {
        match self {
            Method::Hull => e.method_value(DbhMethod::Hull),
            Method::Cylinder => e.method_value(DbhMethod::Cylinder),
            Method::Ellipse => e.method_value(DbhMethod::Ellipse),
            Method::Final => Some(e.dbh_final),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Hull => "hull",
            Method::Cylinder => "cylinder",
            Method::Ellipse => "ellipse",
            Method::Final => "final",
        }
    }
}

/// Greedy globally-nearest matching.
///
/// Candidate pairs within `max_dist` are taken in order of increasing
/// distance, then lower estimate id, then earlier reference, skipping trees
/// that are already matched. Returns the pairs plus the unmatched estimates
/// and references, each in input order.
pub fn match_trees(
    estimates: &[DbhEstimate],
    references: &[ReferenceTree],
    max_dist: f64,
) -> Result<(Vec<MatchedPair>, Vec<DbhEstimate>, Vec<ReferenceTree>), MetricError> {
    if !(max_dist > 0.0) {
        return Err(MetricError::Argument(format!("matching radius must be positive, got {max_dist}")));
    }
    let mut candidates = Vec::new();
    for (ei, e) in estimates.iter().enumerate() {
        for (ri, r) in references.iter().enumerate() {
            let d = (e.stem_location - r.location).norm();
            if d <= max_dist {
                candidates.push((d, e.tree_id, ei, ri));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)).then(a.3.cmp(&b.3)));
    let mut e_used = vec![false; estimates.len()];
    let mut r_used = vec![false; references.len()];
    let mut pairs = Vec::new();
    for (d, _, ei, ri) in candidates {
        if e_used[ei] || r_used[ri] {
            continue;
        }
        e_used[ei] = true;
        r_used[ri] = true;
        pairs.push(MatchedPair {
            estimate: estimates[ei].clone(),
            reference: references[ri].clone(),
            distance: d,
        });
    }
    let unmatched_e = estimates.iter().zip(&e_used).filter(|(_, u)| !**u).map(|(e, _)| e.clone()).collect();
    let unmatched_r = references.iter().zip(&r_used).filter(|(_, u)| !**u).map(|(r, _)| r.clone()).collect();
    Ok((pairs, unmatched_e, unmatched_r))
}

/// Mean residual.
pub fn bias(residuals: &[f64]) -> Result<f64, MetricError> {
    if residuals.is_empty() {
        return Err(MetricError::Undefined("bias of an empty set".into()));
    }
    Ok(residuals.iter().sum::<f64>() / residuals.len() as f64)
}

/// Root mean squared residual.
pub fn rmse(residuals: &[f64]) -> Result<f64, MetricError> {
    if residuals.is_empty() {
        return Err(MetricError::Undefined("RMSE of an empty set".into()));
    }
    Ok((residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt())
}

/// Sample standard deviation of the residuals (`n − 1` denominator).
pub fn stddev(residuals: &[f64]) -> Result<f64, MetricError> {
    if residuals.len() < 2 {
        return Err(MetricError::Undefined(format!(
            "standard deviation needs ≥ 2 residuals, got {}",
            residuals.len()
        )));
    }
    let mean = bias(residuals)?;
    let ss = residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>();
    Ok((ss / (residuals.len() - 1) as f64).sqrt())
}

/// Bias, RMSE and standard deviation over one method's residuals; each
/// statistic is absent where undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub n: usize,
    pub bias: Option<f64>,
    pub rmse: Option<f64>,
    pub std: Option<f64>,
}

impl MethodMetrics {
    pub fn from_residuals(residuals: &[f64]) -> Self {
        MethodMetrics {
            n: residuals.len(),
            bias: bias(residuals).ok(),
            rmse: rmse(residuals).ok(),
            std: stddev(residuals).ok(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchConfig {
    /// Largest stem-location distance accepted as a match [m].
    pub max_dist: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig { max_dist: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InventoryReport {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_estimates: Vec<DbhEstimate>,
    pub unmatched_references: Vec<ReferenceTree>,
    /// Statistics of the final (max-rule) diameter.
    pub n: usize,
    pub bias: Option<f64>,
    pub rmse: Option<f64>,
    pub std: Option<f64>,
    /// Statistics per method, in [`Method::ALL`] order.
    pub per_method: Vec<(Method, MethodMetrics)>,
}

impl InventoryReport {
    pub fn method(&self, method: Method) -> MethodMetrics {
        self.per_method
            .iter()
            .find(|(m, _)| *m == method)
            .map(|(_, mm)| *mm)
            .expect("every method is reported")
    }

    pub fn residuals(&self, method: Method) -> Vec<f64> {
        self.pairs.iter().filter_map(|p| p.residual(method)).collect()
    }
}

/// Matches estimates to references and computes every per-method statistic.
pub fn report(estimates: &[DbhEstimate], references: &[ReferenceTree], cfg: &MatchConfig) -> Result<InventoryReport, MetricError> {
    let (pairs, unmatched_estimates, unmatched_references) = match_trees(estimates, references, cfg.max_dist)?;
    let per_method: Vec<(Method, MethodMetrics)> = Method::ALL
        .iter()
        .map(|&m| {
            let res: Vec<f64> = pairs.iter().filter_map(|p| p.residual(m)).collect();
            (m, MethodMetrics::from_residuals(&res))
        })
        .collect();
    let fin = per_method[3].1;
    Ok(InventoryReport {
        pairs,
        unmatched_estimates,
        unmatched_references,
        n: fin.n,
        bias: fin.bias,
        rmse: fin.rmse,
        std: fin.std,
        per_method,
    })
}

/// Machine-readable run summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InventorySummary {
    pub trees_estimated: usize,
    pub detection_only: usize,
    pub matched: usize,
    pub unmatched_estimates: usize,
    pub unmatched_references: usize,
    pub metrics: std::collections::BTreeMap<Method, MethodMetrics>,
    pub warnings: Vec<String>,
}

impl InventorySummary {
    pub fn from_report(report: &InventoryReport, detection_only: usize, warnings: Vec<String>) -> Self {
        InventorySummary {
            trees_estimated: report.pairs.len() + report.unmatched_estimates.len(),
            detection_only,
            matched: report.pairs.len(),
            unmatched_estimates: report.unmatched_estimates.len(),
            unmatched_references: report.unmatched_references.len(),
            metrics: report.per_method.iter().copied().collect(),
            warnings,
        }
    }
}
