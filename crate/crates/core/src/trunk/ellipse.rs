//! Direct least-squares ellipse fit with the ellipse-specific constraint
//! `4AC − B² = 1`, using the numerically stable block formulation.

use nalgebra::{Matrix2, Matrix3, Point2, SymmetricEigen, Vector2, Vector3};

use super::FitError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseModel {
    pub center: Point2<f64>,
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Angle of the major axis from +x, in `(−π/2, π/2]`.
    pub rotation: f64,
}

impl EllipseModel {
    /// Mean of the major and minor diameters.
    pub fn mean_diameter(&self) -> f64 {
        self.semi_major + self.semi_minor
    }
}

/// Null vector of a rank-2 3×3 matrix via the largest row cross product.
fn null_vector(m: &Matrix3<f64>) -> Vector3<f64> {
    let rows = [m.row(0).transpose(), m.row(1).transpose(), m.row(2).transpose()];
    [rows[0].cross(&rows[1]), rows[0].cross(&rows[2]), rows[1].cross(&rows[2])]
        .into_iter()
        .max_by(|a, b| a.norm_squared().total_cmp(&b.norm_squared()))
        .expect("three candidates")
}

pub fn ls_ellipse(points: &[Point2<f64>]) -> Result<EllipseModel, FitError> {
    if points.len() < 6 {
        return Err(FitError::TooFewPoints { needed: 6, got: points.len() });
    }
    let n = points.len() as f64;
    let mean = points.iter().fold(Vector2::zeros(), |s, p| s + p.coords) / n;
    let scale = (points.iter().map(|p| (p.coords - mean).norm_squared()).sum::<f64>() / n).sqrt();
    if !(scale > 0.0) {
        return Err(FitError::NoModel("all points coincide".into()));
    }
    let spread = points.iter().fold(Matrix2::zeros(), |s, p| {
        let d = p.coords - mean;
        s + d * d.transpose()
    });
    let spread = SymmetricEigen::new(spread).eigenvalues;
    if spread.min() <= 1e-12 * spread.max() {
        return Err(FitError::NoModel("points are collinear".into()));
    }

    let mut s1 = Matrix3::zeros();
    let mut s2 = Matrix3::zeros();
    let mut s3 = Matrix3::zeros();
    for p in points {
        let q = (p.coords - mean) / scale;
        let quad = Vector3::new(q.x * q.x, q.x * q.y, q.y * q.y);
        let lin = Vector3::new(q.x, q.y, 1.0);
        s1 += quad * quad.transpose();
        s2 += quad * lin.transpose();
        s3 += lin * lin.transpose();
    }
    let s3_inv = s3.try_inverse().ok_or(FitError::NoModel("points are collinear".into()))?;
    let t = -s3_inv * s2.transpose();
    let m = s1 + s2 * t;
    // premultiply by the inverse constraint matrix
    let reduced = Matrix3::from_rows(&[(m.row(2) * 0.5), -m.row(1), (m.row(0) * 0.5)]);

    let mut best: Option<(f64, Vector3<f64>)> = None;
    for ev in reduced.complex_eigenvalues().iter() {
        if ev.im.abs() > 1e-9 * (1.0 + ev.re.abs()) {
            continue;
        }
        let v = null_vector(&(reduced - Matrix3::identity() * ev.re));
        let cond = 4.0 * v.x * v.z - v.y * v.y;
        if cond > 0.0 && best.as_ref().is_none_or(|(lambda, _)| ev.re < *lambda) {
            best = Some((ev.re, v));
        }
    }
    let (_, quad) = best.ok_or(FitError::NoModel("conic is not an ellipse".into()))?;
    let lin = t * quad;
    let (a, b, c) = (quad.x, quad.y, quad.z);
    let (d, e, f) = (lin.x, lin.y, lin.z);

    let center = Matrix2::new(2.0 * a, b, b, 2.0 * c)
        .try_inverse()
        .ok_or(FitError::NoModel("degenerate conic".into()))?
        * Vector2::new(-d, -e);
    let f0 = a * center.x * center.x + b * center.x * center.y + c * center.y * center.y + d * center.x + e * center.y + f;
    let eig = SymmetricEigen::new(Matrix2::new(a, b / 2.0, b / 2.0, c));
    let axes_sq = [-f0 / eig.eigenvalues[0], -f0 / eig.eigenvalues[1]];
    if !(axes_sq[0] > 0.0 && axes_sq[1] > 0.0 && axes_sq.iter().all(|v| v.is_finite())) {
        return Err(FitError::NoModel("conic is not a real ellipse".into()));
    }
    let major = if axes_sq[0] >= axes_sq[1] { 0 } else { 1 };
    let dir = eig.eigenvectors.column(major);
    let mut rotation = dir.y.atan2(dir.x);
    if rotation <= -std::f64::consts::FRAC_PI_2 {
        rotation += std::f64::consts::PI;
    } else if rotation > std::f64::consts::FRAC_PI_2 {
        rotation -= std::f64::consts::PI;
    }
    Ok(EllipseModel {
        center: Point2::from(mean + center * scale),
        semi_major: axes_sq[major].sqrt() * scale,
        semi_minor: axes_sq[1 - major].sqrt() * scale,
        rotation,
    })
}
