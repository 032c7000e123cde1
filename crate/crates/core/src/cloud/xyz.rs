use std::fmt::Write as _;

use super::{LoadedCloud, Point3, PointCloud};

pub(super) fn parse(bytes: &[u8]) -> Result<LoadedCloud, (u64, String)> {
    let text = std::str::from_utf8(bytes).map_err(|e| (e.valid_up_to() as u64, "file is not valid UTF-8".to_string()))?;
    let mut points = Vec::new();
    let mut skipped = 0;
    let mut offset = 0u64;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len() as u64;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tok = line.split_whitespace();
        let mut xyz = [0.0f64; 3];
        for v in xyz.iter_mut() {
            let t = tok.next().ok_or((start, "expected three coordinates".to_string()))?;
            *v = t.parse().map_err(|_| (start, format!("invalid number '{t}'")))?;
        }
        if xyz.iter().all(|v| v.is_finite()) {
            points.push(Point3::new(xyz[0], xyz[1], xyz[2]));
        } else {
            skipped += 1;
        }
    }
    Ok(LoadedCloud {
        cloud: PointCloud::new(points),
        skipped_non_finite: skipped,
    })
}

pub(super) fn encode(cloud: &PointCloud) -> Vec<u8> {
    let mut out = String::with_capacity(cloud.len() * 40);
    for p in cloud.points() {
        let _ = writeln!(out, "{:?} {:?} {:?}", p.x, p.y, p.z);
    }
    out.into_bytes()
}
