//! Disk-shaped grey morphology on row-major rasters.

use std::collections::VecDeque;

use super::{GridGeometry, SmrfParams};

/// Sliding min (or max, with `pick_max`) over `[c - h, c + h]` within each row.
fn row_extreme(values: &[f64], ncols: usize, h: usize, pick_max: bool) -> Vec<f64> {
    let better = |a: f64, b: f64| if pick_max { a >= b } else { a <= b };
    let mut out = vec![0.0; values.len()];
    let mut window: VecDeque<usize> = VecDeque::new();
    for (row_in, row_out) in values.chunks(ncols).zip(out.chunks_mut(ncols)) {
        window.clear();
        let mut next = 0usize;
        for c in 0..ncols {
            let hi = (c + h).min(ncols - 1);
            while next <= hi {
                while window.back().is_some_and(|&j| better(row_in[next], row_in[j])) {
                    window.pop_back();
                }
                window.push_back(next);
                next += 1;
            }
            let lo = c.saturating_sub(h);
            while window.front().is_some_and(|&j| j < lo) {
                window.pop_front();
            }
            row_out[c] = row_in[*window.front().expect("window covers c")];
        }
    }
    out
}

/// Erosion (`pick_max = false`) or dilation over a disk of `radius` cells.
fn disk_filter(geometry: &GridGeometry, values: &[f64], radius: usize, pick_max: bool) -> Vec<f64> {
    let (nc, nr) = (geometry.ncols, geometry.nrows);
    let half_widths: Vec<usize> = (0..=radius)
        .map(|dy| (((radius * radius - dy * dy) as f64).sqrt() + 1e-9).floor() as usize)
        .collect();
    let mut by_width: Vec<Option<Vec<f64>>> = vec![None; radius + 1];
    for &h in &half_widths {
        if by_width[h].is_none() {
            by_width[h] = Some(row_extreme(values, nc, h, pick_max));
        }
    }
    let mut out = vec![if pick_max { f64::NEG_INFINITY } else { f64::INFINITY }; values.len()];
    for r in 0..nr {
        let r_lo = r.saturating_sub(radius);
        let r_hi = (r + radius).min(nr - 1);
        for rr in r_lo..=r_hi {
            let h = half_widths[r.abs_diff(rr)];
            let src = by_width[h].as_ref().expect("computed above");
            let (dst, src) = (&mut out[r * nc..(r + 1) * nc], &src[rr * nc..(rr + 1) * nc]);
            for (d, &s) in dst.iter_mut().zip(src) {
                if pick_max {
                    *d = d.max(s);
                } else {
                    *d = d.min(s);
                }
            }
        }
    }
    out
}

pub(crate) fn erode(geometry: &GridGeometry, values: &[f64], radius: usize) -> Vec<f64> {
    disk_filter(geometry, values, radius, false)
}

pub(crate) fn dilate(geometry: &GridGeometry, values: &[f64], radius: usize) -> Vec<f64> {
    disk_filter(geometry, values, radius, true)
}

pub(crate) fn open(geometry: &GridGeometry, values: &[f64], radius: usize) -> Vec<f64> {
    dilate(geometry, &erode(geometry, values, radius), radius)
}

/// Progressive opening with radii `cell_size · {1, 2, …}`; a cell is flagged when
/// one opening step lowers it by more than `slope_threshold × radius`.
pub(crate) fn flag_objects(geometry: &GridGeometry, surface: &[f64], params: &SmrfParams) -> Vec<bool> {
    let steps = (params.max_window_radius / params.cell_size + 1e-9).floor() as usize;
    let mut flagged = vec![false; surface.len()];
    let mut last = surface.to_vec();
    for k in 1..=steps {
        let opened = open(geometry, &last, k);
        let threshold = params.slope_threshold * k as f64 * params.cell_size;
        for ((f, &a), &b) in flagged.iter_mut().zip(&last).zip(&opened) {
            if a - b > threshold {
                *f = true;
            }
        }
        last = opened;
    }
    flagged
}
