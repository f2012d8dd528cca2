//! Segmentation and axis evaluation metrics.
//!
//! Surface distances are measured between contour pixel centers. Nearest
//! neighbours are found with an exact squared Euclidean distance transform
//! of the opposing contour, so results equal the pairwise minimum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_between, point_to_line_distance, FittedLine};
use crate::mask::{extract_contour, BinaryMask, ContourSet};
use crate::point::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationReport {
    pub dice: f64,
    pub asd_mm: f64,
    pub hd_mm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisReport {
    pub angulation_deg: f64,
    pub displacement_mm: f64,
}

fn check_shapes(a: &BinaryMask, b: &BinaryMask) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::InvalidInput(format!(
            "mask dimensions differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Sørensen–Dice coefficient; 1 when both masks are empty.
pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    check_shapes(a, b)?;
    let (mut both, mut na, mut nb) = (0usize, 0usize, 0usize);
    for (&pa, &pb) in a.pixels().iter().zip(b.pixels()) {
        na += pa as usize;
        nb += pb as usize;
        both += (pa && pb) as usize;
    }
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * both as f64 / (na + nb) as f64)
}

/// Squared distance transform along one line: `out[q] = min_p f[p] + (q-p)^2`
/// over the finite entries of `f` (lower envelope of parabolas).
fn edt_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let sites: Vec<usize> = (0..n).filter(|&q| f[q].is_finite()).collect();
    if sites.is_empty() {
        out.fill(f64::INFINITY);
        return;
    }
    let mut v = Vec::with_capacity(sites.len());
    let mut z: Vec<f64> = Vec::with_capacity(sites.len() + 1);
    let intersect = |q: usize, p: usize| {
        let (qf, pf) = (q as f64, p as f64);
        ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * qf - 2.0 * pf)
    };
    for &q in &sites {
        loop {
            match v.last() {
                None => {
                    v.push(q);
                    z.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&p) => {
                    let s = intersect(q, p);
                    if s <= *z.last().unwrap() {
                        v.pop();
                        z.pop();
                    } else {
                        v.push(q);
                        z.push(s);
                        break;
                    }
                }
            }
        }
    }
    let mut k = 0;
    for (q, slot) in out.iter_mut().enumerate() {
        let qf = q as f64;
        while k + 1 < v.len() && z[k + 1] < qf {
            k += 1;
        }
        let d = qf - v[k] as f64;
        *slot = f[v[k]] + d * d;
    }
}

/// Squared Euclidean distance (in pixels) from every pixel to the nearest
/// feature pixel.
fn squared_distance_field(width: usize, height: usize, features: &ContourSet) -> Vec<f64> {
    let mut grid = vec![f64::INFINITY; width * height];
    for &(x, y) in features.points() {
        grid[y * width + x] = 0.0;
    }
    let mut col = vec![0.0; height];
    let mut col_out = vec![0.0; height];
    for x in 0..width {
        for y in 0..height {
            col[y] = grid[y * width + x];
        }
        edt_1d(&col, &mut col_out);
        for y in 0..height {
            grid[y * width + x] = col_out[y];
        }
    }
    let mut row_out = vec![0.0; width];
    for y in 0..height {
        let row = &mut grid[y * width..(y + 1) * width];
        edt_1d(row, &mut row_out);
        row.copy_from_slice(&row_out);
    }
    grid
}

/// Directed distances (pixels) from each point of `from` to the nearest point of `to`.
fn directed_distances(width: usize, height: usize, from: &ContourSet, to: &ContourSet) -> Vec<f64> {
    let field = squared_distance_field(width, height, to);
    from.points()
        .iter()
        .map(|&(x, y)| field[y * width + x].sqrt())
        .collect()
}

struct SurfaceDistances {
    a_to_b: Vec<f64>,
    b_to_a: Vec<f64>,
    spacing: f64,
}

fn surface_distances(a: &BinaryMask, b: &BinaryMask) -> Result<SurfaceDistances> {
    check_shapes(a, b)?;
    if a.spacing() != b.spacing() {
        return Err(Error::InvalidInput(format!(
            "mask spacing differs: {} vs {}",
            a.spacing(),
            b.spacing()
        )));
    }
    let (ca, cb) = (extract_contour(a), extract_contour(b));
    if ca.is_empty() || cb.is_empty() {
        return Err(Error::UndefinedMetric(
            "surface distance needs two non-empty contours".into(),
        ));
    }
    let (w, h) = (a.width(), a.height());
    Ok(SurfaceDistances {
        a_to_b: directed_distances(w, h, &ca, &cb),
        b_to_a: directed_distances(w, h, &cb, &ca),
        spacing: a.spacing(),
    })
}

/// Symmetric average surface distance in millimetres.
pub fn average_surface_distance(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    let d = surface_distances(a, b)?;
    let total: f64 = d.a_to_b.iter().sum::<f64>() + d.b_to_a.iter().sum::<f64>();
    Ok(total / (d.a_to_b.len() + d.b_to_a.len()) as f64 * d.spacing)
}

/// Symmetric Hausdorff distance in millimetres.
pub fn hausdorff(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    let d = surface_distances(a, b)?;
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    Ok(max(&d.a_to_b).max(max(&d.b_to_a)) * d.spacing)
}

/// Percentile Hausdorff: the larger of the two directed nearest-rank
/// percentiles. `percentile = 100` equals [`hausdorff`].
pub fn hausdorff_percentile(a: &BinaryMask, b: &BinaryMask, percentile: f64) -> Result<f64> {
    if !(percentile > 0.0 && percentile <= 100.0) {
        return Err(Error::InvalidInput(format!(
            "percentile must lie in (0, 100], got {percentile}"
        )));
    }
    let d = surface_distances(a, b)?;
    let rank = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        let idx = ((percentile / 100.0) * s.len() as f64).ceil() as usize;
        s[idx.clamp(1, s.len()) - 1]
    };
    Ok(rank(&d.a_to_b).max(rank(&d.b_to_a)) * d.spacing)
}

pub fn segmentation_report(predicted: &BinaryMask, truth: &BinaryMask) -> Result<SegmentationReport> {
    let d = surface_distances(predicted, truth)?;
    let n = (d.a_to_b.len() + d.b_to_a.len()) as f64;
    let asd = (d.a_to_b.iter().sum::<f64>() + d.b_to_a.iter().sum::<f64>()) / n * d.spacing;
    let hd = d
        .a_to_b
        .iter()
        .chain(&d.b_to_a)
        .copied()
        .fold(0.0, f64::max)
        * d.spacing;
    Ok(SegmentationReport {
        dice: dice(predicted, truth)?,
        asd_mm: asd,
        hd_mm: hd,
    })
}

pub fn angulation_error(predicted: &FittedLine, truth: &FittedLine) -> f64 {
    angle_between(predicted, truth)
}

/// Mean orthogonal distance of `points` to `truth_axis`, in millimetres.
pub fn displacement_error(points: &[Point2], truth_axis: &FittedLine, spacing: f64) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidInput(
            "displacement needs at least one point".into(),
        ));
    }
    let sum: f64 = points
        .iter()
        .map(|&p| point_to_line_distance(p, truth_axis))
        .sum();
    Ok(sum / points.len() as f64 * spacing)
}

pub fn axis_report(
    predicted: &FittedLine,
    control_points: &[Point2],
    truth: &FittedLine,
    spacing: f64,
) -> Result<AxisReport> {
    Ok(AxisReport {
        angulation_deg: angulation_error(predicted, truth),
        displacement_mm: displacement_error(control_points, truth, spacing)?,
    })
}
