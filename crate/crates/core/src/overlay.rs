//! Visual overlay of a detection on top of a mask or radiograph.

use image::{GrayImage, Luma, Rgb, RgbImage};
use imageproc::drawing::{draw_filled_circle_mut, draw_line_segment_mut};

use crate::geometry::clip_segment;
use crate::mask::{BinaryMask, ContourSet};
use crate::pipeline::DetectionOutcome;
use crate::point::Point2;

#[derive(Debug, Clone, PartialEq)]
pub struct OverlayStyle {
    pub contour: Rgb<u8>,
    pub support: [Rgb<u8>; 2],
    pub auxiliary: Rgb<u8>,
    pub connection: Rgb<u8>,
    pub axis: Rgb<u8>,
    pub midpoint: Rgb<u8>,
    pub line_width: u32,
    pub point_radius: u32,
}

impl Default for OverlayStyle {
    fn default() -> Self {
        Self {
            contour: Rgb([90, 90, 90]),
            support: [Rgb([255, 140, 0]), Rgb([0, 170, 255])],
            auxiliary: Rgb([255, 255, 0]),
            connection: Rgb([180, 180, 255]),
            axis: Rgb([255, 0, 0]),
            midpoint: Rgb([0, 255, 0]),
            line_width: 1,
            point_radius: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlayWarning {
    /// The axis does not cross the image; no axis layer was drawn.
    AxisOutsideImage,
}

/// Foreground at gray level 64 on black.
pub fn mask_backdrop(mask: &BinaryMask) -> GrayImage {
    let samples = mask.pixels().iter().map(|&p| if p { 64 } else { 0 }).collect();
    GrayImage::from_raw(mask.width() as u32, mask.height() as u32, samples)
        .expect("mask dimensions match")
}

fn draw_points(img: &mut RgbImage, points: &ContourSet, color: Rgb<u8>) {
    for &(x, y) in points.points() {
        if (x as u32) < img.width() && (y as u32) < img.height() {
            img.put_pixel(x as u32, y as u32, color);
        }
    }
}

fn draw_line(img: &mut RgbImage, a: Point2, b: Point2, color: Rgb<u8>, width: u32) {
    let n = (b - a).normalized().map(Point2::perp).unwrap_or_default();
    let w = width.max(1) as f64;
    for k in 0..width.max(1) {
        let off = n * (k as f64 - 0.5 * (w - 1.0));
        let (p, q) = (a + off, b + off);
        draw_line_segment_mut(img, (p.x as f32, p.y as f32), (q.x as f32, q.y as f32), color);
    }
}

fn draw_dot(img: &mut RgbImage, p: Point2, color: Rgb<u8>, radius: u32) {
    draw_filled_circle_mut(img, (p.x.floor() as i32, p.y.floor() as i32), radius.max(1) as i32, color);
}

/// Renders contour, ROI support, auxiliary segments, cross-connections,
/// midpoints and the axis clipped to the image.
pub fn render_overlay(
    base: &GrayImage,
    outcome: &DetectionOutcome,
    style: &OverlayStyle,
) -> (RgbImage, Vec<OverlayWarning>) {
    let mut img = RgbImage::from_fn(base.width(), base.height(), |x, y| {
        let Luma([v]) = *base.get_pixel(x, y);
        Rgb([v, v, v])
    });
    let mut warnings = Vec::new();
    draw_points(&mut img, &outcome.contour, style.contour);
    for (support, &color) in outcome.support.iter().zip(&style.support) {
        draw_points(&mut img, support, color);
    }
    let r = &outcome.axis_result;
    for (p, q) in r.samples.iter().zip(&r.projections) {
        draw_line(&mut img, *p, *q, style.connection, style.line_width);
    }
    for seg in &outcome.segments {
        draw_line(&mut img, seg.start, seg.end, style.auxiliary, style.line_width);
        draw_dot(&mut img, seg.start, style.auxiliary, style.point_radius);
        draw_dot(&mut img, seg.end, style.auxiliary, style.point_radius);
    }
    for &p in r.samples.iter().chain(&r.projections) {
        draw_dot(&mut img, p, style.connection, style.point_radius);
    }
    let (w, h) = (base.width() as f64, base.height() as f64);
    let reach = 2.0 * (w + h);
    let axis = &r.axis;
    match clip_segment(
        axis.point_at(-reach),
        axis.point_at(reach),
        Point2::new(0.0, 0.0),
        Point2::new(w, h),
    ) {
        Some((a, b)) => draw_line(&mut img, a, b, style.axis, style.line_width),
        None => warnings.push(OverlayWarning::AxisOutsideImage),
    }
    draw_dot(&mut img, r.m1, style.midpoint, style.point_radius);
    draw_dot(&mut img, r.m2, style.midpoint, style.point_radius);
    (img, warnings)
}
