//! Likelihood encoding of a relevant-contour region around a line segment.
//!
//! The field is a peak-normalized Gaussian of the orthogonal distance to the
//! segment's line times a Gaussian of the distance beyond the nearest
//! endpoint (zero along the interior), truncated in both directions. The
//! resulting support is a capsule around the segment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::ContourSet;
use crate::point::Point2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiSegment {
    pub start: Point2,
    pub end: Point2,
    #[serde(default)]
    pub label: String,
}

impl RoiSegment {
    pub fn new(start: Point2, end: Point2, label: impl Into<String>) -> Result<Self> {
        let seg = Self {
            start,
            end,
            label: label.into(),
        };
        seg.validate()?;
        Ok(seg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.end.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "ROI segment '{}' has non-finite endpoints",
                self.label
            )));
        }
        if self.length() <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "ROI segment '{}' has zero length",
                self.label
            )));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    /// `(d_perp, d_par)`: distance to the infinite line and distance of the
    /// projection beyond the nearest endpoint (0 inside the segment).
    pub fn distances(&self, p: Point2) -> (f64, f64) {
        let len = self.length();
        let dir = (self.end - self.start) / len;
        let rel = p - self.start;
        let t = rel.dot(dir);
        let perp = rel.cross(dir).abs();
        let par = if t < 0.0 {
            -t
        } else if t > len {
            t - len
        } else {
            0.0
        };
        (perp, par)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiParams {
    /// Standard deviation in pixels.
    pub sigma: f64,
    /// Support cut-off, in multiples of sigma.
    pub truncation: f64,
    /// Contour masking threshold, in multiples of sigma.
    pub mask_threshold: f64,
}

impl Default for RoiParams {
    fn default() -> Self {
        Self {
            sigma: 6.0,
            truncation: 3.0,
            mask_threshold: 1.0,
        }
    }
}

impl RoiParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma > 0.0
            && self.sigma.is_finite()
            && self.mask_threshold > 0.0
            && self.truncation >= self.mask_threshold
            && self.truncation.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "ROI params require sigma > 0 and truncation >= threshold > 0, got {self:?}"
            )))
        }
    }

    /// Likelihood at the masking threshold, `exp(-t^2 / 2)`.
    pub fn threshold_value(&self) -> f64 {
        (-0.5 * self.mask_threshold * self.mask_threshold).exp()
    }

    /// Likelihood for the given distances to a segment.
    pub fn likelihood(&self, d_perp: f64, d_par: f64) -> f64 {
        let cut = self.truncation * self.sigma;
        if d_perp > cut || d_par > cut {
            return 0.0;
        }
        (-(d_perp * d_perp + d_par * d_par) / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// Likelihood of `p` for `segment`, evaluated in continuous space.
pub fn likelihood_at(segment: &RoiSegment, params: &RoiParams, p: Point2) -> f64 {
    let (perp, par) = segment.distances(p);
    params.likelihood(perp, par)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl LikelihoodMap {
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "likelihood map of {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidInput(
                "likelihood values must lie in [0, 1]".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Decodes 8-bit samples (`v / 255`) and rescales so the peak is 1.
    pub fn from_samples(width: usize, height: usize, samples: &[u8]) -> Result<Self> {
        let values = samples.iter().map(|&s| f64::from(s) / 255.0).collect();
        Ok(Self::from_values(width, height, values)?.renormalized())
    }

    /// `round(255 * value)` per pixel.
    pub fn to_samples(&self) -> Vec<u8> {
        self.values
            .iter()
            .map(|v| (255.0 * v).round() as u8)
            .collect()
    }

    /// Rescaled so the maximum value is 1; an all-zero map is returned unchanged.
    pub fn renormalized(mut self) -> Self {
        let peak = self.peak();
        if peak > 0.0 && peak != 1.0 {
            for v in &mut self.values {
                *v = (*v / peak).min(1.0);
            }
        }
        self
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

pub fn rasterize_roi(
    segment: &RoiSegment,
    params: &RoiParams,
    width: usize,
    height: usize,
) -> Result<LikelihoodMap> {
    segment.validate()?;
    params.validate()?;
    if width == 0 || height == 0 {
        return Err(Error::InvalidInput("ROI raster must be non-empty".into()));
    }
    let values = (0..height)
        .flat_map(|y| (0..width).map(move |x| (x, y)))
        .map(|(x, y)| likelihood_at(segment, params, Point2::pixel_center(x as i64, y as i64)))
        .collect();
    Ok(LikelihoodMap {
        width,
        height,
        values,
    })
}

/// Keeps contour points whose likelihood is at least the threshold value.
pub fn mask_contour(
    contour: &ContourSet,
    roi: &LikelihoodMap,
    params: &RoiParams,
) -> Result<ContourSet> {
    if let Some(&(x, y)) = contour
        .points()
        .iter()
        .find(|&&(x, y)| x >= roi.width || y >= roi.height)
    {
        return Err(Error::InvalidInput(format!(
            "contour point ({x}, {y}) outside {}x{} likelihood map",
            roi.width, roi.height
        )));
    }
    let threshold = params.threshold_value();
    let mut out = contour.clone();
    out.retain(|(x, y)| roi.get(x, y) >= threshold);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn horizontal(y: f64, x0: f64, x1: f64) -> RoiSegment {
        RoiSegment::new(Point2::new(x0, y), Point2::new(x1, y), "t").unwrap()
    }

    #[test]
    fn degenerate_segment_is_rejected() {
        let p = Point2::new(3.0, 3.0);
        assert!(RoiSegment::new(p, p, "x").is_err());
        let seg = RoiSegment {
            start: p,
            end: p,
            label: String::new(),
        };
        assert!(rasterize_roi(&seg, &RoiParams::default(), 8, 8).is_err());
    }

    #[test]
    fn closed_form_values() {
        let seg = horizontal(10.0, 0.0, 20.0);
        let params = RoiParams::default();
        assert_eq!(likelihood_at(&seg, &params, Point2::new(7.0, 10.0)), 1.0);
        let v = likelihood_at(&seg, &params, Point2::new(7.0, 16.0));
        assert!((v - (-0.5f64).exp()).abs() < 1e-12);
        assert_eq!(likelihood_at(&seg, &params, Point2::new(7.0, 28.5)), 0.0);
        // beyond the end along the line
        assert_eq!(likelihood_at(&seg, &params, Point2::new(38.5, 10.0)), 0.0);
        let v = likelihood_at(&seg, &params, Point2::new(26.0, 10.0));
        assert!((v - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn raster_column_support_is_37_px() {
        let seg = horizontal(40.5, 10.0, 70.0);
        let map = rasterize_roi(&seg, &RoiParams::default(), 80, 80).unwrap();
        let support = (0..80).filter(|&y| map.get(40, y) > 0.0).count();
        assert_eq!(support, 37);
        assert_eq!(map.peak(), 1.0);
    }

    #[test]
    fn mask_contour_horizontal_edge() {
        // straight contour row at y=13 (center 13.5), ROI 3 px above at y=10.5, x in [20, 60]
        let seg = horizontal(10.5, 20.0, 60.0);
        let params = RoiParams::default();
        let map = rasterize_roi(&seg, &params, 80, 30).unwrap();
        let contour = ContourSet::from_pixels((0..80).map(|x| (x, 13)));
        let kept = mask_contour(&contour, &map, &params).unwrap();
        // d_par^2 <= 36 - 9  =>  d_par <= 5.196; centers x+0.5 in [20-5.196, 60+5.196]
        let expect: Vec<_> = (0..80usize)
            .filter(|&x| {
                let c = x as f64 + 0.5;
                let par = if c < 20.0 { 20.0 - c } else if c > 60.0 { c - 60.0 } else { 0.0 };
                par * par <= 27.0
            })
            .map(|x| (x, 13))
            .collect();
        assert_eq!(kept.points(), expect.as_slice());
        assert_eq!(kept.points().first(), Some(&(15, 13)));
        assert_eq!(kept.points().last(), Some(&(64, 13)));
    }

    #[test]
    fn mask_contour_keeps_peak_and_drops_zero() {
        let values = vec![1.0, 0.0, 0.7, 0.5];
        let map = LikelihoodMap::from_values(2, 2, values).unwrap();
        let contour = ContourSet::from_pixels([(0, 0), (1, 0), (0, 1), (1, 1)]);
        let kept = mask_contour(&contour, &map, &RoiParams::default()).unwrap();
        assert_eq!(kept.points(), &[(0, 0), (0, 1)]);
        let out_of_range = ContourSet::from_pixels([(2, 0)]);
        assert!(mask_contour(&out_of_range, &map, &RoiParams::default()).is_err());
    }

    #[test]
    fn params_validation() {
        let bad = RoiParams {
            truncation: 0.5,
            ..RoiParams::default()
        };
        assert!(bad.validate().is_err());
        assert!(RoiParams { sigma: 0.0, ..RoiParams::default() }.validate().is_err());
    }

    #[test]
    fn sample_roundtrip_renormalizes() {
        let map = LikelihoodMap::from_samples(2, 1, &[0, 128]).unwrap();
        assert_eq!(map.values(), &[0.0, 1.0]);
        assert!(LikelihoodMap::from_values(1, 1, vec![1.5]).is_err());
    }

    proptest! {
        #[test]
        fn one_sigma_mask_is_disc_test(px in -30.0..90.0f64, py in -30.0..60.0f64) {
            let seg = horizontal(10.0, 10.0, 50.0);
            let params = RoiParams::default();
            let (perp, par) = seg.distances(Point2::new(px, py));
            let passes = likelihood_at(&seg, &params, Point2::new(px, py)) >= params.threshold_value();
            prop_assert_eq!(passes, perp * perp + par * par <= 36.0);
        }

        #[test]
        fn rigid_motion_invariance(
            ax in -50.0..50.0f64, ay in -50.0..50.0f64,
            bx in -50.0..50.0f64, by in -50.0..50.0f64,
            px in -80.0..80.0f64, py in -80.0..80.0f64,
            angle in -180.0..180.0f64, tx in -100.0..100.0f64, ty in -100.0..100.0f64,
        ) {
            let (a, b, p) = (Point2::new(ax, ay), Point2::new(bx, by), Point2::new(px, py));
            prop_assume!(a.distance(b) > 1e-3);
            let params = RoiParams::default();
            let seg = RoiSegment::new(a, b, "").unwrap();
            let o = Point2::default();
            let t = Point2::new(tx, ty);
            let moved = RoiSegment::new(a.rotated_about(o, angle) + t, b.rotated_about(o, angle) + t, "").unwrap();
            let v0 = likelihood_at(&seg, &params, p);
            let v1 = likelihood_at(&moved, &params, p.rotated_about(o, angle) + t);
            prop_assert!((v0 - v1).abs() <= 1e-9);
        }

        #[test]
        fn symmetric_and_monotone(d1 in 0.0..25.0f64, d2 in 0.0..25.0f64, e in 0.0..5.0f64) {
            let params = RoiParams::default();
            prop_assert!(params.likelihood(d1 + e, d2) <= params.likelihood(d1, d2));
            prop_assert!(params.likelihood(d1, d2 + e) <= params.likelihood(d1, d2));
            // reflections across the line and across the perpendicular bisector
            let seg = horizontal(0.0, -20.0, 20.0);
            let v = likelihood_at(&seg, &params, Point2::new(d1 + 15.0, d2));
            prop_assert_eq!(v, likelihood_at(&seg, &params, Point2::new(d1 + 15.0, -d2)));
            prop_assert!((v - likelihood_at(&seg, &params, Point2::new(-(d1 + 15.0), d2))).abs() < 1e-12);
        }
    }
}
