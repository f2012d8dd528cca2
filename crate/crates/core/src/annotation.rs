//! labelme-style annotation records.
//!
//! ```json
//! { "imageWidth": 256, "imageHeight": 256, "spacing_mm_per_px": 0.2,
//!   "shapes": [ { "label": "femur", "shape_type": "polygon", "points": [[x, y], ...] },
//!               { "label": "femur_ant", "shape_type": "line", "points": [[x, y], [x, y]] } ] }
//! ```
//!
//! Labels follow `<bone>`, `<bone>_ant`, `<bone>_post`, `<bone>_axis`.
//! Unknown top-level and per-shape fields written by labelme are ignored.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mask::BinaryMask;
use crate::point::Point2;
use crate::roi::RoiSegment;

/// True diameter of the calibration sphere, millimetres.
pub const CALIBRATION_SPHERE_MM: f64 = 3.0;
/// Label of a line shape spanning the calibration sphere's diameter.
pub const CALIBRATION_LABEL: &str = "calibration_sphere";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnnotationError {
    #[error("malformed annotation at `{path}`: {message}")]
    Json { path: String, message: String },
    #[error("invalid annotation at `{path}`: {message}")]
    Invalid { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Polygon,
    Line,
    Points,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub label: String,
    #[serde(rename = "shape_type")]
    pub kind: ShapeKind,
    #[serde(rename = "points")]
    pub coords: Vec<Point2>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotationRecord {
    #[serde(rename = "imageWidth")]
    pub image_width: usize,
    #[serde(rename = "imageHeight")]
    pub image_height: usize,
    #[serde(rename = "spacing_mm_per_px")]
    pub spacing: f64,
    pub shapes: Vec<Shape>,
}

#[derive(Deserialize)]
struct RawRecord {
    #[serde(rename = "imageWidth")]
    image_width: usize,
    #[serde(rename = "imageHeight")]
    image_height: usize,
    #[serde(rename = "spacing_mm_per_px", default)]
    spacing: Option<f64>,
    shapes: Vec<Shape>,
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> AnnotationError {
    AnnotationError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

pub fn parse_annotation(text: &str) -> Result<AnnotationRecord, AnnotationError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawRecord = serde_path_to_error::deserialize(de).map_err(|e| AnnotationError::Json {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    if raw.image_width == 0 || raw.image_height == 0 {
        return Err(invalid("imageWidth", "image dimensions must be positive"));
    }
    let mut labels = HashSet::new();
    for (i, shape) in raw.shapes.iter().enumerate() {
        let path = format!("shapes[{i}]");
        if shape.label.is_empty() {
            return Err(invalid(format!("{path}.label"), "label must not be empty"));
        }
        if !labels.insert(shape.label.as_str()) {
            return Err(invalid(
                format!("{path}.label"),
                format!("duplicate label `{}`", shape.label),
            ));
        }
        let n = shape.coords.len();
        let ok = match shape.kind {
            ShapeKind::Line => n == 2,
            ShapeKind::Polygon => n >= 3,
            ShapeKind::Points => n >= 1,
        };
        if !ok {
            return Err(invalid(
                format!("{path}.points"),
                format!("{:?} shape has {n} points", shape.kind),
            ));
        }
        if let Some(j) = shape.coords.iter().position(|p| !p.is_finite()) {
            return Err(invalid(format!("{path}.points[{j}]"), "coordinate is not finite"));
        }
        if shape.kind == ShapeKind::Line && shape.coords[0] == shape.coords[1] {
            return Err(invalid(format!("{path}.points"), "line endpoints coincide"));
        }
    }
    let mut record = AnnotationRecord {
        image_width: raw.image_width,
        image_height: raw.image_height,
        spacing: 1.0,
        shapes: raw.shapes,
    };
    record.spacing = match raw.spacing {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(s) => {
            return Err(invalid(
                "spacing_mm_per_px",
                format!("spacing must be positive, got {s}"),
            ))
        }
        None => record.calibrated_spacing().unwrap_or(1.0),
    };
    Ok(record)
}

/// mm/px from the annotated pixel diameter of the calibration sphere.
pub fn spacing_from_calibration(diameter_px: f64) -> Option<f64> {
    (diameter_px > 0.0 && diameter_px.is_finite()).then(|| CALIBRATION_SPHERE_MM / diameter_px)
}

impl AnnotationRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("annotation records always serialize")
    }

    pub fn shape(&self, label: &str) -> Option<&Shape> {
        self.shapes.iter().find(|s| s.label == label)
    }

    /// Endpoints of the line shape `label`.
    pub fn line(&self, label: &str) -> Option<(Point2, Point2)> {
        self.shape(label)
            .filter(|s| s.kind == ShapeKind::Line)
            .map(|s| (s.coords[0], s.coords[1]))
    }

    pub fn roi_segment(&self, label: &str) -> Option<RoiSegment> {
        let (a, b) = self.line(label)?;
        RoiSegment::new(a, b, label).ok()
    }

    /// Spacing implied by a `calibration_sphere` line shape, if present.
    pub fn calibrated_spacing(&self) -> Option<f64> {
        let (a, b) = self.line(CALIBRATION_LABEL)?;
        spacing_from_calibration(a.distance(b))
    }

    /// Rasterizes the polygon `label` at the record's image size and spacing.
    pub fn polygon_mask(&self, label: &str) -> Option<BinaryMask> {
        let shape = self.shape(label).filter(|s| s.kind == ShapeKind::Polygon)?;
        let mask = rasterize_polygon(&shape.coords, self.image_width, self.image_height);
        mask.with_spacing(self.spacing).ok()
    }
}

/// Even-odd fill: a pixel is foreground when its center is inside `polygon`.
///
/// # Panics
/// If `width` or `height` is zero.
pub fn rasterize_polygon(polygon: &[Point2], width: usize, height: usize) -> BinaryMask {
    let mut mask = BinaryMask::new(width, height).expect("positive raster dimensions");
    let n = polygon.len();
    let mut crossings = Vec::new();
    for y in 0..height {
        let yc = y as f64 + 0.5;
        crossings.clear();
        for i in 0..n {
            let (a, b) = (polygon[i], polygon[(i + 1) % n]);
            if (a.y > yc) != (b.y > yc) {
                crossings.push((b.x - a.x) * (yc - a.y) / (b.y - a.y) + a.x);
            }
        }
        crossings.sort_by(f64::total_cmp);
        for x in 0..width {
            let xc = x as f64 + 0.5;
            let right = crossings.len() - crossings.partition_point(|&c| c <= xc);
            if right % 2 == 1 {
                mask.set(x, y, true);
            }
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const VALID: &str = r#"{
        "version": "4.5.6", "flags": {}, "imagePath": "x.png", "imageData": null,
        "imageWidth": 64, "imageHeight": 48, "spacing_mm_per_px": 0.25,
        "shapes": [
            {"label": "femur", "shape_type": "polygon", "points": [[2, 2], [30, 2], [30, 40], [2, 40]], "group_id": null},
            {"label": "femur_ant", "shape_type": "line", "points": [[3, 5], [3, 35]]},
            {"label": "femur_post", "shape_type": "line", "points": [[29, 5], [29, 35]]}
        ]
    }"#;

    fn brute_inside(poly: &[Point2], p: Point2) -> bool {
        let mut inside = false;
        let n = poly.len();
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
                inside = !inside;
            }
        }
        inside
    }

    #[test]
    fn accepts_labelme_record() {
        let r = parse_annotation(VALID).unwrap();
        assert_eq!((r.image_width, r.image_height, r.spacing), (64, 48, 0.25));
        assert_eq!(r.shapes.len(), 3);
        assert_eq!(r.line("femur_ant"), Some(((3.0, 5.0).into(), (3.0, 35.0).into())));
        assert!(r.roi_segment("femur_post").is_some());
        assert!(r.line("femur").is_none());
        assert_eq!(r.polygon_mask("femur").unwrap().count(), 28 * 38);
    }

    #[test]
    fn rejects_three_point_line() {
        let text = VALID.replace("[[3, 5], [3, 35]]", "[[3, 5], [3, 20], [3, 35]]");
        match parse_annotation(&text) {
            Err(AnnotationError::Invalid { path, .. }) => assert_eq!(path, "shapes[1].points"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_json_paths() {
        let text = VALID.replace("\"shape_type\": \"line\"", "\"shape_type\": \"circle\"");
        match parse_annotation(&text) {
            Err(AnnotationError::Json { path, .. }) => assert_eq!(path, "shapes[1].shape_type"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_annotation("{"), Err(AnnotationError::Json { .. })));
        let dup = VALID.replace("femur_post", "femur_ant");
        assert!(matches!(parse_annotation(&dup), Err(AnnotationError::Invalid { .. })));
        let two_pt_poly = VALID.replace("[[2, 2], [30, 2], [30, 40], [2, 40]]", "[[2, 2], [30, 2]]");
        assert!(parse_annotation(&two_pt_poly).is_err());
    }

    #[test]
    fn spacing_from_calibration_sphere() {
        let text = r#"{"imageWidth": 8, "imageHeight": 8, "shapes": [
            {"label": "calibration_sphere", "shape_type": "line", "points": [[1, 1], [1, 16]]}]}"#;
        assert_eq!(parse_annotation(text).unwrap().spacing, 0.2);
        let none = r#"{"imageWidth": 8, "imageHeight": 8, "shapes": []}"#;
        assert_eq!(parse_annotation(none).unwrap().spacing, 1.0);
        assert_eq!(spacing_from_calibration(0.0), None);
    }

    #[test]
    fn rectangle_rasterization_counts_pixel_centers() {
        let rect: Vec<Point2> = [(2.0, 2.0), (12.0, 2.0), (12.0, 8.0), (2.0, 8.0)]
            .iter()
            .map(|&p| p.into())
            .collect();
        let m = rasterize_polygon(&rect, 20, 20);
        let brute = (0..20)
            .flat_map(|y| (0..20).map(move |x| (x, y)))
            .filter(|&(x, y)| brute_inside(&rect, Point2::pixel_center(x, y)))
            .count();
        assert_eq!(m.count(), 60);
        assert_eq!(brute, 60);
    }

    fn arb_record() -> impl Strategy<Value = AnnotationRecord> {
        let pt = (-10.0..300.0f64, -10.0..300.0f64).prop_map(Point2::from);
        let shape = (
            prop_oneof![Just(ShapeKind::Line), Just(ShapeKind::Polygon), Just(ShapeKind::Points)],
            proptest::collection::vec(pt, 3..8),
        );
        (
            1usize..512,
            1usize..512,
            0.01..2.0f64,
            proptest::collection::vec(shape, 0..5),
        )
            .prop_map(|(w, h, spacing, shapes)| AnnotationRecord {
                image_width: w,
                image_height: h,
                spacing,
                shapes: shapes
                    .into_iter()
                    .enumerate()
                    .map(|(i, (kind, mut coords))| {
                        if kind == ShapeKind::Line {
                            coords.truncate(2);
                        }
                        Shape { label: format!("s{i}"), kind, coords }
                    })
                    .filter(|s| s.kind != ShapeKind::Line || s.coords[0] != s.coords[1])
                    .collect(),
            })
    }

    proptest! {
        #[test]
        fn serialize_parse_roundtrip(record in arb_record()) {
            prop_assert_eq!(parse_annotation(&record.to_json()).unwrap(), record);
        }

        #[test]
        fn convex_polygon_matches_brute_force(
            cx in 5.0..45.0f64, cy in 5.0..45.0f64,
            r in 2.0..25.0f64, k in 3usize..9,
            phase in 0.0..360.0f64,
        ) {
            let poly: Vec<Point2> = (0..k)
                .map(|i| {
                    let a = (phase + 360.0 * i as f64 / k as f64).to_radians();
                    Point2::new(cx + r * a.cos(), cy + r * a.sin())
                })
                .collect();
            let m = rasterize_polygon(&poly, 50, 50);
            for y in 0..50 {
                for x in 0..50 {
                    let inside = brute_inside(&poly, Point2::pixel_center(x as i64, y as i64));
                    prop_assert_eq!(m.get(x, y), inside);
                }
            }
        }
    }
}
