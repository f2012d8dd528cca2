//! Synthetic long-bone phantoms with analytically known edges and axis.
//!
//! A phantom is a straight shaft between two edge lines, symmetric about
//! the axis through the image center, optionally widening towards a disk
//! at the joint end. The far end is pushed out of the image by the
//! truncation fraction. ROI segments follow each edge and keep a margin
//! from the blob, the far end cap and the image border.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{clip_segment, FittedLine};
use crate::mask::BinaryMask;
use crate::point::Point2;
use crate::roi::RoiSegment;

/// Clearance kept between ROI segments and any non-edge contour.
const ROI_MARGIN: f64 = 10.0;
const MIN_ROI_LENGTH: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub image_size: usize,
    /// Axis orientation in degrees (0° = +x, counterclockwise on screen).
    pub shaft_angle: f64,
    /// Shaft width at the image center, pixels.
    pub shaft_width: f64,
    /// Relative tilt between the two edges, degrees.
    pub convergence_angle: f64,
    pub truncation_fraction: f64,
    /// Radius of the joint-end disk; 0 disables it.
    pub end_blob_radius: f64,
    pub contour_noise_amp: f64,
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            image_size: 256,
            shaft_angle: 90.0,
            shaft_width: 40.0,
            convergence_angle: 0.0,
            truncation_fraction: 0.0,
            end_blob_radius: 36.0,
            contour_noise_amp: 0.0,
            seed: 0,
        }
    }
}

impl PhantomSpec {
    /// Default spec with orientation in [0°, 180°), truncation in [0, 0.4]
    /// and convergence in [0°, 5°] drawn from `seed`.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            shaft_angle: rng.gen_range(0.0..180.0),
            truncation_fraction: rng.gen_range(0.0..=0.4),
            convergence_angle: rng.gen_range(0.0..=5.0),
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidSpec(msg.into()));
        if self.image_size < 32 {
            return fail("image_size must be at least 32");
        }
        if !(4.0..f64::INFINITY).contains(&self.shaft_width) {
            return fail("shaft_width must be at least 4 px");
        }
        if !(0.0..=15.0).contains(&self.convergence_angle) {
            return fail("convergence_angle must lie in [0, 15] degrees");
        }
        if !(0.0..1.0).contains(&self.truncation_fraction) {
            return fail("truncation_fraction must lie in [0, 1)");
        }
        let finite = 0.0..f64::INFINITY;
        if !finite.contains(&self.end_blob_radius) || !finite.contains(&self.contour_noise_amp) {
            return fail("blob radius and noise amplitude must be non-negative");
        }
        if !self.shaft_angle.is_finite() {
            return fail("shaft_angle must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomTruth {
    pub spec: PhantomSpec,
    pub mask: BinaryMask,
    pub roi_anterior: RoiSegment,
    pub roi_posterior: RoiSegment,
    pub line_anterior: FittedLine,
    pub line_posterior: FittedLine,
    pub axis: FittedLine,
}

struct Layout {
    center: Point2,
    u: Point2,
    n: Point2,
    half: f64,
    slope: f64,
    s_far: f64,
    s_joint: f64,
}

impl Layout {
    fn new(spec: &PhantomSpec) -> Result<Self> {
        let size = spec.image_size as f64;
        let center = Point2::new(0.5 * size, 0.5 * size);
        let u = Point2::from_angle_deg(spec.shaft_angle);
        let reach = 0.5 * size / u.x.abs().max(u.y.abs());
        let length = 2.0 * reach - 16.0 - spec.end_blob_radius;
        let s_far = -reach + 10.0 - spec.truncation_fraction * length;
        let layout = Self {
            center,
            u,
            n: u.perp(),
            half: 0.5 * spec.shaft_width,
            slope: (0.5 * spec.convergence_angle).to_radians().tan(),
            s_far,
            s_joint: s_far + length,
        };
        if layout.half_width(s_far) < 2.0 {
            return Err(Error::InvalidSpec(
                "edges converge before the far end of the shaft".into(),
            ));
        }
        Ok(layout)
    }

    fn half_width(&self, s: f64) -> f64 {
        self.half + self.slope * s
    }

    /// Point on the anterior (`side = 1`) or posterior (`side = -1`) edge.
    fn edge_point(&self, s: f64, side: f64) -> Point2 {
        self.center + self.u * s + self.n * (side * self.half_width(s))
    }

    fn edge_line(&self, side: f64) -> Result<FittedLine> {
        FittedLine::new(
            self.center + self.n * (side * self.half),
            self.u + self.n * (side * self.slope),
        )
    }
}

pub fn generate(spec: &PhantomSpec) -> Result<PhantomTruth> {
    spec.validate()?;
    let layout = Layout::new(spec)?;
    let size = spec.image_size;
    let mut mask = BinaryMask::new(size, size)?;
    let blob_center = layout.center + layout.u * layout.s_joint;
    let blob_r2 = spec.end_blob_radius * spec.end_blob_radius;
    let edge_norm = (1.0 + layout.slope * layout.slope).sqrt();
    let noisy = spec.contour_noise_amp > 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let amp = spec.contour_noise_amp;

    for y in 0..size {
        for x in 0..size {
            let (jitter_a, jitter_p) = if noisy {
                (rng.gen_range(-amp..=amp), rng.gen_range(-amp..=amp))
            } else {
                (0.0, 0.0)
            };
            let p = Point2::pixel_center(x as i64, y as i64);
            let rel = p - layout.center;
            let (s, t) = (rel.dot(layout.u), rel.dot(layout.n));
            let h = layout.half_width(s);
            let in_shaft = s >= layout.s_far
                && s <= layout.s_joint
                && (t - h) / edge_norm + jitter_a <= 0.0
                && (-t - h) / edge_norm + jitter_p <= 0.0;
            let d = p - blob_center;
            let in_blob = spec.end_blob_radius > 0.0 && d.dot(d) <= blob_r2;
            if in_shaft || in_blob {
                mask.set(x, y, true);
            }
        }
    }
    if mask.is_empty() {
        return Err(Error::InvalidSpec("phantom shaft lies outside the image".into()));
    }

    let s_lo = layout.s_far + ROI_MARGIN;
    let s_hi = layout.s_joint - spec.end_blob_radius - ROI_MARGIN;
    let roi = |side: f64, label: &str| -> Result<RoiSegment> {
        if s_hi <= s_lo {
            return Err(Error::InvalidSpec("no straight shaft section left".into()));
        }
        inset_roi(
            layout.edge_point(s_lo, side),
            layout.edge_point(s_hi, side),
            size,
            label,
        )
    };

    Ok(PhantomTruth {
        spec: spec.clone(),
        mask,
        roi_anterior: roi(1.0, "anterior")?,
        roi_posterior: roi(-1.0, "posterior")?,
        line_anterior: layout.edge_line(1.0)?,
        line_posterior: layout.edge_line(-1.0)?,
        axis: FittedLine::new(layout.center, layout.u)?,
    })
}

/// Clips an edge section to the image inset by the ROI margin.
fn inset_roi(a: Point2, b: Point2, size: usize, label: &str) -> Result<RoiSegment> {
    let lo = Point2::new(ROI_MARGIN, ROI_MARGIN);
    let hi = Point2::new(size as f64 - ROI_MARGIN, size as f64 - ROI_MARGIN);
    match clip_segment(a, b, lo, hi) {
        Some((s, e)) if s.distance(e) >= MIN_ROI_LENGTH => RoiSegment::new(s, e, label),
        _ => Err(Error::InvalidSpec(format!(
            "visible {label} edge is shorter than {MIN_ROI_LENGTH} px"
        ))),
    }
}

/// Rotates a phantom about the image center: the mask by nearest-neighbour
/// resampling, lines and ROI segments analytically. ROI segments are
/// re-clipped to the inset image.
pub fn rotate(truth: &PhantomTruth, degrees: f64) -> Result<PhantomTruth> {
    let size = truth.spec.image_size;
    let center = Point2::new(0.5 * size as f64, 0.5 * size as f64);
    let src = &truth.mask;
    let mut mask = BinaryMask::new(size, size)?.with_spacing(src.spacing())?;
    for y in 0..size {
        for x in 0..size {
            let q = Point2::pixel_center(x as i64, y as i64).rotated_about(center, -degrees);
            if src.get_or_background(q.x.floor() as i64, q.y.floor() as i64) {
                mask.set(x, y, true);
            }
        }
    }
    let rot = |p: Point2| p.rotated_about(center, degrees);
    let rot_line = |l: &FittedLine| {
        FittedLine::new(rot(l.centroid()), l.direction().rotated_about(Point2::default(), degrees))
    };
    let rot_roi = |r: &RoiSegment| inset_roi(rot(r.start), rot(r.end), size, &r.label);
    let mut spec = truth.spec.clone();
    spec.shaft_angle += degrees;
    Ok(PhantomTruth {
        spec,
        mask,
        roi_anterior: rot_roi(&truth.roi_anterior)?,
        roi_posterior: rot_roi(&truth.roi_posterior)?,
        line_anterior: rot_line(&truth.line_anterior)?,
        line_posterior: rot_line(&truth.line_posterior)?,
        axis: rot_line(&truth.axis)?,
    })
}
