//! End-to-end axis detection: contour → ROI masking → line fits → two-line axis.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::geometry::{bound_segment, construct_axis_with, fit_major_axis, AxisResult, BoundedSegment, Projection};
use crate::mask::{extract_contour, BinaryMask, ContourSet};
use crate::roi::{mask_contour, rasterize_roi, LikelihoodMap, RoiParams, RoiSegment};

/// A subdivision distance, absolute or relative to the subdivided segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    Fraction(f64),
    Pixels(f64),
}

impl Distance {
    pub fn resolve(self, segment_length: f64) -> f64 {
        match self {
            Distance::Fraction(f) => f * segment_length,
            Distance::Pixels(px) => px,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubdivideSide {
    #[default]
    FirstRoi,
    SecondRoi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    pub roi_params: RoiParams,
    pub d1: Distance,
    pub d2: Distance,
    pub min_support_points: usize,
    pub subdivide_side: SubdivideSide,
    pub projection: Projection,
    /// Auxiliary lines closer than this (mean cross-connection length) are
    /// treated as the same edge.
    pub min_separation_px: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            roi_params: RoiParams::default(),
            d1: Distance::Fraction(0.15),
            d2: Distance::Fraction(0.15),
            min_support_points: 10,
            subdivide_side: SubdivideSide::FirstRoi,
            projection: Projection::Bisector,
            min_separation_px: 2.0,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<(), Error> {
        self.roi_params.validate()?;
        if self.min_support_points < 2 {
            return Err(Error::InvalidInput("min_support_points must be at least 2".into()));
        }
        for d in [self.d1, self.d2] {
            match d {
                Distance::Fraction(f) if !(f > 0.0 && f < 0.5) => {
                    return Err(Error::InvalidInput(format!(
                        "fractional distance must lie in (0, 0.5), got {f}"
                    )))
                }
                Distance::Pixels(px) if !(px >= 0.0 && px.is_finite()) => {
                    return Err(Error::InvalidInput(format!(
                        "pixel distance must be non-negative, got {px}"
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Where a relevant contour region comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum RoiSource {
    Segment(RoiSegment),
    /// A predicted likelihood map; renormalized to peak 1 before masking.
    Map(LikelihoodMap),
}

impl From<RoiSegment> for RoiSource {
    fn from(s: RoiSegment) -> Self {
        RoiSource::Segment(s)
    }
}

impl From<LikelihoodMap> for RoiSource {
    fn from(m: LikelihoodMap) -> Self {
        RoiSource::Map(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Contour,
    MaskFirst,
    MaskSecond,
    FitFirst,
    FitSecond,
    BoundFirst,
    BoundSecond,
    Construct,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Contour => "contour",
            Stage::MaskFirst => "mask_first_roi",
            Stage::MaskSecond => "mask_second_roi",
            Stage::FitFirst => "fit_first_roi",
            Stage::FitSecond => "fit_second_roi",
            Stage::BoundFirst => "bound_first_roi",
            Stage::BoundSecond => "bound_second_roi",
            Stage::Construct => "construct_axis",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{stage}: {source}")]
pub struct DetectionError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl DetectionError {
    fn at(stage: Stage) -> impl FnOnce(Error) -> Self {
        move |source| Self { stage, source }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Warning {
    /// A projected point fell beyond the opposing segment's extent.
    ProjectionOutsideOpposing,
    /// A likelihood map had a peak below 1 and was rescaled.
    LikelihoodRenormalized,
}

impl Warning {
    pub fn code(&self) -> &'static str {
        match self {
            Warning::ProjectionOutsideOpposing => "projection_outside_opposing",
            Warning::LikelihoodRenormalized => "likelihood_renormalized",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutcome {
    pub axis_result: AxisResult,
    /// Auxiliary segments in ROI argument order.
    pub segments: [BoundedSegment; 2],
    pub support_counts: [usize; 2],
    pub contour: ContourSet,
    pub support: [ContourSet; 2],
    pub warnings: Vec<Warning>,
}

fn masked_support(
    contour: &ContourSet,
    source: &RoiSource,
    mask: &BinaryMask,
    config: &DetectionConfig,
    warnings: &mut Vec<Warning>,
) -> Result<ContourSet, Error> {
    let map = match source {
        RoiSource::Segment(seg) => {
            rasterize_roi(seg, &config.roi_params, mask.width(), mask.height())?
        }
        RoiSource::Map(map) => {
            if map.width() != mask.width() || map.height() != mask.height() {
                return Err(Error::InvalidInput(format!(
                    "likelihood map is {}x{}, mask is {}x{}",
                    map.width(),
                    map.height(),
                    mask.width(),
                    mask.height()
                )));
            }
            let peak = map.peak();
            if peak > 0.0 && peak < 1.0 {
                warnings.push(Warning::LikelihoodRenormalized);
            }
            map.clone().renormalized()
        }
    };
    let support = mask_contour(contour, &map, &config.roi_params)?;
    if support.len() < config.min_support_points {
        return Err(Error::InsufficientSupport {
            found: support.len(),
            required: config.min_support_points,
        });
    }
    Ok(support)
}

pub fn detect_axis(
    mask: &BinaryMask,
    roi_a: &RoiSource,
    roi_b: &RoiSource,
    config: &DetectionConfig,
) -> Result<DetectionOutcome, DetectionError> {
    config.validate().map_err(DetectionError::at(Stage::Config))?;
    if roi_a == roi_b {
        return Err(DetectionError::at(Stage::Config)(Error::InvalidInput(
            "both ROIs are identical".into(),
        )));
    }
    let contour = extract_contour(mask);
    if contour.is_empty() {
        return Err(DetectionError::at(Stage::Contour)(Error::InsufficientSupport {
            found: 0,
            required: config.min_support_points,
        }));
    }
    let mut warnings = Vec::new();
    let support_a = masked_support(&contour, roi_a, mask, config, &mut warnings)
        .map_err(DetectionError::at(Stage::MaskFirst))?;
    let support_b = masked_support(&contour, roi_b, mask, config, &mut warnings)
        .map_err(DetectionError::at(Stage::MaskSecond))?;
    let (pts_a, pts_b) = (support_a.centers(), support_b.centers());
    let line_a = fit_major_axis(&pts_a).map_err(DetectionError::at(Stage::FitFirst))?;
    let line_b = fit_major_axis(&pts_b).map_err(DetectionError::at(Stage::FitSecond))?;
    let seg_a = bound_segment(&line_a, &pts_a).map_err(DetectionError::at(Stage::BoundFirst))?;
    let seg_b = bound_segment(&line_b, &pts_b).map_err(DetectionError::at(Stage::BoundSecond))?;

    let (sub, opp) = match config.subdivide_side {
        SubdivideSide::FirstRoi => (&seg_a, &seg_b),
        SubdivideSide::SecondRoi => (&seg_b, &seg_a),
    };
    let length = sub.length();
    let (d1, d2) = (config.d1.resolve(length), config.d2.resolve(length));
    let construct = DetectionError::at(Stage::Construct);
    let axis_result = match construct_axis_with(sub, opp, d1, d2, config.projection) {
        Ok(r) => r,
        Err(e) => return Err(construct(e)),
    };
    let separation = axis_result.mean_separation();
    if separation < config.min_separation_px {
        return Err(construct(Error::DegenerateAxis(format!(
            "auxiliary lines are {separation:.3} px apart, below {} px; both ROIs likely cover the same edge",
            config.min_separation_px
        ))));
    }
    if axis_result.projection_outside_opposing() {
        warnings.push(Warning::ProjectionOutsideOpposing);
    }
    Ok(DetectionOutcome {
        axis_result,
        segments: [seg_a, seg_b],
        support_counts: [support_a.len(), support_b.len()],
        contour,
        support: [support_a, support_b],
        warnings,
    })
}
