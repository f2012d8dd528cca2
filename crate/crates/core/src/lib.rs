//! Shaft-axis detection for long bones from a binary segmentation mask and
//! two ROI line segments marking the straight cortex sections.
//!
//! The detection path is:
//!
//! 1. [`mask::extract_contour`]: contour as `XOR(S, erode(S, cross))`.
//! 2. [`roi::rasterize_roi`] / [`roi::mask_contour`]: Gaussian likelihood
//!    capsule around each ROI segment (σ = 6 px, truncated at 3σ), contour
//!    kept where the likelihood reaches the 1σ level.
//! 3. [`geometry::fit_major_axis`] and [`geometry::bound_segment`]: one
//!    auxiliary line per region by orthogonal regression.
//! 4. [`geometry::construct_axis`]: two-line midpoint construction.
//!
//! [`pipeline::detect_axis`] runs all of it; [`metrics`] holds the
//! evaluation measures and [`phantom`] generates synthetic bones with exact
//! ground truth.
//!
//! Coordinates are continuous image coordinates in pixels with y pointing
//! down; pixel `(x, y)` has its center at `(x + 0.5, y + 0.5)`. Angles are
//! degrees, 0° along +x, counterclockwise as seen on screen.

pub mod annotation;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod mask;
pub mod metrics;
pub mod overlay;
pub mod phantom;
pub mod pipeline;
pub mod point;
pub mod raster_io;
pub mod report;
pub mod roi;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{AxisResult, BoundedSegment, FittedLine, Projection};
pub use mask::{BinaryMask, ContourSet, StructuringElement};
pub use pipeline::{detect_axis, DetectionConfig, DetectionError, DetectionOutcome, RoiSource, Stage};
pub use point::Point2;
pub use roi::{LikelihoodMap, RoiParams, RoiSegment};
