//! Binary masks, erosion and contour extraction.
//!
//! The contour of a mask is the set of foreground pixels that vanish under
//! erosion with the 4-connected cross, i.e. `XOR(S, erode(S, X))`. Pixels
//! outside the raster are treated as background, so foreground touching
//! the border is always contour.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::point::Point2;

/// Integer pixel coordinate `(x, y)`.
pub type Pixel = (usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    pixels: Vec<bool>,
    spacing: f64,
}

impl BinaryMask {
    /// Empty (all background) mask with spacing 1 mm/px.
    pub fn new(width: usize, height: usize) -> Result<Self> {
        Self::from_pixels(width, height, vec![false; width * height])
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "mask dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
            spacing: 1.0,
        })
    }

    /// Builds a mask from 8-bit samples; any nonzero sample is foreground.
    pub fn from_samples(width: usize, height: usize, samples: &[u8]) -> Result<Self> {
        Self::from_pixels(width, height, samples.iter().map(|&v| v != 0).collect())
    }

    pub fn with_spacing(mut self, spacing: f64) -> Result<Self> {
        self.set_spacing(spacing)?;
        Ok(self)
    }

    pub fn set_spacing(&mut self, spacing: f64) -> Result<()> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        self.spacing = spacing;
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Millimetres per pixel.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn pixels(&self) -> &[bool] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.pixels[y * self.width + x]
    }

    /// Signed lookup where anything outside the raster is background.
    pub fn get_or_background(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            false
        } else {
            self.get(x as usize, y as usize)
        }
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.pixels[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.pixels.iter().any(|&p| p)
    }

    /// Foreground pixels in row-major order.
    pub fn foreground(&self) -> impl Iterator<Item = Pixel> + '_ {
        self.pixels
            .iter()
            .enumerate()
            .filter(|(_, &p)| p)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }

    /// 0/255 samples, row-major.
    pub fn to_samples(&self) -> Vec<u8> {
        self.pixels.iter().map(|&p| if p { 255 } else { 0 }).collect()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Offsets `(dx, dy)` of a flat structuring element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringElement {
    offsets: Vec<(i64, i64)>,
}

impl StructuringElement {
    pub fn new(offsets: Vec<(i64, i64)>) -> Result<Self> {
        if !offsets.contains(&(0, 0)) {
            return Err(Error::InvalidInput(
                "structuring element must contain the origin".into(),
            ));
        }
        Ok(Self { offsets })
    }

    /// The 3x3 cross `{(-1,0),(0,-1),(0,0),(0,1),(1,0)}`.
    pub fn cross() -> Self {
        Self {
            offsets: vec![(-1, 0), (0, -1), (0, 0), (0, 1), (1, 0)],
        }
    }

    /// Centered `(2*rx+1) x (2*ry+1)` rectangle.
    pub fn rect(rx: i64, ry: i64) -> Self {
        let offsets = (-ry..=ry)
            .flat_map(|dy| (-rx..=rx).map(move |dx| (dx, dy)))
            .collect();
        Self { offsets }
    }

    pub fn offsets(&self) -> &[(i64, i64)] {
        &self.offsets
    }
}

impl Default for StructuringElement {
    fn default() -> Self {
        Self::cross()
    }
}

pub fn erode(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let mut out = vec![false; mask.width * mask.height];
    for (x, y) in mask.foreground() {
        let keep = se
            .offsets
            .iter()
            .all(|&(dx, dy)| mask.get_or_background(x as i64 + dx, y as i64 + dy));
        out[y * mask.width + x] = keep;
    }
    BinaryMask {
        width: mask.width,
        height: mask.height,
        pixels: out,
        spacing: mask.spacing,
    }
}

/// Contour pixels of a mask, in row-major order without duplicates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContourSet {
    points: Vec<Pixel>,
}

impl ContourSet {
    /// Deduplicates while keeping first-seen order.
    pub fn from_pixels(points: impl IntoIterator<Item = Pixel>) -> Self {
        let mut seen = HashSet::new();
        let points = points.into_iter().filter(|p| seen.insert(*p)).collect();
        Self { points }
    }

    pub fn points(&self) -> &[Pixel] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Pixel centers in continuous image space.
    pub fn centers(&self) -> Vec<Point2> {
        self.points
            .iter()
            .map(|&(x, y)| Point2::pixel_center(x as i64, y as i64))
            .collect()
    }

    pub fn retain(&mut self, mut keep: impl FnMut(Pixel) -> bool) {
        self.points.retain(|&p| keep(p));
    }
}

pub fn extract_contour(mask: &BinaryMask) -> ContourSet {
    let eroded = erode(mask, &StructuringElement::cross());
    ContourSet {
        points: mask
            .foreground()
            .filter(|&(x, y)| !eroded.get(x, y))
            .collect(),
    }
}
