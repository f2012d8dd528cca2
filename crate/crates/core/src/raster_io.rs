//! 8-bit grayscale PNG / PGM (P5) raster input and output.

use std::path::Path;

use image::{GrayImage, ImageFormat};
use thiserror::Error;

use crate::mask::BinaryMask;
use crate::roi::LikelihoodMap;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("{path}: {source}")]
    Image {
        path: String,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: {source}")]
    Invalid {
        path: String,
        #[source]
        source: crate::Error,
    },
    #[error("{path}: unsupported raster extension, expected .png or .pgm")]
    Format { path: String },
}

fn format_for(path: &Path) -> Result<ImageFormat, RasterError> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => Ok(ImageFormat::Png),
        Some("pgm") => Ok(ImageFormat::Pnm),
        _ => Err(RasterError::Format {
            path: path.display().to_string(),
        }),
    }
}

/// Reads a grayscale raster; color inputs are converted to luma.
pub fn read_gray(path: &Path) -> Result<GrayImage, RasterError> {
    let fmt = format_for(path)?;
    let img = image::ImageReader::open(path)
        .map_err(|e| RasterError::Image {
            path: path.display().to_string(),
            source: e.into(),
        })
        .and_then(|mut r| {
            r.set_format(fmt);
            r.decode().map_err(|e| RasterError::Image {
                path: path.display().to_string(),
                source: e,
            })
        })?;
    Ok(img.to_luma8())
}

pub fn write_gray(path: &Path, width: usize, height: usize, samples: Vec<u8>) -> Result<(), RasterError> {
    let fmt = format_for(path)?;
    let img = GrayImage::from_raw(width as u32, height as u32, samples)
        .expect("sample buffer matches raster dimensions");
    let err = |source| RasterError::Image {
        path: path.display().to_string(),
        source,
    };
    match fmt {
        ImageFormat::Pnm => {
            let file = std::fs::File::create(path).map_err(|e| err(e.into()))?;
            let encoder = image::codecs::pnm::PnmEncoder::new(std::io::BufWriter::new(file))
                .with_subtype(image::codecs::pnm::PnmSubtype::Graymap(
                    image::codecs::pnm::SampleEncoding::Binary,
                ));
            img.write_with_encoder(encoder).map_err(err)
        }
        _ => img.save_with_format(path, fmt).map_err(err),
    }
}

/// Nonzero samples are foreground. Spacing is left at 1 mm/px.
pub fn read_mask(path: &Path) -> Result<BinaryMask, RasterError> {
    let img = read_gray(path)?;
    BinaryMask::from_samples(img.width() as usize, img.height() as usize, img.as_raw()).map_err(|source| {
        RasterError::Invalid {
            path: path.display().to_string(),
            source,
        }
    })
}

/// Foreground is written as 255.
pub fn write_mask(path: &Path, mask: &BinaryMask) -> Result<(), RasterError> {
    write_gray(path, mask.width(), mask.height(), mask.to_samples())
}

/// Decodes `v / 255` and renormalizes to peak 1.
pub fn read_likelihood(path: &Path) -> Result<LikelihoodMap, RasterError> {
    let img = read_gray(path)?;
    LikelihoodMap::from_samples(img.width() as usize, img.height() as usize, img.as_raw()).map_err(|source| {
        RasterError::Invalid {
            path: path.display().to_string(),
            source,
        }
    })
}

pub fn write_likelihood(path: &Path, map: &LikelihoodMap) -> Result<(), RasterError> {
    write_gray(path, map.width(), map.height(), map.to_samples())
}
