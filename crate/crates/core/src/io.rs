//! PNG / BMP reading and PNG writing.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{EdgeMap, RgbImage};

/// Reads an 8-bit RGB or grayscale PNG/BMP file.
pub fn load_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|source| match source {
        image::ImageError::IoError(e) => Error::io(path, e),
        source => Error::Decode {
            path: path.to_path_buf(),
            source,
        },
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    RgbImage::new(w, h, rgb.pixels().map(|p| p.0).collect())
}

/// Reads a mask image; any nonzero channel marks an interior pixel.
pub fn load_mask(path: impl AsRef<Path>) -> Result<EdgeMap> {
    let rgb = load_rgb(path)?;
    Ok(EdgeMap::from_fn(rgb.width(), rgb.height(), |x, y| {
        rgb.get(x, y).iter().any(|&c| c != 0)
    }))
}

pub fn save_png(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let buf = image::RgbImage::from_fn(img.width() as u32, img.height() as u32, |x, y| {
        image::Rgb(img.get(x as usize, y as usize))
    });
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| match source {
            image::ImageError::IoError(e) => Error::io(path, e),
            source => Error::Decode {
                path: path.to_path_buf(),
                source,
            },
        })
}

/// Writes a binary mask as an 8-bit PNG (interior 255, exterior 0).
pub fn save_mask_png(mask: &EdgeMap, path: impl AsRef<Path>) -> Result<()> {
    let rgb = RgbImage::from_fn(mask.width(), mask.height(), |x, y| {
        if mask.get(x, y) {
            [255; 3]
        } else {
            [0; 3]
        }
    })?;
    save_png(&rgb, path)
}
