//! 3x3 Sobel gradient with replicate padding.

use crate::error::{Error, Result};
use crate::image::{GradientField, GrayImage};

/// Horizontal and vertical Sobel responses, row-major.
pub(crate) fn sobel_components(img: &GrayImage) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (img.width(), img.height());
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let p = |dx: i64, dy: i64| img.get_clamped(x + dx, y + dy);
            let dx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            let dy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            let i = y as usize * w + x as usize;
            gx[i] = dx;
            gy[i] = dy;
        }
    }
    (gx, gy)
}

/// Sobel gradient magnitude `sqrt(gx^2 + gy^2)` and direction `atan2(gy, gx)`.
pub fn sobel_gradient(img: &GrayImage) -> Result<GradientField> {
    if img.width() < 3 || img.height() < 3 {
        return Err(Error::ImageTooSmall {
            width: img.width(),
            height: img.height(),
        });
    }
    let (gx, gy) = sobel_components(img);
    Ok(GradientField::from_components(img.width(), img.height(), &gx, &gy))
}
