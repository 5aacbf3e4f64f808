//! Pixel planes: color, grayscale, gradient and binary edge images.
//!
//! All planes are row-major with `(0, 0)` at the top-left corner and `y`
//! growing downward. Intensities are kept as `f64` so that scaled or inverted
//! images stay exact.

use crate::error::{Error, Result};

/// 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if data.len() != width * height {
            return Err(Error::Param(format!(
                "rgb buffer has {} pixels, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> [u8; 3]) -> Result<Self> {
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, px: [u8; 3]) {
        self.data[y * self.width + x] = px;
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.data
    }
}

/// Single-channel real-valued plane, nominally in `[0, 255]`.
///
/// The same type carries every scalar plane the scorers read: grayscale
/// intensity, a single color channel, gradient size or a 0/1 edge image.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if data.len() != width * height {
            return Err(Error::Param(format!(
                "plane buffer has {} pixels, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::Param(format!("non-finite intensity {v}")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(width, height, data)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Value at signed coordinates, `None` outside the image.
    #[inline]
    pub fn try_get(&self, x: i64, y: i64) -> Option<f64> {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            None
        } else {
            Some(self.data[y as usize * self.width + x as usize])
        }
    }

    /// Value with coordinates clamped into the image (replicate padding).
    #[inline]
    pub fn get_clamped(&self, x: i64, y: i64) -> f64 {
        let x = x.clamp(0, self.width as i64 - 1) as usize;
        let y = y.clamp(0, self.height as i64 - 1) as usize;
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Rounds and clamps into an 8-bit RGB image with equal channels.
    pub fn to_rgb(&self) -> RgbImage {
        let data = self
            .data
            .iter()
            .map(|&v| {
                let b = v.round().clamp(0.0, 255.0) as u8;
                [b, b, b]
            })
            .collect();
        RgbImage {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// Per-pixel intensity gradient: magnitude and direction.
///
/// Direction is `atan2(gy, gx)` in image coordinates, in `(-pi, pi]`, and is
/// `None` exactly where the magnitude is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    width: usize,
    height: usize,
    magnitude: Vec<f64>,
    direction: Vec<Option<f64>>,
}

impl GradientField {
    pub(crate) fn from_components(width: usize, height: usize, gx: &[f64], gy: &[f64]) -> Self {
        let mut magnitude = Vec::with_capacity(gx.len());
        let mut direction = Vec::with_capacity(gx.len());
        for (&dx, &dy) in gx.iter().zip(gy) {
            let m = (dx * dx + dy * dy).sqrt();
            magnitude.push(m);
            direction.push(if m > 0.0 { Some(normalize_angle(dy.atan2(dx))) } else { None });
        }
        Self {
            width,
            height,
            magnitude,
            direction,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn magnitude(&self, x: usize, y: usize) -> f64 {
        self.magnitude[y * self.width + x]
    }

    pub fn direction(&self, x: usize, y: usize) -> Option<f64> {
        self.direction[y * self.width + x]
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitude
    }

    /// The gradient-size plane.
    pub fn magnitude_plane(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.magnitude.clone(),
        }
    }
}

/// Maps an `atan2` result into `(-pi, pi]`.
fn normalize_angle(a: f64) -> f64 {
    if a <= -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        a
    }
}

/// Binary image with values exactly 0 or 1. Used for edge maps and vessel masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl EdgeMap {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y) as u8)
            .collect();
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] != 0
    }

    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.data[y * self.width + x] = on as u8;
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    /// The edge plane with pixel values 0.0 / 1.0.
    pub fn to_plane(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v as f64).collect(),
        }
    }
}

/// BT.601 luma: `0.299 R + 0.587 G + 0.114 B`.
pub fn to_grayscale(img: &RgbImage) -> Result<GrayImage> {
    if img.width == 0 || img.height == 0 {
        return Err(Error::EmptyImage);
    }
    // Integer weights keep gray pixels exact fixed points.
    let data = img
        .data
        .iter()
        .map(|&[r, g, b]| (299 * r as u32 + 587 * g as u32 + 114 * b as u32) as f64 / 1000.0)
        .collect();
    GrayImage::new(img.width, img.height, data)
}

/// Splits an RGB image into its red, green and blue planes.
pub fn split_channels(img: &RgbImage) -> Result<[GrayImage; 3]> {
    if img.width == 0 || img.height == 0 {
        return Err(Error::EmptyImage);
    }
    let channel = |c: usize| {
        GrayImage::new(
            img.width,
            img.height,
            img.data.iter().map(|px| px[c] as f64).collect(),
        )
    };
    Ok([channel(0)?, channel(1)?, channel(2)?])
}

/// Separable Gaussian blur with replicate padding. Kernel radius is `ceil(3 sigma)`.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Param(format!("sigma must be positive, got {sigma}")));
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= sum);

    let (w, h) = (img.width, img.height);
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, &wt)| wt * img.get_clamped(x as i64 + k as i64 - radius, y as i64))
                .sum();
        }
    }
    let horiz = GrayImage {
        width: w,
        height: h,
        data: tmp,
    };
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, &wt)| wt * horiz.get_clamped(x as i64, y as i64 + k as i64 - radius))
                .sum();
        }
    }
    GrayImage::new(w, h, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solid(px: [u8; 3]) -> RgbImage {
        RgbImage::from_fn(4, 3, |_, _| px).unwrap()
    }

    #[test]
    fn grayscale_extremes_and_gray_fixed_point() {
        assert_eq!(to_grayscale(&solid([255, 255, 255])).unwrap().get(1, 1), 255.0);
        assert_eq!(to_grayscale(&solid([0, 0, 0])).unwrap().get(1, 1), 0.0);
        assert_eq!(to_grayscale(&solid([100, 100, 100])).unwrap().get(1, 1), 100.0);
    }

    #[test]
    fn empty_image_is_rejected() {
        assert!(matches!(RgbImage::new(0, 5, vec![]), Err(Error::EmptyImage)));
        assert!(matches!(GrayImage::new(3, 0, vec![]), Err(Error::EmptyImage)));
    }

    #[test]
    fn split_channels_projects_each_channel() {
        let [r, g, b] = split_channels(&solid([10, 20, 30])).unwrap();
        assert_eq!((r.get(0, 0), g.get(0, 0), b.get(0, 0)), (10.0, 20.0, 30.0));

        let [r, g, b] = split_channels(&solid([255, 0, 0])).unwrap();
        assert!(r.data().iter().all(|&v| v == 255.0));
        assert!(g.data().iter().chain(b.data()).all(|&v| v == 0.0));
    }

    #[test]
    fn recombined_channels_match_grayscale() {
        let img = RgbImage::from_fn(7, 5, |x, y| [(x * 31) as u8, (y * 47) as u8, ((x + y) * 13) as u8]).unwrap();
        let gray = to_grayscale(&img).unwrap();
        let [r, g, b] = split_channels(&img).unwrap();
        for y in 0..5 {
            for x in 0..7 {
                let luma = (299.0 * r.get(x, y) + 587.0 * g.get(x, y) + 114.0 * b.get(x, y)) / 1000.0;
                assert_eq!(luma, gray.get(x, y));
            }
        }
    }

    #[test]
    fn blur_preserves_constant_image() {
        let img = GrayImage::filled(9, 9, 42.0).unwrap();
        let out = gaussian_blur(&img, 1.4).unwrap();
        assert!(out.data().iter().all(|v| (v - 42.0).abs() < 1e-12));
        assert!(gaussian_blur(&img, 0.0).is_err());
    }
}
