//! Canny edge detector: Gaussian smoothing, Sobel gradient, non-maximum
//! suppression along the quantized gradient direction and double-threshold
//! hysteresis with 8-connectivity.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{gaussian_blur, EdgeMap, GrayImage};
use crate::sobel::sobel_components;

/// Ratio of the low to the high hysteresis threshold when derived automatically.
pub const AUTO_LOW_RATIO: f64 = 0.4;
/// Percentile of the nonzero smoothed gradient magnitudes used as the automatic high threshold.
pub const AUTO_HIGH_PERCENTILE: f64 = 0.90;

const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CannyParams {
    pub sigma: f64,
    /// `(low, high)` hysteresis thresholds; derived from the image when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<(f64, f64)>,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            sigma: 1.4,
            thresholds: None,
        }
    }
}

/// Runs Canny with explicit thresholds.
pub fn canny_edges(img: &GrayImage, low: f64, high: f64, sigma: f64) -> Result<EdgeMap> {
    if !(0.0 <= low && low <= high) {
        return Err(Error::Param(format!(
            "canny thresholds must satisfy 0 <= low <= high, got low={low} high={high}"
        )));
    }
    let mag = suppressed_magnitudes(img, sigma)?;
    Ok(hysteresis(img.width(), img.height(), &mag, low, high))
}

/// Runs Canny with `params`, deriving thresholds from the image if needed.
pub fn canny_with(img: &GrayImage, params: &CannyParams) -> Result<EdgeMap> {
    match params.thresholds {
        Some((low, high)) => canny_edges(img, low, high, params.sigma),
        None => {
            let smoothed = gaussian_blur(img, params.sigma)?;
            let (gx, gy) = sobel_components(&smoothed);
            let mut nonzero: Vec<f64> = gx
                .iter()
                .zip(&gy)
                .map(|(x, y)| (x * x + y * y).sqrt())
                .filter(|&m| m > 0.0)
                .collect();
            if nonzero.is_empty() {
                return Ok(EdgeMap::zeros(img.width(), img.height()));
            }
            nonzero.sort_by(f64::total_cmp);
            let rank = ((AUTO_HIGH_PERCENTILE * nonzero.len() as f64).ceil() as usize).max(1);
            let high = nonzero[rank - 1];
            canny_edges(img, AUTO_LOW_RATIO * high, high, params.sigma)
        }
    }
}

/// Smoothed gradient magnitude after non-maximum suppression.
fn suppressed_magnitudes(img: &GrayImage, sigma: f64) -> Result<Vec<f64>> {
    let smoothed = gaussian_blur(img, sigma)?;
    let (w, h) = (img.width(), img.height());
    let (gx, gy) = sobel_components(&smoothed);
    let mag: Vec<f64> = gx.iter().zip(&gy).map(|(x, y)| (x * x + y * y).sqrt()).collect();
    let at = |x: i64, y: i64| -> f64 {
        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };

    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag[i];
            if m == 0.0 {
                continue;
            }
            // fold the direction into [0, 180) degrees and quantize to 4 axes
            let deg = gy[i].atan2(gx[i]).rem_euclid(PI).to_degrees();
            let (dx, dy) = if !(22.5..157.5).contains(&deg) {
                (1, 0)
            } else if deg < 67.5 {
                (1, 1)
            } else if deg < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            let (xi, yi) = (x as i64, y as i64);
            let before = at(xi - dx, yi - dy);
            let after = at(xi + dx, yi + dy);
            // asymmetric comparison keeps exactly one pixel of a flat-topped ridge;
            // near-equal values count as ties so rounding noise cannot pick the pixel
            let tol = TIE_TOLERANCE * m;
            if m >= before - tol && m > after + tol {
                out[i] = m;
            }
        }
    }
    Ok(out)
}

fn hysteresis(w: usize, h: usize, mag: &[f64], low: f64, high: f64) -> EdgeMap {
    let mut edges = EdgeMap::zeros(w, h);
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            let m = mag[y * w + x];
            if m > 0.0 && m >= high {
                edges.set(x, y, true);
                queue.push_back((x, y));
            }
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
            for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                let m = mag[ny * w + nx];
                if !edges.get(nx, ny) && m > 0.0 && m >= low {
                    edges.set(nx, ny, true);
                    queue.push_back((nx, ny));
                }
            }
        }
    }
    edges
}
