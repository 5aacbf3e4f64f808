#![allow(dead_code)]

pub mod oracle;

use liquid_scan::vessel::RowExtent;
use liquid_scan::{GrayImage, RgbImage, VesselRegion};
use rand::Rng;

/// Random RGB image with smooth bands plus speckle, so windows see real structure.
pub fn random_rgb(rng: &mut impl Rng, w: usize, h: usize) -> RgbImage {
    let bands: Vec<[f64; 3]> = (0..4)
        .map(|_| [rng.random_range(0.0..255.0), rng.random_range(0.0..255.0), rng.random_range(0.0..255.0)])
        .collect();
    let cuts: Vec<usize> = {
        let mut c: Vec<usize> = (0..3).map(|_| rng.random_range(1..h)).collect();
        c.sort();
        c
    };
    let data = (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let band = cuts.iter().filter(|&&c| y >= c).count();
            let tilt = (x as f64 - w as f64 / 2.0) * 0.3;
            let mut px = [0u8; 3];
            for c in 0..3 {
                let noise = rng.random_range(-20.0..20.0);
                px[c] = (bands[band][c] + tilt + noise).round().clamp(0.0, 255.0) as u8;
            }
            px
        })
        .collect();
    RgbImage::new(w, h, data).unwrap()
}

/// Random vessel: a wobbly column of rows inside the image.
pub fn random_vessel(rng: &mut impl Rng, w: usize, h: usize) -> VesselRegion {
    let top = rng.random_range(0..h / 4);
    let bottom = rng.random_range(3 * h / 4..h);
    let extents = (top..=bottom)
        .map(|_| {
            let l = rng.random_range(0..w / 6);
            let r = w - 1 - rng.random_range(0..w / 6);
            RowExtent { x_left: l, x_right: r }
        })
        .collect();
    VesselRegion::from_extents(w, h, top, extents).unwrap()
}

pub fn scaled(img: &GrayImage, c: f64) -> GrayImage {
    img.map(|v| v * c)
}

/// A random line or half-ellipse whose center row lies in the vessel. The
/// column span may leave the vessel so dropped points get exercised.
pub fn random_candidate(rng: &mut impl Rng, vessel: &VesselRegion) -> liquid_scan::CandidateCurve {
    use liquid_scan::{CandidateCurve, Half};
    let w = vessel.image_width();
    let row = rng.random_range(vessel.row_top()..=vessel.row_bottom());
    let xl = rng.random_range(0..w / 3);
    let xr = rng.random_range(2 * w / 3..w);
    let h = if rng.random_bool(0.25) { 0 } else { rng.random_range(1..=12) };
    let half = if rng.random_bool(0.5) { Half::Upper } else { Half::Lower };
    if h == 0 {
        CandidateCurve::line(row, xl, xr)
    } else {
        CandidateCurve::half_ellipse(row, xl, xr, h, half).unwrap()
    }
}
