//! Rasterizing a scene.
//!
//! Interior pixels are supersampled vertically and horizontally so curved
//! surfaces come out antialiased. A surface's locus marks the top edge of the
//! first row of the phase below it, so a flat surface at row `r` leaves row
//! `r - 1` entirely in the phase above and row `r` entirely in the phase below.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::image::{gaussian_blur, GrayImage, RgbImage};
use crate::vessel::VesselRegion;

use super::scene::{GroundTruth, SceneSpec, TruthSurface};

const SUPERSAMPLE: usize = 4;

/// A rendered scene.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub image: RgbImage,
    pub vessel: VesselRegion,
    pub truth: GroundTruth,
}

struct Surface {
    truth: TruthSurface,
    mid: f64,
    semi_major: f64,
}

impl Surface {
    /// Depth of the curve below the center row at column `x`, for the upper
    /// half (negative) or lower half (positive).
    fn bulge(&self, x: f64) -> f64 {
        if self.semi_major <= 0.0 {
            return 0.0;
        }
        let u = ((x - self.mid) / self.semi_major).clamp(-1.0, 1.0);
        self.truth.h_exact * (1.0 - u * u).sqrt()
    }

    fn upper(&self, x: f64) -> f64 {
        self.truth.center_row as f64 - self.bulge(x)
    }

    fn lower(&self, x: f64) -> f64 {
        self.truth.center_row as f64 + self.bulge(x)
    }
}

fn phase_value(spec: &SceneSpec, surfaces: &[Surface], x: f64, y: f64) -> f64 {
    let level = |k: usize| {
        if k == 0 {
            spec.air
        } else {
            spec.phases[k - 1].intensity
        }
    };
    // row boundaries sit half a pixel above the locus
    let edge = y + 0.5;
    let below = surfaces.iter().take_while(|s| edge >= s.upper(x)).count();
    let mut v = level(below);
    if let Some(band) = spec.emulsion {
        let s = &surfaces[band.surface];
        let t = (edge - s.upper(x)) / band.band_height + 0.5;
        if (0.0..1.0).contains(&t) {
            let (above, under) = (level(band.surface), level(band.surface + 1));
            v = above + t * (under - above);
        }
    }
    for (k, s) in surfaces.iter().enumerate() {
        if spec.emulsion.is_some_and(|b| b.surface == k) {
            continue;
        }
        let delta = spec.phases[k].edge_delta;
        if (y - s.upper(x)).abs() < 0.5 {
            v += delta;
        } else if s.truth.h_exact > 0.0 && (y - s.lower(x)).abs() < 0.5 {
            v += delta / 2.0;
        }
    }
    for g in &spec.glare {
        let gx = (x - spec.axis as f64 - g.x_offset) / (g.width / 2.0);
        let gy = (y - g.row) / g.thickness;
        if gx * gx + gy * gy <= 1.0 {
            v = g.intensity;
        }
    }
    v
}

/// Noise sigma for the phase at the pixel center.
fn phase_sigma(spec: &SceneSpec, surfaces: &[Surface], x: f64, y: f64) -> f64 {
    let below = surfaces.iter().take_while(|s| y + 0.5 >= s.upper(x)).count();
    if below == 0 {
        spec.air_noise_sigma
    } else {
        spec.phases[below - 1].noise_sigma
    }
}

fn is_wall(spec: &SceneSpec, vessel: &VesselRegion, x: usize, y: usize) -> bool {
    let t = spec.wall_thickness;
    let (top, bottom) = (vessel.row_top(), vessel.row_bottom());
    if y >= top && y <= bottom {
        let e = vessel.extent(y).expect("row inside vessel");
        return (x + t >= e.x_left && x < e.x_left) || (x > e.x_right && x <= e.x_right + t);
    }
    if y > bottom && y <= bottom + t {
        let e = vessel.extent(bottom).expect("floor row");
        return x + t >= e.x_left && x <= e.x_right + t;
    }
    false
}

/// Renders `spec`. Noise is drawn from a generator seeded with `seed`, so the
/// output depends only on `(spec, seed)`.
pub fn render(spec: &SceneSpec, seed: u64) -> Result<Rendered> {
    spec.validate()?;
    let vessel = spec.vessel()?;
    let truth = spec.ground_truth("");
    let surfaces: Vec<Surface> = truth
        .surfaces
        .iter()
        .map(|&t| Surface {
            truth: t,
            mid: (t.x_left + t.x_right) as f64 / 2.0,
            semi_major: (t.x_right - t.x_left) as f64 / 2.0,
        })
        .collect();

    let n = SUPERSAMPLE as f64;
    let offsets: Vec<f64> = (0..SUPERSAMPLE).map(|i| (i as f64 + 0.5) / n - 0.5).collect();
    let mut canvas = GrayImage::from_fn(spec.width, spec.height, |x, y| {
        if vessel.contains(x as i64, y as i64) {
            let mut sum = 0.0;
            for dy in &offsets {
                for dx in &offsets {
                    sum += phase_value(spec, &surfaces, x as f64 + dx, y as f64 + dy);
                }
            }
            sum / (n * n)
        } else if is_wall(spec, &vessel, x, y) {
            spec.glass
        } else {
            spec.background
        }
    })?;
    if spec.blur_sigma > 0.0 {
        canvas = gaussian_blur(&canvas, spec.blur_sigma)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut data = Vec::with_capacity(spec.width * spec.height);
    for y in 0..spec.height {
        for x in 0..spec.width {
            let sigma = if vessel.contains(x as i64, y as i64) {
                phase_sigma(spec, &surfaces, x as f64, y as f64)
            } else {
                spec.air_noise_sigma
            };
            // one draw per pixel keeps the noise stream aligned across specs
            let z: f64 = unit.sample(&mut rng);
            let v = (canvas.get(x, y) + sigma * z).round().clamp(0.0, 255.0) as u8;
            data.push([v; 3]);
        }
    }
    Ok(Rendered {
        image: RgbImage::new(spec.width, spec.height, data)?,
        vessel,
        truth,
    })
}
