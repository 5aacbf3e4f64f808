//! Random scene generation for corpus difficulty profiles.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::scene::{EmulsionBand, Glare, Phase, SceneSpec};

pub const IMAGE_WIDTH: usize = 200;
pub const IMAGE_HEIGHT: usize = 250;

/// Difficulty profile of a generated corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Sharp surfaces, contrast of at least 40 gray levels, noise sigma at most 5.
    Easy,
    /// Like easy, but every liquid-liquid surface is an emulsion band.
    Emulsive,
    /// Like easy, plus bright elliptical marks on the glass.
    Glare,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "easy" => Ok(Profile::Easy),
            "emulsive" => Ok(Profile::Emulsive),
            "glare" => Ok(Profile::Glare),
            _ => Err(Error::Config(format!("unknown profile `{s}` (expected easy, emulsive or glare)"))),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Easy => "easy",
            Profile::Emulsive => "emulsive",
            Profile::Glare => "glare",
        })
    }
}

pub const MAX_VIEW_ANGLE_DEG: f64 = 25.0;
pub const MIN_CONTRAST: f64 = 40.0;
pub const MAX_NOISE: f64 = 5.0;

#[derive(Debug, Clone, Copy)]
enum Shape {
    Cylinder,
    Beaker,
    Bottle,
}

/// Interior profile and the first row surfaces may use.
fn vessel_profile(rng: &mut impl Rng, top: usize, bottom: usize) -> (Vec<(usize, f64)>, usize) {
    let hw = rng.random_range(55..=70) as f64;
    match [Shape::Cylinder, Shape::Beaker, Shape::Bottle][rng.random_range(0..3)] {
        Shape::Cylinder => (vec![(top, hw), (bottom, hw)], top),
        // a little wider at the rim
        Shape::Beaker => {
            let taper = rng.random_range(3..=8) as f64;
            (vec![(top, hw + taper), (bottom, hw)], top)
        }
        Shape::Bottle => {
            let neck = rng.random_range(18..=24) as f64;
            let neck_end = top + rng.random_range(30..=40);
            let shoulder_end = neck_end + rng.random_range(12..=18);
            (
                vec![(top, neck), (neck_end, neck), (shoulder_end, hw), (bottom, hw)],
                shoulder_end,
            )
        }
    }
}

/// Lower liquid at least `MIN_CONTRAST` away from `upper` and at least 45%
/// relative contrast.
fn second_liquid(rng: &mut impl Rng, upper: f64) -> f64 {
    let brighter_fits = upper / (1.0 - 0.45) <= 245.0;
    if brighter_fits && rng.random_bool(0.5) {
        let r_max = (1.0 - upper / 245.0).min(0.6);
        let r = rng.random_range(0.45..=r_max);
        (upper / (1.0 - r)).round()
    } else {
        let r = rng.random_range(0.5..=0.7);
        (upper * (1.0 - r)).round()
    }
}

/// Draws one scene. Retries geometry until the surfaces fit the vessel.
pub fn random_scene(profile: Profile, rng: &mut impl RngCore) -> SceneSpec {
    loop {
        if let Some(spec) = try_scene(profile, rng) {
            return spec;
        }
    }
}

fn try_scene(profile: Profile, rng: &mut impl RngCore) -> Option<SceneSpec> {
    let top = rng.random_range(22..=40);
    let bottom = rng.random_range(212..=228);
    let (profile_points, body_top) = vessel_profile(rng, top, bottom);
    let view_angle = rng.random_range(0.0..=MAX_VIEW_ANGLE_DEG).to_radians();
    let n_phases = if rng.random_bool(0.6) { 2 } else { 1 };

    let mut spec = SceneSpec {
        width: IMAGE_WIDTH,
        height: IMAGE_HEIGHT,
        background: rng.random_range(10..=20) as f64,
        glass: rng.random_range(95..=115) as f64,
        wall_thickness: rng.random_range(2..=3),
        axis: IMAGE_WIDTH / 2,
        profile: profile_points,
        view_angle,
        air: rng.random_range(25..=45) as f64,
        air_noise_sigma: rng.random_range(1.0..=4.0),
        phases: vec![],
        emulsion: None,
        glare: vec![],
        blur_sigma: 0.0,
    };

    let max_semi = spec.profile.iter().map(|p| p.1.round()).fold(0.0, f64::max) * view_angle.sin();
    let h = max_semi.ceil() as usize;
    let margin = 10;
    let lo = body_top + h + margin;
    let hi = bottom.checked_sub(h + margin)?;
    let gap = 2 * h + 14;
    let rows: Vec<usize> = if n_phases == 1 {
        vec![rng.random_range(lo.min(hi)..=hi)]
    } else {
        if hi < lo + gap {
            return None;
        }
        let first = rng.random_range(lo..=hi - gap);
        let second = rng.random_range(first + gap..=hi);
        vec![first, second]
    };

    let upper = rng.random_range(110..=210) as f64;
    let mut intensities = vec![upper];
    if n_phases == 2 {
        intensities.push(second_liquid(rng, upper));
    }
    for (k, (&row, &intensity)) in rows.iter().zip(&intensities).enumerate() {
        let edge_delta = if k == 0 {
            rng.random_range(15..=40) as f64
        } else {
            rng.random_range(4..=10) as f64
        };
        spec.phases.push(Phase {
            fill_fraction: spec.fill_fraction_for_row(row),
            intensity,
            noise_sigma: rng.random_range(1.0..=MAX_NOISE),
            edge_delta,
        });
    }

    let vessel_height = (bottom - top + 1) as f64;
    if profile == Profile::Emulsive && n_phases == 2 {
        spec.emulsion = Some(EmulsionBand {
            surface: 1,
            band_height: (vessel_height * rng.random_range(0.02..=0.06)).round().max(1.0),
        });
    }
    if profile == Profile::Glare {
        let count = rng.random_range(1..=3);
        for _ in 0..count {
            if let Some(g) = random_glare(rng, &spec, body_top, bottom, &rows, h) {
                spec.glare.push(g);
            }
        }
    }
    spec.validate().ok()?;
    Some(spec)
}

fn random_glare(
    rng: &mut impl Rng,
    spec: &SceneSpec,
    body_top: usize,
    bottom: usize,
    surface_rows: &[usize],
    h: usize,
) -> Option<Glare> {
    for _ in 0..20 {
        let row = rng.random_range(body_top + 10..=bottom - 10);
        let clear = surface_rows.iter().all(|&r| row.abs_diff(r) > h + 8)
            && spec.glare.iter().all(|g| (g.row - row as f64).abs() > 12.0);
        if !clear {
            continue;
        }
        let w = 2.0 * spec.half_width(row).round();
        let width = (w * rng.random_range(0.45..=0.75)).round();
        let slack = (w - width) / 2.0 - 2.0;
        return Some(Glare {
            row: row as f64,
            width,
            x_offset: rng.random_range(-slack..=slack),
            thickness: rng.random_range(1.0..=2.5),
            intensity: rng.random_range(220..=255) as f64,
        });
    }
    None
}
