//! Scene description for synthetic vessel images.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scan::{view_height, CandidateCurve, Half};
use crate::vessel::{RowExtent, VesselRegion};

/// A liquid phase. Phases are listed top to bottom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phase {
    /// Height of the phase's upper surface above the floor, as a fraction of
    /// the interior height.
    pub fill_fraction: f64,
    pub intensity: f64,
    pub noise_sigma: f64,
    /// Brightness added along the upper half of the surface outline
    /// (negative for a dark line). The lower half gets half of it.
    #[serde(default)]
    pub edge_delta: f64,
}

/// A surface blurred into a linear ramp over `band_height` rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmulsionBand {
    /// Index of the phase whose upper surface is blurred.
    pub surface: usize,
    pub band_height: f64,
}

/// A bright elliptical mark on the glass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Glare {
    pub row: f64,
    /// Horizontal extent of the mark in pixels.
    pub width: f64,
    /// Offset of the mark's center from the vessel axis.
    pub x_offset: f64,
    /// Half of the mark's vertical thickness in pixels.
    pub thickness: f64,
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub background: f64,
    /// Intensity of the glass wall around the interior.
    pub glass: f64,
    pub wall_thickness: usize,
    /// Column of the vessel axis.
    pub axis: usize,
    /// `(row, half_width)` control points of the interior, rows increasing;
    /// half widths are interpolated linearly in between.
    pub profile: Vec<(usize, f64)>,
    /// Camera elevation above the surface plane, radians.
    pub view_angle: f64,
    /// Head-space intensity above the top liquid.
    pub air: f64,
    pub air_noise_sigma: f64,
    pub phases: Vec<Phase>,
    #[serde(default)]
    pub emulsion: Option<EmulsionBand>,
    #[serde(default)]
    pub glare: Vec<Glare>,
    /// Gaussian blur applied before noise; 0 disables it.
    #[serde(default)]
    pub blur_sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceType {
    LiquidAir,
    LiquidLiquid,
}

/// One true surface of a rendered scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthSurface {
    pub center_row: usize,
    pub x_left: usize,
    pub x_right: usize,
    /// Semi-minor axis rounded to whole pixels.
    pub h: usize,
    /// Exact semi-minor axis.
    pub h_exact: f64,
    /// Full projected height of the surface, `w * sin(phi)` for diameter `w`.
    pub view_height: f64,
    #[serde(rename = "type")]
    pub kind: SurfaceType,
    pub emulsion: bool,
}

/// Everything known about a rendered image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub schema_version: u32,
    pub image_id: String,
    pub ceiling_row: usize,
    pub floor_row: usize,
    /// Surfaces top to bottom.
    pub surfaces: Vec<TruthSurface>,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Param(format!("scene: {m}")));
        if self.width < 3 || self.height < 3 {
            return bad(format!("image {}x{} is too small", self.width, self.height));
        }
        if self.profile.len() < 2 {
            return bad("profile needs at least two control points".into());
        }
        if self.profile.windows(2).any(|w| w[0].0 >= w[1].0) {
            return bad("profile rows must increase".into());
        }
        let last = self.profile[self.profile.len() - 1].0;
        if last + self.wall_thickness >= self.height {
            return bad("vessel floor and wall must fit in the image".into());
        }
        for &(_, hw) in &self.profile {
            if !(hw >= 1.0) || self.axis as f64 - hw.round() - (self.wall_thickness as f64) < 0.0
                || self.axis as f64 + hw.round() + self.wall_thickness as f64 >= self.width as f64
            {
                return bad(format!("half width {hw} does not fit around axis {}", self.axis));
            }
        }
        if !(0.0..=std::f64::consts::FRAC_PI_3).contains(&self.view_angle) {
            return bad(format!("view angle {} outside [0, pi/3]", self.view_angle));
        }
        let intensities = [self.background, self.glass, self.air]
            .into_iter()
            .chain(self.phases.iter().map(|p| p.intensity))
            .chain(self.glare.iter().map(|g| g.intensity));
        for v in intensities {
            if !(0.0..=255.0).contains(&v) {
                return bad(format!("intensity {v} outside [0, 255]"));
            }
        }
        let mut prev = 1.0;
        for p in &self.phases {
            if !(p.fill_fraction > 0.0 && p.fill_fraction < prev) {
                return bad("fill fractions must decrease strictly from top to bottom within (0, 1)".into());
            }
            if !(p.noise_sigma >= 0.0) {
                return bad("noise sigma must be non-negative".into());
            }
            prev = p.fill_fraction;
        }
        if let Some(e) = self.emulsion {
            if e.surface >= self.phases.len() || !(e.band_height > 0.0) {
                return bad("emulsion band must name an existing surface and have positive height".into());
            }
        }
        if !(self.blur_sigma >= 0.0) || !(self.air_noise_sigma >= 0.0) {
            return bad("blur and noise must be non-negative".into());
        }
        let vessel = self.vessel()?;
        for (k, s) in self.surfaces().iter().enumerate() {
            if s.h > 0 {
                let c = CandidateCurve::half_ellipse(s.center_row, s.x_left, s.x_right, s.h, Half::Upper)?;
                if !c.is_inside(&vessel) {
                    return bad(format!("surface {k} leaves the vessel"));
                }
            }
        }
        Ok(())
    }

    pub fn row_top(&self) -> usize {
        self.profile[0].0
    }

    pub fn row_bottom(&self) -> usize {
        self.profile[self.profile.len() - 1].0
    }

    /// Interpolated half width at `row` (inside the profile's row span).
    pub fn half_width(&self, row: usize) -> f64 {
        let i = self.profile.partition_point(|&(r, _)| r <= row).clamp(1, self.profile.len() - 1);
        let ((r0, w0), (r1, w1)) = (self.profile[i - 1], self.profile[i]);
        let t = (row as f64 - r0 as f64) / (r1 - r0) as f64;
        w0 + t.clamp(0.0, 1.0) * (w1 - w0)
    }

    pub fn extent(&self, row: usize) -> Option<RowExtent> {
        if row < self.row_top() || row > self.row_bottom() {
            return None;
        }
        let hw = self.half_width(row).round() as usize;
        Some(RowExtent {
            x_left: self.axis - hw,
            x_right: self.axis + hw,
        })
    }

    pub fn vessel(&self) -> Result<VesselRegion> {
        let extents = (self.row_top()..=self.row_bottom())
            .map(|r| self.extent(r).expect("row inside profile"))
            .collect();
        VesselRegion::from_extents(self.width, self.height, self.row_top(), extents)
    }

    /// Row of the surface at `fill_fraction`.
    pub fn surface_row(&self, fill_fraction: f64) -> usize {
        let (top, bottom) = (self.row_top() as f64, self.row_bottom() as f64);
        (bottom - fill_fraction * (bottom - top)).round() as usize
    }

    /// Fill fraction that puts a surface exactly on `row`.
    pub fn fill_fraction_for_row(&self, row: usize) -> f64 {
        let (top, bottom) = (self.row_top() as f64, self.row_bottom() as f64);
        (bottom - row as f64) / (bottom - top)
    }

    /// The surfaces implied by the phases, top to bottom.
    pub fn surfaces(&self) -> Vec<TruthSurface> {
        self.phases
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let row = self.surface_row(p.fill_fraction);
                let e = self.extent(row).expect("surface row inside the vessel");
                let semi_major = (e.x_right - e.x_left) as f64 / 2.0;
                let full = view_height(2.0 * semi_major, self.view_angle);
                TruthSurface {
                    center_row: row,
                    x_left: e.x_left,
                    x_right: e.x_right,
                    h: (full / 2.0).round() as usize,
                    h_exact: full / 2.0,
                    view_height: full,
                    kind: if k == 0 {
                        SurfaceType::LiquidAir
                    } else {
                        SurfaceType::LiquidLiquid
                    },
                    emulsion: self.emulsion.is_some_and(|b| b.surface == k),
                }
            })
            .collect()
    }

    pub fn ground_truth(&self, image_id: &str) -> GroundTruth {
        GroundTruth {
            schema_version: crate::detector::SCHEMA_VERSION,
            image_id: image_id.to_string(),
            ceiling_row: self.row_top(),
            floor_row: self.row_bottom(),
            surfaces: self.surfaces(),
        }
    }
}
