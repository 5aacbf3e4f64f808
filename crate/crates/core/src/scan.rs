//! Candidate surface curves: for each scannable row, a straight line and
//! every horizontal half-ellipse whose major axis is that row.
//!
//! Angles are in image coordinates (`y` down), in the same frame as the
//! Sobel direction. The normal of every curve point is the unit normal with a
//! non-negative `y` component, so flat stretches have `theta = pi/2`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vessel::{RowExtent, VesselRegion, DEFAULT_NARROW_FRACTION};

/// Which part of an ellipse a curve traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Half {
    Upper,
    Lower,
    Line,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: usize,
    /// Sub-pixel row; rounded to the nearest row at pixel lookup.
    pub y: f64,
    /// Normal angle in radians.
    pub theta: f64,
}

impl CurvePoint {
    /// The pixel row this point falls on.
    pub fn row(&self) -> i64 {
        self.y.round() as i64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateCurve {
    pub center_row: usize,
    pub x_left: usize,
    pub x_right: usize,
    /// Semi-minor axis in pixels; 0 for a straight line.
    pub h: usize,
    pub half: Half,
    pub points: Vec<CurvePoint>,
}

impl CandidateCurve {
    pub fn line(center_row: usize, x_left: usize, x_right: usize) -> Self {
        let points = line_points(center_row as f64, x_left, x_right);
        Self {
            center_row,
            x_left,
            x_right,
            h: 0,
            half: Half::Line,
            points,
        }
    }

    pub fn half_ellipse(center_row: usize, x_left: usize, x_right: usize, h: usize, half: Half) -> Result<Self> {
        let points = ellipse_half_points(center_row as f64, x_left, x_right, h as f64, half)?;
        Ok(Self {
            center_row,
            x_left,
            x_right,
            h,
            half: if h == 0 { Half::Line } else { half },
            points,
        })
    }

    /// Width of the major axis in pixels, `x_right - x_left + 1`.
    pub fn width(&self) -> usize {
        self.x_right - self.x_left + 1
    }

    /// The curve for the other half of the same ellipse (a line is its own mirror).
    pub fn mirror(&self) -> Self {
        let half = match self.half {
            Half::Upper => Half::Lower,
            Half::Lower => Half::Upper,
            Half::Line => return self.clone(),
        };
        Self::half_ellipse(self.center_row, self.x_left, self.x_right, self.h, half)
            .expect("geometry was valid for the original half")
    }

    /// True if every point's pixel lies inside the vessel.
    pub fn is_inside(&self, vessel: &VesselRegion) -> bool {
        self.points.iter().all(|p| vessel.contains(p.x as i64, p.row()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanParams {
    /// Largest semi-minor axis as a fraction of the row width.
    pub max_height_fraction: f64,
    pub height_step: usize,
    /// Rows narrower than this fraction of the widest row are not scanned.
    pub narrow_fraction: f64,
    pub row_step: usize,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self {
            max_height_fraction: 0.30,
            height_step: 1,
            narrow_fraction: DEFAULT_NARROW_FRACTION,
            row_step: 1,
        }
    }
}

impl ScanParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_height_fraction > 0.0 && self.max_height_fraction <= 1.0) {
            return Err(Error::Param(format!(
                "max_height_fraction must lie in (0, 1], got {}",
                self.max_height_fraction
            )));
        }
        if self.height_step == 0 || self.row_step == 0 {
            return Err(Error::Param("height_step and row_step must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.narrow_fraction) {
            return Err(Error::Param(format!(
                "narrow_fraction must lie in [0, 1), got {}",
                self.narrow_fraction
            )));
        }
        Ok(())
    }

    /// Largest semi-minor axis tried on a row `width` pixels wide.
    pub fn max_height(&self, width: usize) -> usize {
        // the epsilon absorbs representation error in products like 0.3 * 10
        (self.max_height_fraction * width as f64 + 1e-9).floor() as usize
    }
}

/// One step of the scan: a row and a semi-minor axis (0 for the line).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ScanKey {
    pub row: usize,
    pub h: usize,
}

fn line_points(y: f64, x_left: usize, x_right: usize) -> Vec<CurvePoint> {
    (x_left..=x_right)
        .map(|x| CurvePoint { x, y, theta: FRAC_PI_2 })
        .collect()
}

/// Samples one half of the horizontal ellipse with major axis
/// `[x_left, x_right]` on `center_row` and semi-minor axis `h`, one point per
/// integer column. `h = 0` gives the straight line.
pub fn ellipse_half_points(center_row: f64, x_left: usize, x_right: usize, h: f64, half: Half) -> Result<Vec<CurvePoint>> {
    if !(h >= 0.0) {
        return Err(Error::Param(format!("ellipse height must be non-negative, got {h}")));
    }
    if x_left >= x_right {
        return Err(Error::Param(format!("ellipse needs x_left < x_right, got {x_left}..{x_right}")));
    }
    if h == 0.0 || half == Half::Line {
        return Ok(line_points(center_row, x_left, x_right));
    }
    let a = (x_right - x_left) as f64 / 2.0;
    let cx = (x_left + x_right) as f64 / 2.0;
    let sign = if half == Half::Upper { -1.0 } else { 1.0 };
    Ok((x_left..=x_right)
        .map(|x| {
            let u = ((x as f64 - cx) / a).clamp(-1.0, 1.0);
            let y = center_row + sign * h * (1.0 - u * u).sqrt();
            // gradient of the implicit form ((x-cx)/a)^2 + ((y-c)/h)^2
            let gx = (x as f64 - cx) / (a * a);
            let gy = (y - center_row) / (h * h);
            let (nx, ny) = if half == Half::Upper { (-gx, -gy) } else { (gx, gy) };
            // adding +0 turns -0 into +0 so horizontal normals land on 0 or pi
            CurvePoint {
                x,
                y,
                theta: (ny + 0.0).atan2(nx),
            }
        })
        .collect())
}

/// Projected height of a circular surface of diameter `w` seen from
/// elevation `phi` above its plane: `w * sin(phi)`.
pub fn view_height(w: f64, phi: f64) -> f64 {
    w * phi.sin()
}

/// Every (row, height) step of the scan in enumeration order.
pub fn scan_keys(vessel: &VesselRegion, params: &ScanParams) -> Result<Vec<ScanKey>> {
    params.validate()?;
    let rows = vessel.scannable_rows(params.narrow_fraction)?;
    let mut keys = Vec::new();
    for row in rows.into_iter().step_by(params.row_step) {
        let width = vessel.extent(row).map_or(0, |e| e.width());
        keys.push(ScanKey { row, h: 0 });
        keys.extend(
            (1..=params.max_height(width))
                .step_by(params.height_step)
                .map(|h| ScanKey { row, h }),
        );
    }
    Ok(keys)
}

/// The candidates of one scan step that stay inside the vessel: the line, or
/// the upper and lower halves.
pub fn candidates_for_key(vessel: &VesselRegion, key: ScanKey) -> Vec<CandidateCurve> {
    let Some(RowExtent { x_left, x_right }) = vessel.extent(key.row) else {
        return Vec::new();
    };
    if key.h == 0 {
        return vec![CandidateCurve::line(key.row, x_left, x_right)];
    }
    if x_left == x_right {
        return Vec::new();
    }
    [Half::Upper, Half::Lower]
        .into_iter()
        .filter_map(|half| CandidateCurve::half_ellipse(key.row, x_left, x_right, key.h, half).ok())
        .filter(|c| c.is_inside(vessel))
        .collect()
}

/// All candidates in scan order: rows top to bottom, each row's line first,
/// then upper and lower halves by increasing height.
pub fn enumerate_candidates<'a>(
    vessel: &'a VesselRegion,
    params: &ScanParams,
) -> Result<impl Iterator<Item = CandidateCurve> + 'a> {
    let keys = scan_keys(vessel, params)?;
    Ok(keys.into_iter().flat_map(move |k| candidates_for_key(vessel, k)))
}

/// The ceiling and floor boundary lines. The ceiling lies on the top interior
/// row; the floor lies one row below the bottom interior row so that its
/// upper window covers the last interior rows.
pub fn boundary_candidates(vessel: &VesselRegion) -> (CandidateCurve, CandidateCurve) {
    let (top, bottom) = vessel.floor_ceiling();
    let et = vessel.extent(top).expect("top row is interior");
    let eb = vessel.extent(bottom).expect("bottom row is interior");
    (
        CandidateCurve::line(top, et.x_left, et.x_right),
        CandidateCurve::line(bottom + 1, eb.x_left, eb.x_right),
    )
}
