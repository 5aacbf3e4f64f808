//! Curve scoring: how well a candidate curve follows a surface in the image.
//!
//! An [`Indicator`] names the scoring method, the local equation, the image
//! plane it reads and how local scores are combined.

mod local;

use serde::{Deserialize, Serialize};

pub use local::{
    aggregate, consistency_check, consistent_scores, curve_means, local_samples_m1, local_score, ConsistencyParams,
    LocalSample, PERCENTILE_COVERAGE,
};

use crate::canny::{canny_with, CannyParams};
use crate::error::{Error, Result};
use crate::image::{split_channels, to_grayscale, GradientField, GrayImage, RgbImage};
use crate::scan::{CandidateCurve, Half};
use crate::sobel::sobel_gradient;
use crate::vessel::VesselRegion;
use local::{enough_points, pixel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Point-wise comparison of the windows above and below the curve.
    M1,
    /// Point-wise value on the curve.
    M2,
    /// Mean on the curve against the mean of the row just above it.
    M3,
    /// Mean inside a full ellipse against its one-pixel outer ring.
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalEquation {
    UMinusD,
    RelUMinusD,
    AbsUMinusD,
    AbsRelUMinusD,
    GlobalRelUMinusD,
    I,
    ICosThetaPhi,
    DiffIA,
    RelDiffIA,
    NormDiffIA,
    InteriorMinusRing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plane {
    Gray,
    Edge,
    GradientSize,
    /// Each color channel scored separately, scores averaged.
    RgbAveraged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Average,
    Percentile65,
    AsIs,
}

/// Height of the window strips above and below the curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionHeight {
    OnePixel,
    /// Fraction of the vessel interior height, at least one pixel.
    FractionOfVessel(f64),
}

impl RegionHeight {
    pub fn pixels(&self, vessel: &VesselRegion) -> usize {
        match *self {
            RegionHeight::OnePixel => 1,
            RegionHeight::FractionOfVessel(f) => ((f * vessel.height() as f64).round() as usize).max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Indicator {
    pub method: Method,
    pub local_equation: LocalEquation,
    pub plane: Plane,
    pub aggregation: Aggregation,
    #[serde(default = "one_pixel")]
    pub region_height: RegionHeight,
}

fn one_pixel() -> RegionHeight {
    RegionHeight::OnePixel
}

impl Indicator {
    pub fn new(method: Method, local_equation: LocalEquation, plane: Plane, aggregation: Aggregation) -> Self {
        Self {
            method,
            local_equation,
            plane,
            aggregation,
            region_height: RegionHeight::OnePixel,
        }
    }

    /// Rejects combinations that have no meaning.
    pub fn validate(&self) -> Result<()> {
        use LocalEquation as E;
        let eq_ok = match self.method {
            Method::M1 => matches!(
                self.local_equation,
                E::UMinusD | E::RelUMinusD | E::AbsUMinusD | E::AbsRelUMinusD | E::GlobalRelUMinusD
            ),
            Method::M2 => matches!(self.local_equation, E::I | E::ICosThetaPhi),
            Method::M3 => matches!(self.local_equation, E::DiffIA | E::RelDiffIA | E::NormDiffIA),
            Method::Interior => self.local_equation == E::InteriorMinusRing,
        };
        if !eq_ok {
            return Err(Error::Config(format!(
                "equation {:?} does not belong to method {:?}",
                self.local_equation, self.method
            )));
        }
        let as_is = matches!(self.method, Method::M3 | Method::Interior);
        if as_is != (self.aggregation == Aggregation::AsIs) {
            return Err(Error::Config(format!(
                "method {:?} cannot use {:?} aggregation",
                self.method, self.aggregation
            )));
        }
        match self.region_height {
            RegionHeight::OnePixel => {}
            RegionHeight::FractionOfVessel(f) => {
                if self.method != Method::M1 {
                    return Err(Error::Config("region height applies to method M1 only".into()));
                }
                if !(f > 0.0 && f < 1.0) {
                    return Err(Error::Config(format!("region height fraction must lie in (0, 1), got {f}")));
                }
            }
        }
        Ok(())
    }

    /// Window height in pixels, also used by the consistency check.
    pub fn region_pixels(&self, vessel: &VesselRegion) -> usize {
        self.region_height.pixels(vessel)
    }
}

/// Every plane the scorers read, precomputed once per image.
#[derive(Debug, Clone)]
pub struct ImagePlanes {
    pub gray: GrayImage,
    /// Sobel gradient of the grayscale plane; its direction feeds `phi`.
    pub gradient: GradientField,
    pub gradient_size: GrayImage,
    /// Canny edges as 0 / 1 values.
    pub edges: GrayImage,
    pub channels: [GrayImage; 3],
}

impl ImagePlanes {
    pub fn from_rgb(img: &RgbImage, canny: &CannyParams) -> Result<Self> {
        let gray = to_grayscale(img)?;
        let channels = split_channels(img)?;
        Self::build(gray, channels, canny)
    }

    /// Planes for a single-channel image; the color channels all equal it.
    pub fn from_gray(gray: GrayImage, canny: &CannyParams) -> Result<Self> {
        let channels = [gray.clone(), gray.clone(), gray.clone()];
        Self::build(gray, channels, canny)
    }

    fn build(gray: GrayImage, channels: [GrayImage; 3], canny: &CannyParams) -> Result<Self> {
        let gradient = sobel_gradient(&gray)?;
        let gradient_size = gradient.magnitude_plane();
        let edges = canny_with(&gray, canny)?.to_plane();
        Ok(Self {
            gray,
            gradient,
            gradient_size,
            edges,
            channels,
        })
    }

    pub fn width(&self) -> usize {
        self.gray.width()
    }

    pub fn height(&self) -> usize {
        self.gray.height()
    }

    fn single(&self, plane: Plane) -> &GrayImage {
        match plane {
            Plane::Gray | Plane::RgbAveraged => &self.gray,
            Plane::Edge => &self.edges,
            Plane::GradientSize => &self.gradient_size,
        }
    }
}

/// Curve-level means gathered while scoring.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CurveMeans {
    /// Mean of `U` over the points (M1).
    pub u: Option<f64>,
    /// Mean of `D` over the points (M1).
    pub d: Option<f64>,
    /// Mean on-curve value (M3), or the interior mean (Interior).
    pub i: Option<f64>,
    /// Mean of the row above the curve (M3), or the ring mean (Interior).
    pub a: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCurve {
    pub curve: CandidateCurve,
    pub local_scores: Vec<f64>,
    pub score: f64,
    pub consistent: bool,
    /// The half whose score represents the ellipse.
    pub source: Half,
    pub means: CurveMeans,
}

impl ScoredCurve {
    /// The score used for selection: 0 if the curve failed consistency.
    pub fn effective_score(&self) -> f64 {
        if self.consistent {
            self.score
        } else {
            0.0
        }
    }
}

struct PlaneScore {
    local_scores: Vec<f64>,
    score: f64,
    means: CurveMeans,
}

fn score_on_plane(
    curve: &CandidateCurve,
    plane: &GrayImage,
    planes: &ImagePlanes,
    vessel: &VesselRegion,
    indicator: &Indicator,
) -> Result<PlaneScore> {
    match indicator.method {
        Method::M1 => {
            let samples = local_samples_m1(curve, plane, vessel, indicator.region_pixels(vessel))?;
            let means = curve_means(&samples);
            let local_scores = samples
                .iter()
                .map(|s| local_score(s, indicator.local_equation, means))
                .collect::<Result<Vec<_>>>()?;
            Ok(PlaneScore {
                score: aggregate(&local_scores, indicator.aggregation)?,
                local_scores,
                means: CurveMeans {
                    u: Some(means.0),
                    d: Some(means.1),
                    ..CurveMeans::default()
                },
            })
        }
        Method::M2 => {
            let mut local_scores = Vec::with_capacity(curve.points.len());
            for p in &curve.points {
                let (x, y) = (p.x as i64, p.row());
                let Some(i) = pixel(plane, vessel, x, y) else {
                    continue;
                };
                let s = LocalSample {
                    x: p.x,
                    u: 0.0,
                    d: 0.0,
                    diff: 0.0,
                    i,
                    theta: p.theta,
                    phi: planes.gradient.direction(p.x, y as usize),
                };
                local_scores.push(local_score(&s, indicator.local_equation, (0.0, 0.0))?);
            }
            enough_points(local_scores.len(), curve.points.len())?;
            Ok(PlaneScore {
                score: aggregate(&local_scores, indicator.aggregation)?,
                local_scores,
                means: CurveMeans::default(),
            })
        }
        Method::M3 => {
            let mut pairs = Vec::with_capacity(curve.points.len());
            for p in &curve.points {
                let (x, y) = (p.x as i64, p.row());
                if let (Some(i), Some(a)) = (pixel(plane, vessel, x, y), pixel(plane, vessel, x, y - 1)) {
                    pairs.push((i, a));
                }
            }
            enough_points(pairs.len(), curve.points.len())?;
            let n = pairs.len() as f64;
            let i_mean = pairs.iter().map(|p| p.0).sum::<f64>() / n;
            let a_mean = pairs.iter().map(|p| p.1).sum::<f64>() / n;
            let diff = (i_mean - a_mean).abs();
            let score = match indicator.local_equation {
                LocalEquation::DiffIA => diff,
                LocalEquation::RelDiffIA => ratio(diff, i_mean.max(a_mean)),
                LocalEquation::NormDiffIA => ratio(diff, i_mean + a_mean),
                other => return Err(Error::Config(format!("{other:?} is not an M3 equation"))),
            };
            Ok(PlaneScore {
                local_scores: pairs.iter().map(|(i, a)| i - a).collect(),
                score,
                means: CurveMeans {
                    i: Some(i_mean),
                    a: Some(a_mean),
                    ..CurveMeans::default()
                },
            })
        }
        Method::Interior => interior_score(curve, plane, vessel),
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Interior of the full ellipse against the pixels just outside it.
fn interior_score(curve: &CandidateCurve, plane: &GrayImage, vessel: &VesselRegion) -> Result<PlaneScore> {
    if curve.half == Half::Line {
        return Err(Error::Unsampleable);
    }
    let (upper, lower) = match curve.half {
        Half::Upper => (curve.clone(), curve.mirror()),
        _ => (curve.mirror(), curve.clone()),
    };
    let (mut in_sum, mut in_n, mut ring_sum, mut ring_n) = (0.0, 0usize, 0.0, 0usize);
    let mut local_scores = Vec::new();
    for (pu, pl) in upper.points.iter().zip(&lower.points) {
        let x = pu.x as i64;
        let (top, bottom) = (pu.row(), pl.row());
        let (mut cs, mut cn) = (0.0, 0usize);
        for y in top + 1..bottom {
            if let Some(v) = pixel(plane, vessel, x, y) {
                cs += v;
                cn += 1;
            }
        }
        let ring: Vec<f64> = [top - 1, bottom + 1]
            .into_iter()
            .filter_map(|y| pixel(plane, vessel, x, y))
            .collect();
        in_sum += cs;
        in_n += cn;
        ring_sum += ring.iter().sum::<f64>();
        ring_n += ring.len();
        if cn > 0 && !ring.is_empty() {
            local_scores.push(cs / cn as f64 - ring.iter().sum::<f64>() / ring.len() as f64);
        }
    }
    if in_n == 0 || ring_n == 0 {
        return Err(Error::Unsampleable);
    }
    let (i_mean, a_mean) = (in_sum / in_n as f64, ring_sum / ring_n as f64);
    Ok(PlaneScore {
        local_scores,
        score: (i_mean - a_mean).abs(),
        means: CurveMeans {
            i: Some(i_mean),
            a: Some(a_mean),
            ..CurveMeans::default()
        },
    })
}

/// Scores one curve without the consistency test (`consistent` is true).
///
/// With the interior method the result always describes the upper half of
/// the ellipse.
pub fn score_curve(
    curve: &CandidateCurve,
    planes: &ImagePlanes,
    vessel: &VesselRegion,
    indicator: &Indicator,
) -> Result<ScoredCurve> {
    indicator.validate()?;
    if planes.width() != vessel.image_width() || planes.height() != vessel.image_height() {
        return Err(Error::Vessel(format!(
            "vessel is {}x{} but image is {}x{}",
            vessel.image_width(),
            vessel.image_height(),
            planes.width(),
            planes.height()
        )));
    }
    let ps = if indicator.plane == Plane::RgbAveraged {
        let parts = planes
            .channels
            .iter()
            .map(|ch| score_on_plane(curve, ch, planes, vessel, indicator))
            .collect::<Result<Vec<_>>>()?;
        let n = parts[0].local_scores.len();
        PlaneScore {
            score: parts.iter().map(|p| p.score).sum::<f64>() / 3.0,
            local_scores: (0..n)
                .map(|i| parts.iter().map(|p| p.local_scores[i]).sum::<f64>() / 3.0)
                .collect(),
            means: CurveMeans::default(),
        }
    } else {
        score_on_plane(curve, planes.single(indicator.plane), planes, vessel, indicator)?
    };
    let curve = if indicator.method == Method::Interior && curve.half == Half::Lower {
        curve.mirror()
    } else {
        curve.clone()
    };
    let source = curve.half;
    Ok(ScoredCurve {
        curve,
        local_scores: ps.local_scores,
        score: ps.score,
        consistent: true,
        source,
        means: ps.means,
    })
}

/// The better half of one ellipse. A half that failed consistency counts as
/// 0; ties go to the upper half.
pub fn score_ellipse(upper: ScoredCurve, lower: ScoredCurve) -> ScoredCurve {
    let mut best = if lower.effective_score() > upper.effective_score() {
        lower
    } else {
        upper
    };
    best.source = best.curve.half;
    best
}

/// Scores curves against one image with a fixed indicator and consistency
/// setting.
#[derive(Debug, Clone)]
pub struct CurveScorer<'a> {
    pub planes: &'a ImagePlanes,
    pub vessel: &'a VesselRegion,
    pub indicator: Indicator,
    pub consistency: ConsistencyParams,
}

impl<'a> CurveScorer<'a> {
    pub fn new(
        planes: &'a ImagePlanes,
        vessel: &'a VesselRegion,
        indicator: Indicator,
        consistency: ConsistencyParams,
    ) -> Result<Self> {
        indicator.validate()?;
        consistency.validate()?;
        if planes.width() != vessel.image_width() || planes.height() != vessel.image_height() {
            return Err(Error::Vessel(format!(
                "vessel is {}x{} but image is {}x{}",
                vessel.image_width(),
                vessel.image_height(),
                planes.width(),
                planes.height()
            )));
        }
        Ok(Self {
            planes,
            vessel,
            indicator,
            consistency,
        })
    }

    /// Scores `curve` and applies the consistency test when enabled.
    /// `None` if the curve cannot be sampled.
    pub fn score(&self, curve: &CandidateCurve) -> Option<ScoredCurve> {
        let mut sc = score_curve(curve, self.planes, self.vessel, &self.indicator).ok()?;
        if self.consistency.enabled {
            sc.consistent = consistency_check(
                &sc.curve,
                &self.planes.gray,
                self.vessel,
                self.consistency_region(),
                &self.consistency,
            );
        }
        Some(sc)
    }

    /// Scores a boundary line; boundaries skip the consistency test.
    pub fn score_boundary(&self, curve: &CandidateCurve) -> Option<ScoredCurve> {
        score_curve(curve, self.planes, self.vessel, &self.indicator).ok()
    }

    fn consistency_region(&self) -> usize {
        self.indicator.region_pixels(self.vessel)
    }
}
