//! The per-image pipeline: planes, candidate scan, scoring and selection.

use serde::{Deserialize, Serialize};

use crate::config::DetectorConfig;
use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::par::{self, Execution};
use crate::scan::{boundary_candidates, candidates_for_key, scan_keys, ellipse_half_points, CandidateCurve, Half, ScanKey};
use crate::scoring::{score_ellipse, CurveScorer, ImagePlanes, Method};
use crate::select::{select, DetectedCurve, Selection, SelectionParams};
use crate::vessel::VesselRegion;

/// Version of every JSON document this crate writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Every scored candidate of one image, ready for (re)selection.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredImage {
    /// One entry per scan step that produced a scorable curve, in scan order.
    pub interior: Vec<DetectedCurve>,
    pub ceiling: Option<DetectedCurve>,
    pub floor: Option<DetectedCurve>,
}

impl ScoredImage {
    fn boundary_scores(&self) -> Vec<f64> {
        self.ceiling
            .iter()
            .chain(&self.floor)
            .map(DetectedCurve::effective_score)
            .collect()
    }

    pub fn select(&self, vessel: &VesselRegion, params: &SelectionParams) -> Result<Selection> {
        select(&self.interior, &self.boundary_scores(), vessel, params)
    }
}

/// Accepted surfaces of one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub schema_version: u32,
    pub image_id: String,
    pub config_fingerprint: String,
    pub ceiling_row: usize,
    pub floor_row: usize,
    pub ceiling_score: Option<f64>,
    pub floor_score: Option<f64>,
    pub best_score: f64,
    pub threshold_score: f64,
    pub min_separation: usize,
    /// Interior surfaces, top to bottom.
    pub accepted: Vec<DetectedCurve>,
}

fn check_size(planes: &ImagePlanes, vessel: &VesselRegion) -> Result<()> {
    if planes.width() != vessel.image_width() || planes.height() != vessel.image_height() {
        return Err(Error::Vessel(format!(
            "vessel is {}x{} but image is {}x{}",
            vessel.image_width(),
            vessel.image_height(),
            planes.width(),
            planes.height()
        )));
    }
    Ok(())
}

fn score_key(scorer: &CurveScorer<'_>, vessel: &VesselRegion, key: ScanKey) -> Option<DetectedCurve> {
    let cands = candidates_for_key(vessel, key);
    if scorer.indicator.method == Method::Interior {
        // the whole ellipse must fit; it is scored once through its upper half
        if key.h == 0 || cands.len() != 2 {
            return None;
        }
        return scorer.score(&cands[0]).map(|s| DetectedCurve::from(&s));
    }
    let mut scored = cands.iter().filter_map(|c| scorer.score(c));
    let first = scored.next()?;
    let best = match scored.next() {
        Some(second) => score_ellipse(first, second),
        None => first,
    };
    Some(DetectedCurve::from(&best))
}

/// Scores every candidate of the image plus the ceiling and floor lines.
pub fn score_image(
    planes: &ImagePlanes,
    vessel: &VesselRegion,
    config: &DetectorConfig,
    exec: Execution,
) -> Result<ScoredImage> {
    check_size(planes, vessel)?;
    let scorer = CurveScorer::new(planes, vessel, config.indicator, config.consistency)?;
    let keys = scan_keys(vessel, &config.scan)?;
    let interior = par::map(exec, &keys, |&k| score_key(&scorer, vessel, k))
        .into_iter()
        .flatten()
        .collect();
    let (ceiling, floor) = boundary_candidates(vessel);
    let boundary = |c: &CandidateCurve| {
        scorer.score_boundary(c).map(|s| DetectedCurve::from(&s))
    };
    Ok(ScoredImage {
        interior,
        ceiling: boundary(&ceiling),
        floor: boundary(&floor),
    })
}

/// A configured detector.
#[derive(Debug, Clone)]
pub struct Detector {
    config: DetectorConfig,
    exec: Execution,
    fingerprint: String,
}

impl Detector {
    pub fn new(config: DetectorConfig) -> Result<Self> {
        config.validate()?;
        let fingerprint = config.fingerprint();
        Ok(Self {
            config,
            exec: Execution::default(),
            fingerprint,
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn planes(&self, img: &RgbImage) -> Result<ImagePlanes> {
        ImagePlanes::from_rgb(img, &self.config.canny)
    }

    pub fn score(&self, img: &RgbImage, vessel: &VesselRegion) -> Result<ScoredImage> {
        let planes = self.planes(img)?;
        score_image(&planes, vessel, &self.config, self.exec)
    }

    /// Builds the report for one selection of a scored image.
    pub fn report(
        &self,
        image_id: &str,
        vessel: &VesselRegion,
        scored: &ScoredImage,
        selection: Selection,
    ) -> DetectionReport {
        let (ceiling_row, floor_row) = vessel.floor_ceiling();
        DetectionReport {
            schema_version: SCHEMA_VERSION,
            image_id: image_id.to_string(),
            config_fingerprint: self.fingerprint.clone(),
            ceiling_row,
            floor_row,
            ceiling_score: scored.ceiling.map(|c| c.score),
            floor_score: scored.floor.map(|c| c.score),
            best_score: selection.best_score,
            threshold_score: selection.threshold_score,
            min_separation: selection.min_separation,
            accepted: selection.accepted,
        }
    }

    pub fn detect(&self, image_id: &str, img: &RgbImage, vessel: &VesselRegion) -> Result<DetectionReport> {
        let scored = self.score(img, vessel)?;
        let selection = scored.select(vessel, &self.config.selection)?;
        Ok(self.report(image_id, vessel, &scored, selection))
    }
}

/// Pixels of a reported curve.
pub fn curve_pixels(c: &DetectedCurve) -> Vec<(usize, i64)> {
    if c.x_left >= c.x_right {
        return vec![(c.x_left, c.center_row as i64)];
    }
    let half = if c.h == 0 { Half::Line } else { c.half };
    ellipse_half_points(c.center_row as f64, c.x_left, c.x_right, c.h as f64, half)
        .map(|pts| pts.iter().map(|p| (p.x, p.row())).collect())
        .unwrap_or_default()
}

/// Copy of `img` with the vessel outline in white and accepted curves in black.
pub fn annotate(img: &RgbImage, vessel: &VesselRegion, report: &DetectionReport) -> RgbImage {
    let mut out = img.clone();
    for (x, y) in vessel.outline() {
        if x < out.width() && y < out.height() {
            out.set(x, y, [255; 3]);
        }
    }
    for c in &report.accepted {
        for (x, y) in curve_pixels(c) {
            if y >= 0 && (y as usize) < out.height() && x < out.width() {
                out.set(x, y as usize, [0; 3]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vessel::RowExtent;

    fn band_scene(boundary: usize) -> (RgbImage, VesselRegion) {
        let img = RgbImage::from_fn(80, 100, |x, y| {
            if !(10..70).contains(&x) || !(10..90).contains(&y) {
                [15; 3]
            } else if y < boundary {
                [50; 3]
            } else {
                [170; 3]
            }
        })
        .unwrap();
        let extents = (10..90).map(|_| RowExtent { x_left: 10, x_right: 69 }).collect();
        (img, VesselRegion::from_extents(80, 100, 10, extents).unwrap())
    }

    #[test]
    fn band_boundary_is_found() {
        let (img, v) = band_scene(50);
        let det = Detector::new(DetectorConfig::default()).unwrap();
        let r = det.detect("a", &img, &v).unwrap();
        assert_eq!(r.accepted.len(), 1, "{:?}", r.accepted);
        assert!(r.accepted[0].center_row.abs_diff(50) <= 1);
        assert_eq!((r.ceiling_row, r.floor_row), (10, 89));
        assert_eq!(r.schema_version, SCHEMA_VERSION);
    }

    #[test]
    fn modes_agree() {
        let (img, v) = band_scene(40);
        let det = Detector::new(DetectorConfig::default()).unwrap();
        let a = det.clone().with_execution(Execution::Sequential).score(&img, &v).unwrap();
        let b = det.with_execution(Execution::Parallel).score(&img, &v).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let (img, _) = band_scene(40);
        let extents = (0..5).map(|_| RowExtent { x_left: 0, x_right: 5 }).collect();
        let v = VesselRegion::from_extents(10, 10, 0, extents).unwrap();
        let det = Detector::new(DetectorConfig::default()).unwrap();
        assert!(matches!(det.detect("a", &img, &v), Err(Error::Vessel(_))));
    }

    #[test]
    fn annotation_marks_outline_and_curves() {
        let (img, v) = band_scene(50);
        let det = Detector::new(DetectorConfig::default()).unwrap();
        let r = det.detect("a", &img, &v).unwrap();
        let out = annotate(&img, &v, &r);
        assert_eq!(out.get(10, 10), [255; 3]);
        assert_eq!(out.get(69, 60), [255; 3]);
        let c = r.accepted[0];
        assert_eq!(out.get(40, c.center_row), [0; 3]);
    }
}
