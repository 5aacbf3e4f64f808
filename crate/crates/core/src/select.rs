//! Turning scored candidates into accepted surfaces.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scan::Half;
use crate::scoring::ScoredCurve;
use crate::vessel::VesselRegion;

/// A scored curve reduced to what selection and reports need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectedCurve {
    pub center_row: usize,
    pub x_left: usize,
    pub x_right: usize,
    pub h: usize,
    pub half: Half,
    pub score: f64,
    pub consistent: bool,
}

impl DetectedCurve {
    /// The score that counts for selection: 0 if the curve failed consistency.
    pub fn effective_score(&self) -> f64 {
        if self.consistent {
            self.score
        } else {
            0.0
        }
    }
}

impl From<&ScoredCurve> for DetectedCurve {
    fn from(s: &ScoredCurve) -> Self {
        Self {
            center_row: s.curve.center_row,
            x_left: s.curve.x_left,
            x_right: s.curve.x_right,
            h: s.curve.h,
            half: s.source,
            score: s.score,
            consistent: s.consistent,
        }
    }
}

/// Descending score; ties go to the smaller row, then the smaller height.
pub fn rank_order(a: &DetectedCurve, b: &DetectedCurve) -> Ordering {
    b.effective_score()
        .total_cmp(&a.effective_score())
        .then(a.center_row.cmp(&b.center_row))
        .then(a.h.cmp(&b.h))
        .then(half_rank(a.half).cmp(&half_rank(b.half)))
        .then(a.x_left.cmp(&b.x_left))
}

fn half_rank(h: Half) -> u8 {
    match h {
        Half::Upper => 0,
        Half::Lower => 1,
        Half::Line => 2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionParams {
    /// Accept curves scoring at least this fraction of the best score.
    pub threshold: f64,
    /// Smallest row distance between two accepted curves; derived from the
    /// vessel height when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_separation: Option<usize>,
    /// Accept exactly this many surfaces instead of thresholding.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_phases: Option<usize>,
}

impl Default for SelectionParams {
    fn default() -> Self {
        Self {
            threshold: 0.4,
            min_separation: None,
            n_phases: None,
        }
    }
}

impl SelectionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Param(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if self.n_phases == Some(0) {
            return Err(Error::Param("n_phases must be positive".into()));
        }
        Ok(())
    }

    /// `min_separation`, or `max(3, 2% of the vessel height)`.
    pub fn separation(&self, vessel: &VesselRegion) -> usize {
        self.min_separation
            .unwrap_or_else(|| default_separation(vessel.height()))
    }
}

pub fn default_separation(vessel_height: usize) -> usize {
    ((0.02 * vessel_height as f64).round() as usize).max(3)
}

/// Keeps curves in rank order, dropping any whose row is closer than
/// `min_separation` to an already kept one.
pub fn suppress_duplicates(curves: &[DetectedCurve], min_separation: usize) -> Vec<DetectedCurve> {
    let mut sorted = curves.to_vec();
    sorted.sort_by(rank_order);
    let mut kept: Vec<DetectedCurve> = Vec::new();
    for c in sorted {
        if kept.iter().all(|k| k.center_row.abs_diff(c.center_row) >= min_separation) {
            kept.push(c);
        }
    }
    kept
}

/// Outcome of selection on one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Accepted interior surfaces, top to bottom.
    pub accepted: Vec<DetectedCurve>,
    pub best_score: f64,
    pub threshold_score: f64,
    pub min_separation: usize,
}

/// Selects interior surfaces.
///
/// `boundaries` are the ceiling and floor scores; they compete for the best
/// score but are never accepted as interior surfaces, and interior curves
/// closer than the separation to the ceiling or floor row are dropped.
pub fn select(
    interior: &[DetectedCurve],
    boundaries: &[f64],
    vessel: &VesselRegion,
    params: &SelectionParams,
) -> Result<Selection> {
    params.validate()?;
    if interior.is_empty() && boundaries.is_empty() {
        return Err(Error::EmptyInput("scored curves"));
    }
    let min_separation = params.separation(vessel);
    let best = interior
        .iter()
        .map(DetectedCurve::effective_score)
        .chain(boundaries.iter().copied())
        .fold(0.0, f64::max);
    let (top, bottom) = vessel.floor_ceiling();
    let away_from_boundaries = |c: &&DetectedCurve| {
        c.center_row.abs_diff(top) >= min_separation && c.center_row.abs_diff(bottom) >= min_separation
    };

    let (threshold_score, mut accepted) = match params.n_phases {
        None => {
            let t = params.threshold * best;
            let pool: Vec<DetectedCurve> = interior
                .iter()
                .filter(|c| c.effective_score() > 0.0 && c.effective_score() >= t)
                .filter(away_from_boundaries)
                .copied()
                .collect();
            (t, suppress_duplicates(&pool, min_separation))
        }
        Some(n) => {
            let pool: Vec<DetectedCurve> = interior
                .iter()
                .filter(|c| c.effective_score() > 0.0)
                .filter(away_from_boundaries)
                .copied()
                .collect();
            let mut kept = suppress_duplicates(&pool, min_separation);
            kept.truncate(n);
            let t = kept.last().map_or(0.0, DetectedCurve::effective_score);
            (t, kept)
        }
    };
    accepted.sort_by_key(|c| (c.center_row, c.h));
    Ok(Selection {
        accepted,
        best_score: best,
        threshold_score,
        min_separation,
    })
}
