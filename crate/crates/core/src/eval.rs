//! Scoring detection reports against ground truth.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::detector::{DetectionReport, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::select::DetectedCurve;
use crate::synth::{GroundTruth, SurfaceType};

/// When a detection counts as a given true surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchRule {
    /// Largest center-row difference of a match.
    pub row_tolerance: usize,
    /// Height tolerance as a fraction of the true semi-axis...
    pub height_fraction: f64,
    /// ...but never below this many pixels.
    pub min_height_tolerance: f64,
}

impl Default for MatchRule {
    fn default() -> Self {
        Self {
            row_tolerance: 2,
            height_fraction: 0.2,
            min_height_tolerance: 2.0,
        }
    }
}

impl MatchRule {
    pub fn validate(&self) -> Result<()> {
        if !(self.height_fraction >= 0.0) || !(self.min_height_tolerance >= 0.0) {
            return Err(Error::Param("match tolerances must be non-negative".into()));
        }
        Ok(())
    }

    pub fn height_tolerance(&self, true_h: f64) -> f64 {
        (self.height_fraction * true_h).max(self.min_height_tolerance)
    }
}

/// What happened to one true surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceOutcome {
    pub center_row: usize,
    #[serde(rename = "type")]
    pub kind: SurfaceType,
    pub emulsion: bool,
    /// Row of the detection matched to it.
    pub matched_row: Option<usize>,
    pub wrong_shape: bool,
    /// Further detections that landed on it.
    pub duplicates: usize,
}

/// Per-image matching result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageTally {
    pub image_id: String,
    pub surfaces: Vec<SurfaceOutcome>,
    pub detections: usize,
    pub false_matches: usize,
}

impl ImageTally {
    fn count(&self, pred: impl Fn(&SurfaceOutcome) -> bool) -> usize {
        self.surfaces.iter().filter(|s| pred(s)).count()
    }

    pub fn missed(&self) -> usize {
        self.count(|s| s.matched_row.is_none())
    }

    pub fn double_recognitions(&self) -> usize {
        self.surfaces.iter().map(|s| s.duplicates).sum()
    }
}

fn detection_order(a: &DetectedCurve, b: &DetectedCurve) -> std::cmp::Ordering {
    b.effective_score()
        .total_cmp(&a.effective_score())
        .then(a.center_row.cmp(&b.center_row))
        .then(a.h.cmp(&b.h))
}

/// Greedy best-score-first matching of the accepted interior curves of
/// `report` against `truth`.
///
/// Each detection takes the nearest unmatched true surface within the row
/// tolerance. A detection within tolerance of only already matched surfaces
/// is a double recognition; one near no surface is a false match.
pub fn match_detections(report: &DetectionReport, truth: &GroundTruth, rule: &MatchRule) -> Result<ImageTally> {
    if report.image_id != truth.image_id {
        return Err(Error::IdMismatch {
            report: report.image_id.clone(),
            truth: truth.image_id.clone(),
        });
    }
    rule.validate()?;
    let mut outcomes: Vec<SurfaceOutcome> = truth
        .surfaces
        .iter()
        .map(|s| SurfaceOutcome {
            center_row: s.center_row,
            kind: s.kind,
            emulsion: s.emulsion,
            matched_row: None,
            wrong_shape: false,
            duplicates: 0,
        })
        .collect();
    let mut detections = report.accepted.clone();
    detections.sort_by(detection_order);
    let mut false_matches = 0;
    for d in &detections {
        let near = |matched: bool| {
            truth
                .surfaces
                .iter()
                .enumerate()
                .filter(|&(i, s)| {
                    s.center_row.abs_diff(d.center_row) <= rule.row_tolerance
                        && outcomes[i].matched_row.is_some() == matched
                })
                .min_by_key(|&(i, s)| (s.center_row.abs_diff(d.center_row), i))
                .map(|(i, _)| i)
        };
        if let Some(i) = near(false) {
            let t = &truth.surfaces[i];
            outcomes[i].matched_row = Some(d.center_row);
            outcomes[i].wrong_shape = (d.h as f64 - t.h_exact).abs() > rule.height_tolerance(t.h_exact);
        } else if let Some(i) = near(true) {
            outcomes[i].duplicates += 1;
        } else {
            false_matches += 1;
        }
    }
    Ok(ImageTally {
        image_id: truth.image_id.clone(),
        surfaces: outcomes,
        detections: detections.len(),
        false_matches,
    })
}

/// Corpus-level statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub config_fingerprint: Option<String>,
    pub rule: MatchRule,
    pub images: usize,
    pub surfaces: usize,
    pub liquid_air: usize,
    pub liquid_liquid: usize,
    pub emulsive: usize,
    pub matched: usize,
    pub missed: usize,
    pub missed_liquid_air: usize,
    pub missed_liquid_liquid: usize,
    pub missed_emulsive: usize,
    pub false_matches: usize,
    pub wrong_shape: usize,
    pub double_recognitions: usize,
    pub miss_all: f64,
    pub miss_liquid_air: f64,
    pub miss_liquid_liquid: f64,
    pub false_per_image: f64,
    pub wrong_shape_fraction: f64,
    pub double_recognition_fraction: f64,
    pub emulsive_miss_fraction: f64,
    pub per_image: Vec<ImageTally>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Folds per-image tallies into corpus statistics. Fractions with an empty
/// denominator are 0. Wrong-shape and double-recognition fractions are taken
/// over all true surfaces.
pub fn aggregate_eval(tallies: Vec<ImageTally>, rule: MatchRule, config_fingerprint: Option<String>) -> Result<EvalReport> {
    if tallies.is_empty() {
        return Err(Error::EmptyInput("evaluation tallies"));
    }
    let all = || tallies.iter().flat_map(|t| t.surfaces.iter());
    let count = |pred: &dyn Fn(&SurfaceOutcome) -> bool| all().filter(|s| pred(s)).count();
    let is_la = |s: &SurfaceOutcome| s.kind == SurfaceType::LiquidAir;
    let is_ll = |s: &SurfaceOutcome| s.kind == SurfaceType::LiquidLiquid;
    let missed = |s: &SurfaceOutcome| s.matched_row.is_none();

    let surfaces = count(&|_| true);
    let liquid_air = count(&is_la);
    let liquid_liquid = count(&is_ll);
    let emulsive = count(&|s| s.emulsion);
    let n_missed = count(&missed);
    let missed_la = count(&|s| is_la(s) && missed(s));
    let missed_ll = count(&|s| is_ll(s) && missed(s));
    let missed_em = count(&|s| s.emulsion && missed(s));
    let false_matches: usize = tallies.iter().map(|t| t.false_matches).sum();
    let wrong_shape = count(&|s| s.wrong_shape);
    let double: usize = tallies.iter().map(ImageTally::double_recognitions).sum();
    let images = tallies.len();
    Ok(EvalReport {
        schema_version: SCHEMA_VERSION,
        config_fingerprint,
        rule,
        images,
        surfaces,
        liquid_air,
        liquid_liquid,
        emulsive,
        matched: surfaces - n_missed,
        missed: n_missed,
        missed_liquid_air: missed_la,
        missed_liquid_liquid: missed_ll,
        missed_emulsive: missed_em,
        false_matches,
        wrong_shape,
        double_recognitions: double,
        miss_all: ratio(n_missed, surfaces),
        miss_liquid_air: ratio(missed_la, liquid_air),
        miss_liquid_liquid: ratio(missed_ll, liquid_liquid),
        false_per_image: false_matches as f64 / images as f64,
        wrong_shape_fraction: ratio(wrong_shape, surfaces),
        double_recognition_fraction: ratio(double, surfaces),
        emulsive_miss_fraction: ratio(missed_em, emulsive),
        per_image: tallies,
    })
}

/// Percentage with one decimal, the granularity of the published tables.
pub fn percent(fraction: f64) -> String {
    format!("{:.1}", 100.0 * fraction)
}

impl EvalReport {
    /// Header and one row, tab separated.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "Missed all (%)\tMissed liquid-air (%)\tMissed liquid-liquid (%)\tFalse matches per image (%)\tWrong shape (%)\tDouble recognition (%)\tEmulsion miss (%)"
        );
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            percent(self.miss_all),
            percent(self.miss_liquid_air),
            percent(self.miss_liquid_liquid),
            percent(self.false_per_image),
            percent(self.wrong_shape_fraction),
            percent(self.double_recognition_fraction),
            percent(self.emulsive_miss_fraction),
        );
        s
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} images, {} surfaces ({} liquid-air, {} liquid-liquid, {} emulsive)",
            self.images, self.surfaces, self.liquid_air, self.liquid_liquid, self.emulsive
        )?;
        f.write_str(&self.table())
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::scan::Half;
    use crate::synth::TruthSurface;

    fn truth(rows: &[(usize, SurfaceType)]) -> GroundTruth {
        GroundTruth {
            schema_version: SCHEMA_VERSION,
            image_id: "a".into(),
            ceiling_row: 10,
            floor_row: 200,
            surfaces: rows
                .iter()
                .map(|&(r, kind)| TruthSurface {
                    center_row: r,
                    x_left: 20,
                    x_right: 120,
                    h: 0,
                    h_exact: 0.0,
                    view_height: 0.0,
                    kind,
                    emulsion: false,
                })
                .collect(),
        }
    }

    fn det(row: usize, h: usize, score: f64) -> DetectedCurve {
        DetectedCurve {
            center_row: row,
            x_left: 20,
            x_right: 120,
            h,
            half: Half::Line,
            score,
            consistent: true,
        }
    }

    fn report(accepted: Vec<DetectedCurve>) -> DetectionReport {
        DetectionReport {
            schema_version: SCHEMA_VERSION,
            image_id: "a".into(),
            config_fingerprint: String::new(),
            ceiling_row: 10,
            floor_row: 200,
            ceiling_score: None,
            floor_score: None,
            best_score: 1.0,
            threshold_score: 0.4,
            min_separation: 1,
            accepted,
        }
    }

    const LA: SurfaceType = SurfaceType::LiquidAir;
    const LL: SurfaceType = SurfaceType::LiquidLiquid;

    #[test]
    fn near_detection_matches() {
        let t = match_detections(&report(vec![det(101, 0, 1.0)]), &truth(&[(100, LA)]), &MatchRule::default()).unwrap();
        assert_eq!((t.missed(), t.false_matches, t.double_recognitions()), (0, 0, 0));
        assert_eq!(t.surfaces[0].matched_row, Some(101));
    }

    #[test]
    fn second_detection_is_a_double() {
        let r = report(vec![det(101, 0, 1.0), det(103, 0, 0.9)]);
        let t = match_detections(&r, &truth(&[(100, LA)]), &MatchRule::default()).unwrap();
        assert_eq!((t.missed(), t.false_matches, t.double_recognitions()), (0, 1, 0));
        // 103 is 3 rows away; at tolerance 3 it is a double recognition
        let rule = MatchRule {
            row_tolerance: 3,
            ..MatchRule::default()
        };
        let t = match_detections(&r, &truth(&[(100, LA)]), &rule).unwrap();
        assert_eq!((t.missed(), t.false_matches, t.double_recognitions()), (0, 0, 1));
    }

    #[test]
    fn best_score_matches_first() {
        let r = report(vec![det(102, 0, 0.5), det(99, 0, 0.9)]);
        let rule = MatchRule {
            row_tolerance: 3,
            ..MatchRule::default()
        };
        let t = match_detections(&r, &truth(&[(100, LA)]), &rule).unwrap();
        assert_eq!(t.surfaces[0].matched_row, Some(99));
        assert_eq!(t.surfaces[0].duplicates, 1);
    }

    #[test]
    fn no_detections_miss_everything() {
        let t = match_detections(&report(vec![]), &truth(&[(60, LA), (120, LL)]), &MatchRule::default()).unwrap();
        let e = aggregate_eval(vec![t], MatchRule::default(), None).unwrap();
        assert_eq!((e.miss_all, e.false_per_image), (1.0, 0.0));
    }

    #[test]
    fn wrong_shape_uses_the_height_tolerance() {
        let mut tr = truth(&[(100, LA)]);
        tr.surfaces[0].h_exact = 20.0;
        let rule = MatchRule::default();
        assert_eq!(rule.height_tolerance(20.0), 4.0);
        assert_eq!(rule.height_tolerance(3.0), 2.0);
        let ok = match_detections(&report(vec![det(100, 24, 1.0)]), &tr, &rule).unwrap();
        assert!(!ok.surfaces[0].wrong_shape);
        let bad = match_detections(&report(vec![det(100, 25, 1.0)]), &tr, &rule).unwrap();
        assert!(bad.surfaces[0].wrong_shape);
        assert_eq!(bad.missed(), 0);
    }

    #[test]
    fn id_mismatch_is_an_error() {
        let mut r = report(vec![]);
        r.image_id = "b".into();
        assert!(matches!(
            match_detections(&r, &truth(&[]), &MatchRule::default()),
            Err(Error::IdMismatch { .. })
        ));
        assert!(aggregate_eval(vec![], MatchRule::default(), None).is_err());
    }

    #[test]
    fn table_has_one_decimal_percentages() {
        let tallies = (0..147)
            .map(|i| ImageTally {
                image_id: format!("{i}"),
                surfaces: vec![SurfaceOutcome {
                    center_row: 50,
                    kind: LA,
                    emulsion: false,
                    matched_row: (i != 0).then_some(50),
                    wrong_shape: false,
                    duplicates: 0,
                }],
                detections: 1,
                false_matches: 0,
            })
            .collect();
        let e = aggregate_eval(tallies, MatchRule::default(), None).unwrap();
        assert_eq!(percent(e.miss_liquid_air), "0.7");
        let table = e.table();
        assert!(table.lines().nth(1).unwrap().starts_with("0.7\t0.7\t0.0\t"));
    }

    fn arb_tally() -> impl Strategy<Value = ImageTally> {
        (
            proptest::collection::vec((any::<bool>(), any::<bool>(), any::<bool>(), 0usize..3), 0..4),
            0usize..4,
        )
            .prop_map(|(s, false_matches)| ImageTally {
                image_id: "x".into(),
                detections: 0,
                false_matches,
                surfaces: s
                    .into_iter()
                    .map(|(la, hit, emulsion, duplicates)| SurfaceOutcome {
                        center_row: 0,
                        kind: if la { LA } else { LL },
                        emulsion,
                        matched_row: hit.then_some(0),
                        wrong_shape: false,
                        duplicates,
                    })
                    .collect(),
            })
    }

    proptest! {
        #[test]
        fn counts_reconcile(tallies in proptest::collection::vec(arb_tally(), 1..30)) {
            let e = aggregate_eval(tallies, MatchRule::default(), None).unwrap();
            prop_assert_eq!(e.matched + e.missed, e.surfaces);
            prop_assert_eq!(e.liquid_air + e.liquid_liquid, e.surfaces);
            for f in [e.miss_all, e.miss_liquid_air, e.miss_liquid_liquid, e.wrong_shape_fraction, e.emulsive_miss_fraction] {
                prop_assert!((0.0..=1.0).contains(&f));
            }
            // miss_all is the count-weighted mean of the per-type fractions
            if e.surfaces > 0 {
                let weighted = (e.miss_liquid_air * e.liquid_air as f64 + e.miss_liquid_liquid * e.liquid_liquid as f64)
                    / e.surfaces as f64;
                prop_assert!((weighted - e.miss_all).abs() < 1e-12);
            }
        }

        #[test]
        fn matching_ignores_input_order(rows in proptest::collection::vec((20usize..180, 0.0f64..1.0), 0..8)) {
            let tr = truth(&[(50, LA), (53, LL), (120, LL)]);
            let dets: Vec<DetectedCurve> = rows.iter().map(|&(r, s)| det(r, 0, s)).collect();
            let mut rev = dets.clone();
            rev.reverse();
            let a = match_detections(&report(dets), &tr, &MatchRule::default()).unwrap();
            let b = match_detections(&report(rev), &tr, &MatchRule::default()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
