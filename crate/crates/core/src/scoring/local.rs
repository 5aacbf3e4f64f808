//! Per-point sampling around a curve, local score equations, aggregation and
//! the sign-consistency test.

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::scan::CandidateCurve;
use crate::vessel::VesselRegion;

use super::{Aggregation, LocalEquation};

/// Image measurements around one curve point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSample {
    pub x: usize,
    /// Mean of the window pixels above the curve.
    pub u: f64,
    /// Mean of the window pixels on or below the curve.
    pub d: f64,
    /// `U - D`, computed from the window sums so that it is exact for
    /// integer-valued planes.
    pub diff: f64,
    /// Pixel value on the curve.
    pub i: f64,
    pub theta: f64,
    /// Gradient direction at the curve pixel; `None` where the gradient vanishes.
    pub phi: Option<f64>,
}

/// Pixel value if `(x, y)` is inside the image and its column lies within
/// the vessel (rows past the floor or ceiling use the nearest interior row).
#[inline]
pub(crate) fn pixel(plane: &GrayImage, vessel: &VesselRegion, x: i64, y: i64) -> Option<f64> {
    let v = plane.try_get(x, y)?;
    vessel.contains_clamped(x, y).then_some(v)
}

/// A curve must keep at least half of its points to be scored.
pub(crate) fn enough_points(kept: usize, total: usize) -> Result<()> {
    if kept == 0 || 2 * kept < total {
        Err(Error::Unsampleable)
    } else {
        Ok(())
    }
}

/// Window samples for every point of `curve`.
///
/// The window of a point spans its own column and both neighbors. In each
/// window column the curve locus splits the pixels: `region_height` rows
/// directly above the locus go to `U`, the locus row and the
/// `region_height - 1` rows below it go to `D`. Points whose window leaves
/// the curve's column span, the image or the vessel are dropped.
pub fn local_samples_m1(
    curve: &CandidateCurve,
    plane: &GrayImage,
    vessel: &VesselRegion,
    region_height: usize,
) -> Result<Vec<LocalSample>> {
    if region_height == 0 {
        return Err(Error::Param("region height must be at least 1".into()));
    }
    let k = region_height as i64;
    // per-column sums of the above / on-and-below strips; None if any pixel is invalid
    let columns: Vec<Option<(f64, f64, f64)>> = curve
        .points
        .iter()
        .map(|p| {
            let (x, yc) = (p.x as i64, p.row());
            let mut up = 0.0;
            for y in yc - k..yc {
                up += pixel(plane, vessel, x, y)?;
            }
            let on = pixel(plane, vessel, x, yc)?;
            let mut down = on;
            for y in yc + 1..yc + k {
                down += pixel(plane, vessel, x, y)?;
            }
            Some((up, down, on))
        })
        .collect();

    let n = 3.0 * k as f64;
    let mut out = Vec::with_capacity(curve.points.len());
    for (i, p) in curve.points.iter().enumerate() {
        if i == 0 || i + 1 == curve.points.len() {
            continue;
        }
        let (Some(a), Some(b), Some(c)) = (columns[i - 1], columns[i], columns[i + 1]) else {
            continue;
        };
        out.push(LocalSample {
            x: p.x,
            u: (a.0 + b.0 + c.0) / n,
            d: (a.1 + b.1 + c.1) / n,
            diff: ((a.0 + b.0 + c.0) - (a.1 + b.1 + c.1)) / n,
            i: b.2,
            theta: p.theta,
            phi: None,
        });
    }
    enough_points(out.len(), curve.points.len())?;
    Ok(out)
}

/// Means of `U` and `D` over a curve's samples.
pub fn curve_means(samples: &[LocalSample]) -> (f64, f64) {
    let n = samples.len() as f64;
    (
        samples.iter().map(|s| s.u).sum::<f64>() / n,
        samples.iter().map(|s| s.d).sum::<f64>() / n,
    )
}

fn relative(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Evaluates a point-wise equation. `means` is `(mean U, mean D)` over the
/// curve and is read only by [`LocalEquation::GlobalRelUMinusD`].
pub fn local_score(s: &LocalSample, equation: LocalEquation, means: (f64, f64)) -> Result<f64> {
    let diff = s.diff;
    Ok(match equation {
        LocalEquation::UMinusD => diff,
        LocalEquation::RelUMinusD => relative(diff, s.u.max(s.d)),
        LocalEquation::AbsUMinusD => diff.abs(),
        LocalEquation::AbsRelUMinusD => relative(diff.abs(), s.u.max(s.d)),
        LocalEquation::GlobalRelUMinusD => relative(diff, means.0.max(means.1)),
        LocalEquation::I => s.i,
        LocalEquation::ICosThetaPhi => match s.phi {
            Some(phi) => s.i * (s.theta - phi).cos(),
            None => 0.0,
        },
        other => {
            return Err(Error::Param(format!("{other:?} is not a point-wise equation")));
        }
    })
}

/// 1-based ascending rank `ceil(fraction * n)`, at least 1.
fn rank(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

/// The value at ascending rank `ceil(fraction * n)`.
pub(crate) fn lower_percentile(scores: &[f64], fraction: f64) -> f64 {
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[rank(fraction, sorted.len()) - 1]
}

/// Share of points that must lie at or above the percentile score.
pub const PERCENTILE_COVERAGE: f64 = 0.65;

/// Combines local scores into a curve score.
///
/// `Average` is the absolute value of the mean. `Percentile65` is the larger
/// of the highest positive value reached by 65% of the scores and the
/// magnitude of the lowest negative value that 65% of the scores stay
/// below; it is 0 when neither exists.
pub fn aggregate(scores: &[f64], mode: Aggregation) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("local scores"));
    }
    match mode {
        Aggregation::Average => Ok((scores.iter().sum::<f64>() / scores.len() as f64).abs()),
        Aggregation::Percentile65 => {
            let tail = 1.0 - PERCENTILE_COVERAGE;
            let positive = lower_percentile(scores, tail);
            let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
            let negative = lower_percentile(&negated, tail);
            Ok(positive.max(negative).max(0.0))
        }
        Aggregation::AsIs => Err(Error::Param("as-is scores are not aggregated from local scores".into())),
    }
}

/// Parameters of the sign-consistency test.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsistencyParams {
    pub enabled: bool,
    /// Share of points that must agree in sign.
    pub frac: f64,
    /// Smallest relative intensity change that counts.
    pub min_change: f64,
}

impl Default for ConsistencyParams {
    fn default() -> Self {
        Self {
            enabled: false,
            frac: 0.85,
            min_change: 0.10,
        }
    }
}

impl ConsistencyParams {
    pub fn on() -> Self {
        Self {
            enabled: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frac > 0.0 && self.frac <= 1.0) || !(self.min_change >= 0.0) {
            return Err(Error::Param(format!(
                "consistency check needs frac in (0, 1] and min_change >= 0, got {} and {}",
                self.frac, self.min_change
            )));
        }
        Ok(())
    }
}

/// True if at least `frac` of the relative changes share one sign and reach
/// `min_change` in magnitude.
pub fn consistent_scores(rel: &[f64], frac: f64, min_change: f64) -> bool {
    if rel.is_empty() {
        return false;
    }
    let tail = 1.0 - frac;
    if lower_percentile(rel, tail) > min_change {
        return true;
    }
    let negated: Vec<f64> = rel.iter().map(|s| -s).collect();
    lower_percentile(&negated, tail) > min_change
}

/// Sign-consistency of the grayscale relative intensity change along `curve`.
/// Unsampleable curves fail.
pub fn consistency_check(
    curve: &CandidateCurve,
    gray: &GrayImage,
    vessel: &VesselRegion,
    region_height: usize,
    params: &ConsistencyParams,
) -> bool {
    let Ok(samples) = local_samples_m1(curve, gray, vessel, region_height) else {
        return false;
    };
    let rel: Vec<f64> = samples
        .iter()
        .map(|s| relative(s.diff, s.u.max(s.d)))
        .collect();
    consistent_scores(&rel, params.frac, params.min_change)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::scan::Half;
    use crate::vessel::RowExtent;

    fn full_vessel(w: usize, h: usize) -> VesselRegion {
        let extents = (0..h).map(|_| RowExtent { x_left: 0, x_right: w - 1 }).collect();
        VesselRegion::from_extents(w, h, 0, extents).unwrap()
    }

    fn sample(u: f64, d: f64) -> LocalSample {
        LocalSample {
            x: 0,
            u,
            d,
            diff: u - d,
            i: 0.0,
            theta: std::f64::consts::FRAC_PI_2,
            phi: None,
        }
    }

    /// Straight loops over the two window strips of one point.
    fn window_means(img: &GrayImage, curve: &CandidateCurve, idx: usize, k: i64) -> (f64, f64) {
        let (mut u, mut d) = (0.0, 0.0);
        for j in idx - 1..=idx + 1 {
            let p = curve.points[j];
            let yc = p.y.round() as i64;
            for dy in 1..=k {
                u += img.get(p.x, (yc - dy) as usize);
            }
            for dy in 0..k {
                d += img.get(p.x, (yc + dy) as usize);
            }
        }
        (u / (3 * k) as f64, d / (3 * k) as f64)
    }

    #[test]
    fn uniform_image_has_equal_windows() {
        let img = GrayImage::filled(30, 30, 100.0).unwrap();
        let v = full_vessel(30, 30);
        let c = CandidateCurve::half_ellipse(15, 2, 27, 4, Half::Upper).unwrap();
        let s = local_samples_m1(&c, &img, &v, 1).unwrap();
        assert_eq!(s.len(), c.points.len() - 2);
        assert!(s.iter().all(|s| s.u == 100.0 && s.d == 100.0));
    }

    #[test]
    fn two_bands_at_and_away_from_the_boundary() {
        let r = 12;
        let img = GrayImage::from_fn(30, 30, |_, y| if y < r { 200.0 } else { 100.0 }).unwrap();
        let v = full_vessel(30, 30);
        let at = CandidateCurve::line(r, 3, 26);
        for (idx, s) in local_samples_m1(&at, &img, &v, 1).unwrap().iter().enumerate() {
            assert_eq!((s.u, s.d), (200.0, 100.0));
            assert_eq!((s.u, s.d), window_means(&img, &at, idx + 1, 1));
        }
        let below = CandidateCurve::line(r + 3, 3, 26);
        assert!(local_samples_m1(&below, &img, &v, 1)
            .unwrap()
            .iter()
            .all(|s| s.u == 100.0 && s.d == 100.0));
        // taller windows straddle the boundary
        let s = local_samples_m1(&below, &img, &v, 4).unwrap();
        assert_eq!((s[0].u, s[0].d), window_means(&img, &below, 1, 4));
        assert_eq!(s[0].u, 125.0);
    }

    #[test]
    fn ellipse_windows_match_direct_loops() {
        let img = GrayImage::from_fn(40, 40, |x, y| ((x * 7 + y * 13) % 31) as f64).unwrap();
        let v = full_vessel(40, 40);
        for half in [Half::Upper, Half::Lower] {
            let c = CandidateCurve::half_ellipse(20, 4, 35, 7, half).unwrap();
            let s = local_samples_m1(&c, &img, &v, 2).unwrap();
            for (j, s) in s.iter().enumerate() {
                let (u, d) = window_means(&img, &c, j + 1, 2);
                assert!((s.u - u).abs() < 1e-12 && (s.d - d).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn curve_leaving_the_image_is_unsampleable() {
        let img = GrayImage::filled(10, 10, 1.0).unwrap();
        let v = full_vessel(10, 10);
        let c = CandidateCurve::line(0, 0, 9);
        assert!(matches!(local_samples_m1(&c, &img, &v, 1), Err(Error::Unsampleable)));
    }

    #[test]
    fn local_equations() {
        let s = sample(200.0, 100.0);
        let m = (0.0, 0.0);
        assert_eq!(local_score(&s, LocalEquation::RelUMinusD, m).unwrap(), 0.5);
        assert_eq!(local_score(&s, LocalEquation::UMinusD, m).unwrap(), 100.0);
        assert_eq!(local_score(&sample(100.0, 200.0), LocalEquation::AbsRelUMinusD, m).unwrap(), 0.5);
        assert_eq!(local_score(&sample(100.0, 200.0), LocalEquation::AbsUMinusD, m).unwrap(), 100.0);
        assert_eq!(local_score(&s, LocalEquation::GlobalRelUMinusD, (150.0, 250.0)).unwrap(), 0.4);
        for eq in [
            LocalEquation::UMinusD,
            LocalEquation::RelUMinusD,
            LocalEquation::AbsUMinusD,
            LocalEquation::AbsRelUMinusD,
            LocalEquation::GlobalRelUMinusD,
        ] {
            assert_eq!(local_score(&sample(70.0, 70.0), eq, (70.0, 10.0)).unwrap(), 0.0);
            assert_eq!(local_score(&sample(0.0, 0.0), eq, (0.0, 0.0)).unwrap(), 0.0);
        }
        let mut e = sample(0.0, 0.0);
        e.i = 1.0;
        e.phi = Some(std::f64::consts::FRAC_PI_2);
        assert!((local_score(&e, LocalEquation::ICosThetaPhi, m).unwrap() - 1.0).abs() < 1e-15);
        e.phi = Some(0.0);
        assert!(local_score(&e, LocalEquation::ICosThetaPhi, m).unwrap().abs() < 1e-15);
        e.phi = None;
        assert_eq!(local_score(&e, LocalEquation::ICosThetaPhi, m).unwrap(), 0.0);
        assert!(local_score(&e, LocalEquation::DiffIA, m).is_err());
    }

    #[test]
    fn aggregation_fixtures() {
        let flat = vec![0.2; 10];
        assert!((aggregate(&flat, Aggregation::Average).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(aggregate(&flat, Aggregation::Percentile65).unwrap(), 0.2);

        let mut split = vec![0.3; 50];
        split.extend(vec![-0.3; 50]);
        assert!(aggregate(&split, Aggregation::Average).unwrap() < 1e-12);
        // 35th ascending value is -0.3 both ways round: no side reaches 65%
        assert_eq!(aggregate(&split, Aggregation::Percentile65).unwrap(), 0.0);

        let mut skew = vec![0.2; 70];
        skew.extend(vec![0.9; 30]);
        assert_eq!(aggregate(&skew, Aggregation::Percentile65).unwrap(), 0.2);

        let mut neg = vec![-0.4; 80];
        neg.extend(vec![0.7; 20]);
        assert_eq!(aggregate(&neg, Aggregation::Percentile65).unwrap(), 0.4);

        assert!(matches!(aggregate(&[], Aggregation::Average), Err(Error::EmptyInput(_))));
        assert!(aggregate(&flat, Aggregation::AsIs).is_err());
    }

    #[test]
    fn consistency_fixtures() {
        assert!(consistent_scores(&[0.2; 20], 0.85, 0.1));
        assert!(!consistent_scores(&[0.05; 20], 0.85, 0.1));
        let mut mixed = vec![-0.3; 90];
        mixed.extend(vec![0.5; 10]);
        assert!(consistent_scores(&mixed, 0.85, 0.1));
        let mut weak = vec![-0.3; 80];
        weak.extend(vec![0.5; 20]);
        assert!(!consistent_scores(&weak, 0.85, 0.1));
        assert!(!consistent_scores(&[], 0.85, 0.1));
    }

    #[test]
    fn consistency_on_band_image() {
        let img = GrayImage::from_fn(30, 30, |_, y| if y < 12 { 200.0 } else { 100.0 }).unwrap();
        let v = full_vessel(30, 30);
        let p = ConsistencyParams::on();
        assert!(consistency_check(&CandidateCurve::line(12, 2, 27), &img, &v, 1, &p));
        assert!(!consistency_check(&CandidateCurve::line(20, 2, 27), &img, &v, 1, &p));
        assert!(!consistency_check(&CandidateCurve::line(0, 2, 27), &img, &v, 1, &p));
    }

    proptest! {
        #[test]
        fn percentile_is_bounded(scores in proptest::collection::vec(-5.0f64..5.0, 1..200)) {
            let p = aggregate(&scores, Aggregation::Percentile65).unwrap();
            let max_abs = scores.iter().fold(0.0f64, |m, s| m.max(s.abs()));
            prop_assert!(p >= 0.0 && p <= max_abs);
        }

        #[test]
        fn average_is_bounded_by_mean_abs(scores in proptest::collection::vec(-5.0f64..5.0, 1..200)) {
            let avg = aggregate(&scores, Aggregation::Average).unwrap();
            let abs: Vec<f64> = scores.iter().map(|s| s.abs()).collect();
            prop_assert!(avg <= aggregate(&abs, Aggregation::Average).unwrap() + 1e-12);
        }
    }
}
