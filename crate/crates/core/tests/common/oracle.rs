//! Straightforward re-implementation of curve scoring for cross-checking.
//! Everything is recomputed from the pixel planes with plain loops.

use liquid_scan::scan::{CandidateCurve, Half};
use liquid_scan::scoring::{Aggregation, ImagePlanes, LocalEquation, Method, Plane};
use liquid_scan::{GrayImage, Indicator, VesselRegion};

fn readable(vessel: &VesselRegion, img: &GrayImage, x: i64, y: i64) -> Option<f64> {
    if x < 0 || y < 0 || x >= img.width() as i64 || y >= img.height() as i64 {
        return None;
    }
    let row = (y as usize).clamp(vessel.row_top(), vessel.row_bottom());
    let e = vessel.extent(row)?;
    if (x as usize) < e.x_left || (x as usize) > e.x_right {
        return None;
    }
    Some(img.get(x as usize, y as usize))
}

fn rows_of(curve: &CandidateCurve) -> Vec<(i64, i64)> {
    curve.points.iter().map(|p| (p.x as i64, p.y.round() as i64)).collect()
}

fn kept_enough(kept: usize, total: usize) -> bool {
    kept > 0 && kept * 2 >= total
}

fn percentile65(scores: &[f64]) -> f64 {
    let n = scores.len();
    // smallest rank r with r >= 0.35 n
    let r = ((35 * n + 99) / 100).max(1);
    let mut up = scores.to_vec();
    up.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut down: Vec<f64> = scores.iter().map(|v| -v).collect();
    down.sort_by(|a, b| a.partial_cmp(b).unwrap());
    up[r - 1].max(down[r - 1]).max(0.0)
}

fn combine(scores: &[f64], agg: Aggregation) -> f64 {
    match agg {
        Aggregation::Average => {
            let mut s = 0.0;
            for v in scores {
                s += v;
            }
            (s / scores.len() as f64).abs()
        }
        Aggregation::Percentile65 => percentile65(scores),
        Aggregation::AsIs => unreachable!(),
    }
}

fn safe_div(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

fn window_method(curve: &CandidateCurve, img: &GrayImage, vessel: &VesselRegion, ind: &Indicator) -> Option<f64> {
    let k = ind.region_pixels(vessel) as i64;
    let pts = rows_of(curve);
    let mut ups = Vec::new();
    let mut downs = Vec::new();
    'points: for i in 1..pts.len().saturating_sub(1) {
        let (mut u, mut d) = (0.0, 0.0);
        for &(x, yc) in &pts[i - 1..=i + 1] {
            for j in 1..=k {
                match readable(vessel, img, x, yc - j) {
                    Some(v) => u += v,
                    None => continue 'points,
                }
            }
            for j in 0..k {
                match readable(vessel, img, x, yc + j) {
                    Some(v) => d += v,
                    None => continue 'points,
                }
            }
        }
        let cnt = (3 * k) as f64;
        ups.push(u / cnt);
        downs.push(d / cnt);
    }
    if !kept_enough(ups.len(), pts.len()) {
        return None;
    }
    let mu = ups.iter().sum::<f64>() / ups.len() as f64;
    let md = downs.iter().sum::<f64>() / downs.len() as f64;
    let local: Vec<f64> = ups
        .iter()
        .zip(&downs)
        .map(|(&u, &d)| match ind.local_equation {
            LocalEquation::UMinusD => u - d,
            LocalEquation::RelUMinusD => safe_div(u - d, u.max(d)),
            LocalEquation::AbsUMinusD => (u - d).abs(),
            LocalEquation::AbsRelUMinusD => safe_div((u - d).abs(), u.max(d)),
            LocalEquation::GlobalRelUMinusD => safe_div(u - d, mu.max(md)),
            other => panic!("{other:?}"),
        })
        .collect();
    Some(combine(&local, ind.aggregation))
}

fn on_curve_method(
    curve: &CandidateCurve,
    img: &GrayImage,
    planes: &ImagePlanes,
    vessel: &VesselRegion,
    ind: &Indicator,
) -> Option<f64> {
    let mut local = Vec::new();
    for p in &curve.points {
        let y = p.y.round() as i64;
        let Some(v) = readable(vessel, img, p.x as i64, y) else {
            continue;
        };
        local.push(match ind.local_equation {
            LocalEquation::I => v,
            LocalEquation::ICosThetaPhi => match planes.gradient.direction(p.x, y as usize) {
                Some(phi) => v * (p.theta - phi).cos(),
                None => 0.0,
            },
            other => panic!("{other:?}"),
        });
    }
    if !kept_enough(local.len(), curve.points.len()) {
        return None;
    }
    Some(combine(&local, ind.aggregation))
}

fn above_method(curve: &CandidateCurve, img: &GrayImage, vessel: &VesselRegion, ind: &Indicator) -> Option<f64> {
    let (mut si, mut sa, mut n) = (0.0, 0.0, 0usize);
    for (x, y) in rows_of(curve) {
        if let (Some(i), Some(a)) = (readable(vessel, img, x, y), readable(vessel, img, x, y - 1)) {
            si += i;
            sa += a;
            n += 1;
        }
    }
    if !kept_enough(n, curve.points.len()) {
        return None;
    }
    let (i, a) = (si / n as f64, sa / n as f64);
    Some(match ind.local_equation {
        LocalEquation::DiffIA => (i - a).abs(),
        LocalEquation::RelDiffIA => safe_div((i - a).abs(), i.max(a)),
        LocalEquation::NormDiffIA => safe_div((i - a).abs(), i + a),
        other => panic!("{other:?}"),
    })
}

fn interior_method(curve: &CandidateCurve, img: &GrayImage, vessel: &VesselRegion) -> Option<f64> {
    if curve.half == Half::Line {
        return None;
    }
    let c = curve.center_row as f64;
    let a = (curve.x_right - curve.x_left) as f64 / 2.0;
    let cx = (curve.x_left + curve.x_right) as f64 / 2.0;
    let h = curve.h as f64;
    let (mut inside, mut n_in, mut ring, mut n_ring) = (0.0, 0usize, 0.0, 0usize);
    for x in curve.x_left..=curve.x_right {
        let u = ((x as f64 - cx) / a).clamp(-1.0, 1.0);
        let b = h * (1.0 - u * u).sqrt();
        let (top, bottom) = ((c - b).round() as i64, (c + b).round() as i64);
        let x = x as i64;
        for y in top + 1..bottom {
            if let Some(v) = readable(vessel, img, x, y) {
                inside += v;
                n_in += 1;
            }
        }
        for y in [top - 1, bottom + 1] {
            if let Some(v) = readable(vessel, img, x, y) {
                ring += v;
                n_ring += 1;
            }
        }
    }
    if n_in == 0 || n_ring == 0 {
        return None;
    }
    Some((inside / n_in as f64 - ring / n_ring as f64).abs())
}

fn on_plane(
    curve: &CandidateCurve,
    img: &GrayImage,
    planes: &ImagePlanes,
    vessel: &VesselRegion,
    ind: &Indicator,
) -> Option<f64> {
    match ind.method {
        Method::M1 => window_method(curve, img, vessel, ind),
        Method::M2 => on_curve_method(curve, img, planes, vessel, ind),
        Method::M3 => above_method(curve, img, vessel, ind),
        Method::Interior => interior_method(curve, img, vessel),
    }
}

/// Curve score without the consistency test; `None` if unsampleable.
pub fn score(curve: &CandidateCurve, planes: &ImagePlanes, vessel: &VesselRegion, ind: &Indicator) -> Option<f64> {
    match ind.plane {
        Plane::Gray => on_plane(curve, &planes.gray, planes, vessel, ind),
        Plane::Edge => on_plane(curve, &planes.edges, planes, vessel, ind),
        Plane::GradientSize => on_plane(curve, &planes.gradient_size, planes, vessel, ind),
        Plane::RgbAveraged => {
            let mut total = 0.0;
            for ch in &planes.channels {
                total += on_plane(curve, ch, planes, vessel, ind)?;
            }
            Some(total / 3.0)
        }
    }
}

/// Sign-consistency of the relative gray change, by counting. A branch
/// passes when fewer than `ceil((1 - frac) n)` points fail to clear
/// `min_change` on its side, which is the lower-percentile rule restated.
pub fn consistent(curve: &CandidateCurve, planes: &ImagePlanes, vessel: &VesselRegion, k: usize, frac: f64, min_change: f64) -> bool {
    let pts = rows_of(curve);
    let mut rel = Vec::new();
    let k = k as i64;
    'points: for i in 1..pts.len().saturating_sub(1) {
        let (mut u, mut d) = (0.0, 0.0);
        for &(x, yc) in &pts[i - 1..=i + 1] {
            for j in 1..=k {
                match readable(vessel, &planes.gray, x, yc - j) {
                    Some(v) => u += v,
                    None => continue 'points,
                }
            }
            for j in 0..k {
                match readable(vessel, &planes.gray, x, yc + j) {
                    Some(v) => d += v,
                    None => continue 'points,
                }
            }
        }
        rel.push(safe_div(u - d, u.max(d)));
    }
    if !kept_enough(rel.len(), pts.len()) {
        return false;
    }
    let n = rel.len();
    let pct = ((1.0 - frac) * 100.0).round() as usize;
    let allowed = ((pct * n + 99) / 100).max(1);
    let fail_pos = rel.iter().filter(|&&r| r <= min_change).count();
    let fail_neg = rel.iter().filter(|&&r| r >= -min_change).count();
    fail_pos < allowed || fail_neg < allowed
}
