mod common;

use liquid_scan::detector::score_image;
use liquid_scan::scoring::ImagePlanes;
use liquid_scan::synth::{plan_corpus, Profile};
use liquid_scan::image::to_grayscale;
use liquid_scan::{DetectorConfig, Execution};
use proptest::prelude::*;

fn gray_planes(g: &liquid_scan::GrayImage, cfg: &DetectorConfig) -> ImagePlanes {
    ImagePlanes::from_gray(g.clone(), &cfg.canny).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn relative_scores_ignore_power_of_two_scaling(index in 0usize..40, k in 1i32..4) {
        let scene = &plan_corpus(index + 1, Profile::Glare, 99)[index];
        let r = scene.render().unwrap();
        let cfg = DetectorConfig::from_preset("entry2").unwrap();
        let g = to_grayscale(&r.image).unwrap();
        let c = 0.5f64.powi(k);
        let a = score_image(&gray_planes(&g, &cfg), &r.vessel, &cfg, Execution::Sequential).unwrap();
        let b = score_image(&gray_planes(&common::scaled(&g, c), &cfg), &r.vessel, &cfg, Execution::Sequential).unwrap();
        prop_assert_eq!(a.interior.len(), b.interior.len());
        for (x, y) in a.interior.iter().zip(&b.interior) {
            prop_assert!((x.score - y.score).abs() <= 1e-9);
        }
    }

    #[test]
    fn absolute_change_ignores_inversion(index in 0usize..40) {
        let scene = &plan_corpus(index + 1, Profile::Easy, 98)[index];
        let r = scene.render().unwrap();
        let cfg = DetectorConfig::from_preset("entry5").unwrap();
        let g = to_grayscale(&r.image).unwrap();
        let inv = g.map(|v| 255.0 - v);
        let a = score_image(&gray_planes(&g, &cfg), &r.vessel, &cfg, Execution::Sequential).unwrap();
        let b = score_image(&gray_planes(&inv, &cfg), &r.vessel, &cfg, Execution::Sequential).unwrap();
        prop_assert_eq!(a.interior.iter().map(|d| d.score).collect::<Vec<_>>(), b.interior.iter().map(|d| d.score).collect::<Vec<_>>());
        let sa = a.select(&r.vessel, &cfg.selection).unwrap();
        let sb = b.select(&r.vessel, &cfg.selection).unwrap();
        prop_assert_eq!(sa.accepted, sb.accepted);
    }
}
