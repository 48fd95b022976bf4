use infestscope_core::detections::{points_of_class, to_points, TreeClass};
use infestscope_core::metrics::evaluate;
use infestscope_core::situation::{
    default_eps, kde_with, protection_areas, risk_scores, size_class_stats, BandwidthRule, KdeOptions, PlotExtent,
    SizeClassMode,
};
use infestscope_core::synth::{generate, render, ClusterSpec, DetectorNoise, HealthySpec, SceneSpec};

fn spec(seed: u64) -> SceneSpec {
    SceneSpec {
        seed,
        extent: PlotExtent::new(0.0, 0.0, 1600.0, 1600.0).unwrap(),
        image_id: "plot".into(),
        clusters: vec![
            ClusterSpec {
                centroid: [400.0, 400.0],
                std: 50.0,
                count: 80,
            },
            ClusterSpec {
                centroid: [1200.0, 500.0],
                std: 50.0,
                count: 80,
            },
        ],
        healthy: HealthySpec {
            uniform: 60,
            blobs: vec![
                ClusterSpec {
                    centroid: [400.0, 1200.0],
                    std: 45.0,
                    count: 90,
                },
                ClusterSpec {
                    centroid: [1200.0, 1200.0],
                    std: 45.0,
                    count: 90,
                },
            ],
        },
        crown_area_range: [36.0, 144.0],
        infected_size_bias: 2.0,
        detector_noise: DetectorNoise::none(),
    }
}

#[test]
fn noiseless_detections_score_perfectly() {
    let truth = generate(&spec(11)).unwrap();
    let report = evaluate(&truth.detections, &truth.annotations);
    assert_eq!(report.map50, 1.0);
    assert_eq!(report.map5095, 1.0);
    assert_eq!(report.counts.fp + report.counts.fn_, 0);
}

#[test]
fn noisy_detections_lower_recall_only_by_misses() {
    let mut s = spec(12);
    s.detector_noise = DetectorNoise {
        miss_rate: 0.2,
        false_rate: 0.0,
        ..DetectorNoise::default()
    };
    let truth = generate(&s).unwrap();
    let report = evaluate(&truth.detections, &truth.annotations);
    assert_eq!(report.counts.tp, truth.detections.len());
    assert_eq!(report.counts.fn_, truth.annotations.len() - truth.detections.len());
    assert!(report.map50 < 1.0 && report.map50 > 0.6, "map50 {}", report.map50);
}

#[test]
fn density_peaks_sit_on_infected_clusters() {
    let truth = generate(&spec(13)).unwrap();
    let infected = points_of_class(&to_points(&truth.annotations), TreeClass::Infected);
    let field = kde_with(
        &infected,
        truth.extent,
        KdeOptions {
            grid_w: 128,
            grid_h: 128,
            rule: BandwidthRule::Scott,
        },
    )
    .unwrap();
    let peaks = field.local_maxima(2);
    for c in &truth.expected.realized_cluster_centroids {
        assert!(
            peaks.iter().any(|p| (p.x - c[0]).hypot(p.y - c[1]) < 60.0),
            "no peak near {c:?}: {peaks:?}"
        );
    }
}

#[test]
fn healthy_trees_near_infestation_carry_more_risk() {
    let truth = generate(&spec(14)).unwrap();
    let points = to_points(&truth.annotations);
    let infected = points_of_class(&points, TreeClass::Infected);
    let healthy = points_of_class(&points, TreeClass::Healthy);
    let field = kde_with(&infected, truth.extent, KdeOptions::default()).unwrap();
    let table = risk_scores(&healthy, &field, 0.05).unwrap();
    assert_eq!(table.entries.len(), healthy.len());
    let near_cluster = |x: f64, y: f64| {
        truth
            .expected
            .cluster_centroids
            .iter()
            .any(|c| (x - c[0]).hypot(y - c[1]) < 250.0)
    };
    let (mut near, mut far) = (Vec::new(), Vec::new());
    for e in &table.entries {
        if near_cluster(e.tree.x, e.tree.y) {
            near.push(e.risk);
        } else {
            far.push(e.risk);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(!near.is_empty() && !far.is_empty());
    assert!(mean(&near) > mean(&far));
}

#[test]
fn protection_areas_recover_planted_blobs() {
    for seed in 20..25 {
        let truth = generate(&spec(seed)).unwrap();
        let healthy = points_of_class(&to_points(&truth.annotations), TreeClass::Healthy);
        let eps = default_eps(&healthy, 4).unwrap();
        let areas = protection_areas(&healthy, eps, 4).unwrap();
        assert_eq!(areas.len(), 2, "seed {seed}: eps {eps}");
        for b in &truth.expected.blob_centroids {
            assert!(areas
                .iter()
                .any(|a| (a.center[0] - b[0]).hypot(a.center[1] - b[1]) < 40.0));
        }
        assert!(areas.iter().all(|a| a.semi_major >= a.semi_minor && a.semi_minor > 0.0));
        assert_eq!(areas[0].id, "PA1");
    }
}

#[test]
fn size_classes_partition_every_tree() {
    let truth = generate(&spec(15)).unwrap();
    let points = to_points(&truth.annotations);
    for mode in [SizeClassMode::EqualWidth, SizeClassMode::Tertiles] {
        let s = size_class_stats(&points, mode).unwrap();
        assert_eq!(s.total(), points.len());
        for (_, c) in s.classes() {
            assert_eq!(c.infected + c.healthy, c.total);
        }
    }
}

#[test]
fn rendered_scene_matches_extent() {
    let truth = generate(&spec(16)).unwrap();
    let img = render(&truth, 0.25).unwrap();
    assert_eq!((img.width(), img.height(), img.channels()), (400, 400, 3));
}
