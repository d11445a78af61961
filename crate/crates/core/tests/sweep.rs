use hierent::sweep::{interaction_curves, run_sweep, spearman_rho};
use hierent::{
    entropy_sweep, interaction_sweep, persistent_regions, select_component_size, RasterImage,
    RegionGrid, Segmentation, SweepPlan, SweepSettings, DEFAULT_COMPONENT_SIZES,
};
use proptest::prelude::*;

const RED: [f64; 3] = [255.0, 0.0, 0.0];
const GREEN: [f64; 3] = [0.0, 255.0, 0.0];
const BLUE: [f64; 3] = [0.0, 0.0, 255.0];

fn raw() -> SweepSettings {
    SweepSettings {
        sigma: 0.0,
        min_size: 0,
    }
}

fn two_half() -> RasterImage {
    RasterImage::from_fn(8, 8, |x, _| if x < 4 { RED } else { BLUE }).unwrap()
}

/// 128×128: top-left 64×64 is a one-pixel red/blue checkerboard, the rest
/// flat green. Diagonal neighbours in the checkerboard share a color, so
/// each color forms one 8-connected cluster that never merges across the
/// 360-unit color jump at these component sizes.
fn checker_quadrant() -> RasterImage {
    RasterImage::from_fn(128, 128, |x, y| {
        if x < 64 && y < 64 {
            if (x + y) % 2 == 0 {
                RED
            } else {
                BLUE
            }
        } else {
            GREEN
        }
    })
    .unwrap()
}

#[test]
fn uniform_image_sweeps_are_flat() {
    let img = RasterImage::filled(32, 32, [90.0, 90.0, 90.0]).unwrap();
    let r = entropy_sweep(
        &img,
        &[100.0, 1000.0, 10000.0],
        &[0, 2, 5],
        &SweepSettings::default(),
    )
    .unwrap();
    assert!(r.entropy.iter().all(|m| m.mean == 0.0));
    assert_eq!(r.cluster_counts, vec![1, 1, 1]);
    let p = persistent_regions(&r, 2, 1000.0, 0.5).unwrap();
    assert!(p.is_empty());
}

#[test]
fn two_half_layer_zero_means() {
    let r = entropy_sweep(&two_half(), &[100.0, 1e6], &[0], &raw()).unwrap();
    assert_eq!(r.layer_means(0), vec![(100.0, 1.0), (1e6, 0.0)]);
}

#[test]
fn global_cluster_gives_two_bits() {
    let curves = interaction_sweep(&two_half(), &[100.0, 1e6], 0, &raw()).unwrap();
    assert_eq!(curves.len(), 1);
    assert_eq!(curves[0].points, vec![(100.0, 1.0), (1e6, 2.0)]);
}

#[test]
fn quadrant_aligned_image_has_zero_interaction() {
    let colors = [RED, GREEN, BLUE, [255.0, 255.0, 0.0]];
    let img = RasterImage::from_fn(64, 64, |x, y| colors[(y / 32) * 2 + x / 32]).unwrap();
    let curves = interaction_sweep(&img, &DEFAULT_COMPONENT_SIZES, 0, &raw()).unwrap();
    assert!(curves[0].points.iter().all(|p| p.1 == 0.0));
}

#[test]
fn curves_from_synthetic_labelings() {
    let aligned: Vec<u32> = (0..256)
        .map(|i| ((i / 128) * 2 + (i % 16) / 8) as u32)
        .collect();
    let segs: Vec<Segmentation> = [100.0, 200.0, 300.0]
        .iter()
        .map(|&k| Segmentation::from_labels(16, 16, &aligned, k).unwrap())
        .collect();
    let curves = interaction_curves(&segs, 0).unwrap();
    assert!(curves[0].points.iter().all(|p| p.1 == 0.0));
    // Ties everywhere: the smallest size wins.
    assert_eq!(select_component_size(&curves).unwrap(), 100.0);
}

#[test]
fn checkerboard_quadrant_persists() {
    let img = checker_quadrant();
    let r = entropy_sweep(&img, &DEFAULT_COMPONENT_SIZES, &[6], &raw()).unwrap();
    let grid = RegionGrid::new(128, 128, 6).unwrap();
    let expected: Vec<usize> = (0..grid.len())
        .filter(|&i| {
            let rect = grid.region(i);
            rect.x1 <= 64 && rect.y1 <= 64
        })
        .collect();
    assert_eq!(expected.len(), 1024);
    assert_eq!(persistent_regions(&r, 6, 3000.0, 0.5).unwrap(), expected);
    assert_eq!(
        persistent_regions(&r, 6, 3000.0, 0.0).unwrap().len(),
        grid.len()
    );
    assert!(persistent_regions(&r, 6, 20000.0, 0.5).is_err());
    assert!(persistent_regions(&r, 5, 3000.0, 0.5).is_err());
}

#[test]
fn one_segmentation_per_component_size() {
    let img = checker_quadrant();
    let plan = SweepPlan {
        component_sizes: vec![100.0, 1000.0, 5000.0],
        layers: vec![0, 1, 2, 3, 4, 5, 6],
        upper_layer: Some(2),
    };
    let r = run_sweep(&img, &plan, &SweepSettings::default()).unwrap();
    assert_eq!(r.segmentations, 3);
    assert_eq!(r.entropy.len(), 21);
    assert_eq!(r.interaction.len(), 16);
    assert!(r.interaction.iter().all(|c| c.points.len() == 3));
}

#[test]
fn illegal_layers_rejected() {
    let img = RasterImage::filled(16, 16, [0.0; 3]).unwrap();
    assert!(entropy_sweep(&img, &[100.0], &[5], &raw()).is_err());
    assert!(entropy_sweep(&img, &[100.0], &[], &raw()).is_err());
    assert!(interaction_sweep(&img, &[100.0], 4, &raw()).is_err());
    assert!(interaction_sweep(&img, &[], 0, &raw()).is_err());
}

#[test]
fn report_serialization() {
    let plan = SweepPlan {
        component_sizes: vec![100.0, 1e6],
        layers: vec![0, 1],
        upper_layer: Some(0),
    };
    let r = run_sweep(&two_half(), &plan, &raw()).unwrap();
    let mut csv = Vec::new();
    r.write_csv(&mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    assert!(csv.starts_with("layer,region,component_size,metric_name,value\n"));
    assert!(csv.contains(",,100.0,clusters,2.0\n"));
    assert!(csv.contains("0,all,1000000.0,mean_entropy,0.0\n"));
    assert!(csv.contains("0,0,1000000.0,interaction,2.0\n"));
    let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    assert_eq!(json["cluster_counts"], serde_json::json!([2, 1]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sweeps_are_deterministic_and_monotone_in_threshold(
        seed in any::<u64>(), h1 in 0.0f64..2.0, h2 in 0.0f64..2.0,
    ) {
        let mut s = seed | 1;
        let img = RasterImage::from_fn(32, 32, |x, y| {
            s ^= s << 13; s ^= s >> 7; s ^= s << 17;
            let block = ((x / 8 + y / 8) % 3) as f64 * 80.0;
            [block, (s % 40) as f64, 255.0 - block]
        }).unwrap();
        let plan = SweepPlan {
            component_sizes: vec![100.0, 500.0, 3000.0, 7000.0],
            layers: vec![0, 3, 5],
            upper_layer: Some(1),
        };
        let a = run_sweep(&img, &plan, &SweepSettings::default()).unwrap();
        let b = run_sweep(&img, &plan, &SweepSettings::default()).unwrap();
        prop_assert_eq!(&a, &b);

        let (lo, hi) = if h1 <= h2 { (h1, h2) } else { (h2, h1) };
        let loose = persistent_regions(&a, 5, 3000.0, lo).unwrap();
        let strict = persistent_regions(&a, 5, 3000.0, hi).unwrap();
        prop_assert!(strict.iter().all(|r| loose.contains(r)));

        let k = select_component_size(&a.interaction).unwrap();
        prop_assert!(plan.component_sizes.contains(&k));
        for c in &a.interaction {
            prop_assert!(c.points.iter().all(|p| (0.0..=2.0).contains(&p.1)));
        }
    }
}

#[test]
fn spearman_handles_ties() {
    // Hand-checked: ranks x = [1,2,3,4], y = [1.5,1.5,3,4].
    let rho = spearman_rho(&[1.0, 2.0, 3.0, 4.0], &[5.0, 5.0, 7.0, 9.0]).unwrap();
    let expected = 4.5 / (5.0f64 * 4.5).sqrt();
    assert!((rho - expected).abs() < 1e-12);
}
