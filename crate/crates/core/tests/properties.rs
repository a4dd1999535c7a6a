use odar::clustering::BackendSpec;
use odar::dataset::Dataset;
use odar::detector::{detect, median, DetectConfig, Stage};
use odar::evaluation::balanced_accuracy;
use odar::neighbors::{build_index, knn_distances};
use odar::transform::construct_odar_space;
use odar::transform::{high_order_density, local_density, Normalization, TransformConfig, Window};
use proptest::prelude::*;

fn points(min: usize, max: usize) -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec([-100.0..100.0f64, -100.0..100.0f64], min..max)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rho_mean_is_minus_one(pts in points(3, 200), k in 1usize..8) {
        let data = Dataset::from_rows(&pts).unwrap();
        prop_assume!(k < data.n());
        let knn = knn_distances(&build_index(&data), k).unwrap();
        for norm in [Normalization::Global, Normalization::PerRank] {
            let rho = local_density(&knn, norm).unwrap();
            let mean = rho.iter().sum::<f64>() / rho.len() as f64;
            prop_assert!((mean + 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn window_scan_matches_double_loop(rho in prop::collection::vec(-3.0..0.0f64, 1..300)) {
        let (hrho, sigma) = high_order_density(&rho, Window::TwoSided).unwrap();
        for (i, &a) in rho.iter().enumerate() {
            let mut h = 0.0;
            for &b in &rho {
                let d = (a - b).abs();
                if sigma == 0.0 {
                    if d == 0.0 { h += 1.0; }
                } else if d <= sigma {
                    h += (-(d / sigma).powi(2)).exp();
                }
            }
            prop_assert!((hrho[i] - h).abs() < 1e-9);
        }
    }

    #[test]
    fn relabeling_objects_permutes_the_profile(pts in points(12, 150), seed in any::<u64>()) {
        let data = Dataset::from_rows(&pts).unwrap();
        let n = data.n();
        let mut order: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let config = TransformConfig { shrink: false, ..TransformConfig::new(4) };
        let (_, a) = construct_odar_space(&data, &config).unwrap();
        let (_, b) = construct_odar_space(&data.permuted(&order).unwrap(), &config).unwrap();
        let a_rho: Vec<f64> = order.iter().map(|&i| a.rho[i]).collect();
        let a_hrho: Vec<f64> = order.iter().map(|&i| a.hrho[i]).collect();
        prop_assert!(close(&b.rho, &a_rho, 1e-9));
        prop_assert!(close(&b.hrho, &a_hrho, 1e-6));
    }

    #[test]
    fn translation_and_scale_keep_rho(pts in points(12, 150), dx in -1e3..1e3f64, scale in 0.01..100.0f64) {
        let data = Dataset::from_rows(&pts).unwrap();
        let moved = data.map_rows(|r, out| {
            out[0] = r[0] * scale + dx;
            out[1] = r[1] * scale - dx;
        }).unwrap();
        let config = TransformConfig { shrink: false, ..TransformConfig::new(3) };
        let (_, a) = construct_odar_space(&data, &config).unwrap();
        let (_, b) = construct_odar_space(&moved, &config).unwrap();
        prop_assert!(close(&a.rho, &b.rho, 1e-9));
    }

    #[test]
    fn component_laws_hold(pts in points(30, 200), k in 2usize..10, backend in 0usize..3) {
        let data = Dataset::from_rows(&pts).unwrap();
        let backend = [
            BackendSpec::Kmeans { k_clusters: 2 },
            BackendSpec::Dpc { k_clusters: 2 },
            BackendSpec::DeltaLike { radius: 1.0 },
        ][backend];
        let det = match detect(&data, &DetectConfig::new(k).with_backend(backend)) {
            Ok(d) => d,
            Err(e) => {
                prop_assert!(matches!(e.root(), odar::Error::Parameter(_)));
                return Ok(());
            }
        };
        let m = median(&det.profile.rho);
        for &i in &det.result.outliers {
            prop_assert!(det.profile.rho[i] < m);
        }
        if let Some(anchor) = det.result.anchor {
            prop_assert_eq!(det.result.stage[anchor], Stage::KeptAsOutlier);
        }
    }

    #[test]
    fn cluster_labels_are_contiguous(xs in prop::collection::vec(-10.0..10.0f64, 3..120), backend in 0usize..3) {
        let data = Dataset::from_column(&xs).unwrap();
        let spec = [
            BackendSpec::Kmeans { k_clusters: 3 },
            BackendSpec::Dpc { k_clusters: 3 },
            BackendSpec::DeltaLike { radius: 0.5 },
        ][backend];
        let labels = spec.cluster(&data).unwrap();
        let mut seen = vec![false; labels.n_clusters()];
        for &l in labels.labels() {
            prop_assert!(l < labels.n_clusters());
            seen[l] = true;
        }
        prop_assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn balanced_accuracy_symmetries(truth in prop::collection::vec(any::<bool>(), 2..100), flags in prop::collection::vec(any::<bool>(), 100)) {
        prop_assume!(truth.iter().any(|&t| t) && truth.iter().any(|&t| !t));
        let n = truth.len();
        let pred: Vec<usize> = (0..n).filter(|&i| flags[i]).collect();
        let (acc, _) = balanced_accuracy(&pred, &truth).unwrap();

        let inv_truth: Vec<bool> = truth.iter().map(|t| !t).collect();
        let inv_pred: Vec<usize> = (0..n).filter(|&i| !flags[i]).collect();
        let (swapped, _) = balanced_accuracy(&inv_pred, &inv_truth).unwrap();
        prop_assert!((acc - swapped).abs() < 1e-12);

        let rev_truth: Vec<bool> = truth.iter().rev().copied().collect();
        let rev_pred: Vec<usize> = pred.iter().map(|&i| n - 1 - i).collect();
        let (reversed, _) = balanced_accuracy(&rev_pred, &rev_truth).unwrap();
        prop_assert!((acc - reversed).abs() < 1e-12);
    }
}
