use proptest::prelude::*;

use spikenav::dataset::{cell_center, cell_of, rasterize_scan, LidarDetection, GRID_SIZE};
use spikenav::experiments::{welch_t_test, WelchInput};
use spikenav::snn::{lif_step, InputScaling, LifLayerState, LifParams};
use spikenav::training::{flip_counts, kfold_split};

fn alpha() -> impl Strategy<Value = f64> {
    (1u32..=100).prop_map(|i| i as f64 / 100.0)
}

proptest! {
    #[test]
    fn lif_spikes_are_binary_and_reset(a in alpha(), js in prop::collection::vec(-3.0f64..3.0, 1..60)) {
        let scaling = if a == 1.0 { InputScaling::Unscaled } else { InputScaling::Scaled };
        let p = LifParams::new(a, 1.0, scaling).unwrap();
        let mut s = LifLayerState::zeros(1);
        for j in js {
            let out = lif_step(&mut s, &p, &[j]).unwrap();
            prop_assert!(out[0] == 0.0 || out[0] == 1.0);
            if out[0] == 1.0 {
                prop_assert_eq!(s.v[0], 0.0);
            }
            prop_assert!(s.v[0] < 1.0);
        }
    }

    #[test]
    fn scaled_potential_stays_within_input_range(a in 0.01f64..0.99, js in prop::collection::vec(-3.0f64..0.99, 1..80)) {
        let p = LifParams::new(a, 1.0, InputScaling::Scaled).unwrap();
        let lo = js.iter().copied().fold(0.0f64, f64::min);
        let mut s = LifLayerState::zeros(1);
        for j in js {
            lif_step(&mut s, &p, &[j]).unwrap();
            prop_assert!(s.v[0] >= lo - 1e-12 && s.v[0] < 1.0);
        }
    }

    #[test]
    fn cell_centers_map_back(row in 0..GRID_SIZE, col in 0..GRID_SIZE, r in 0.5f64..20.0) {
        prop_assert_eq!(cell_of(cell_center(row, col, r), r), Some((row, col)));
    }

    #[test]
    fn raster_never_exceeds_detections(dets in prop::collection::vec((0.0f64..8.0, 0.0f64..360.0), 0..50)) {
        let d: Vec<_> = dets.iter().filter_map(|&(r, a)| LidarDetection::from_degrees(r, a)).collect();
        let f = rasterize_scan(&d, 5.0);
        prop_assert!(f.popcount() <= d.len());
        let inside = d.iter().filter(|x| x.range_m() < 5.0).count();
        prop_assert!(inside == 0 || f.popcount() >= 1);
    }

    #[test]
    fn welch_is_antisymmetric(m1 in -5.0f64..5.0, s1 in 0.01f64..3.0, n1 in 2usize..40,
                              m2 in -5.0f64..5.0, s2 in 0.01f64..3.0, n2 in 2usize..40) {
        let a = welch_t_test(&WelchInput { mu1: m1, sd1: s1, n1, mu2: m2, sd2: s2, n2 }).unwrap();
        let b = welch_t_test(&WelchInput { mu1: m2, sd1: s2, n1: n2, mu2: m1, sd2: s1, n2: n1 }).unwrap();
        prop_assert!((a.t_value + b.t_value).abs() < 1e-12);
        prop_assert!((a.p_value - b.p_value).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a.p_value));
    }

    #[test]
    fn flip_rate_is_a_fraction(seq in prop::collection::vec((any::<bool>(), any::<bool>(), any::<bool>(), any::<bool>()), 1..60)) {
        let sign = |b: bool| if b { 1.0 } else { -1.0 };
        let out: Vec<[f64; 2]> = seq.iter().map(|t| [sign(t.0), sign(t.1)]).collect();
        let lab: Vec<[f64; 2]> = seq.iter().map(|t| [sign(t.2), sign(t.3)]).collect();
        let c = flip_counts(&out, &lab);
        let (rate, defined) = c.rate();
        prop_assert!((0.0..=1.0).contains(&rate));
        prop_assert_eq!(defined, c.steady.iter().any(|&s| s > 0));
        let same = flip_counts(&lab, &lab);
        prop_assert_eq!(same.rate().0, 0.0);
    }

    #[test]
    fn folds_partition_sessions(n in 2usize..60, k in 2usize..8, seed in any::<u64>()) {
        prop_assume!(n >= k);
        let ids: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
        let splits = kfold_split(&ids, k, seed).unwrap();
        prop_assert_eq!(splits.len(), k);
        let mut all: Vec<&String> = splits.iter().flat_map(|s| &s.test_session_ids).collect();
        all.sort();
        all.dedup();
        prop_assert_eq!(all.len(), n);
        let sizes: Vec<usize> = splits.iter().map(|s| s.test_session_ids.len()).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }
}
