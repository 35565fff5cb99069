use proptest::prelude::*;

use qconf_core::conformal::{
    conformal_quantile, drift_weights, knn_score, naive_set, qcp_set_classification, qcp_set_regression,
    histogram_score, uniform_weights, NaiveGeometry,
};
use qconf_core::noise::{apply_measurement_channel, ConfusionMatrix};
use qconf_core::qcore::{born_probabilities, Observable, PureState};
use qconf_core::ansatz::PqcModel;
use qconf_core::Complex64;

fn shots_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 1..40)
}

proptest! {
    #[test]
    fn quantile_is_monotone_in_alpha(scores in prop::collection::vec(0.0f64..10.0, 1..30), a in 0.01f64..0.98, b in 0.01f64..0.98) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let q_lo = conformal_quantile(&scores, lo).unwrap();
        let q_hi = conformal_quantile(&scores, hi).unwrap();
        prop_assert!(q_hi <= q_lo);
    }

    #[test]
    fn quantile_is_a_score_or_infinite(scores in prop::collection::vec(0.0f64..10.0, 1..30), alpha in 0.01f64..0.99) {
        let q = conformal_quantile(&scores, alpha).unwrap();
        prop_assert!(q == f64::INFINITY || scores.contains(&q));
    }

    #[test]
    fn regression_set_contains_its_shots_neighbourhood(shots in shots_strategy(), q in 0.0f64..0.5, kf in 0.0f64..1.0) {
        let k = 1 + ((shots.len() - 1) as f64 * kf) as usize;
        let set = qcp_set_regression(&shots, q, k).unwrap();
        set.validate().unwrap();
        // every accepted point has k-NN score at most q
        if let Some(iv) = set.intervals() {
            for i in iv {
                for y in [i.lo, 0.5 * (i.lo + i.hi), i.hi] {
                    prop_assert!(knn_score(y, &shots, k).unwrap() <= q + 1e-12);
                }
            }
        }
        prop_assert!(set.size() <= 2.0 * q * shots.len() as f64 + 1e-12);
    }

    #[test]
    fn regression_set_grows_with_q(shots in shots_strategy(), q in 0.0f64..0.5, dq in 0.0f64..0.5) {
        let k = 1.max(shots.len() / 3);
        let small = qcp_set_regression(&shots, q, k).unwrap();
        let large = qcp_set_regression(&shots, q + dq, k).unwrap();
        prop_assert!(small.size() <= large.size() + 1e-12);
        for s in &shots {
            if small.contains(*s) {
                prop_assert!(large.contains(*s));
            }
        }
    }

    #[test]
    fn classification_set_matches_scores(labels in prop::collection::vec(0usize..6, 1..50), q in 0.0f64..20.0, tau in 0.3f64..30.0, drift in any::<bool>()) {
        let m = labels.len();
        let w = if drift { drift_weights(m, tau).unwrap() } else { uniform_weights(m) };
        prop_assert!((w.iter().sum::<f64>() - m as f64).abs() < 1e-9);
        let set = qcp_set_classification(&labels, q, &w, 6).unwrap();
        for y in 0..6 {
            let s = histogram_score(y, &labels, &w, 6).unwrap();
            prop_assert_eq!(set.contains_label(y), s <= q);
        }
    }

    #[test]
    fn naive_set_reaches_mass(raw in prop::collection::vec(0.0f64..1.0, 2..12), alpha in 0.01f64..0.9) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 1e-6);
        let probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
        let set = naive_set(&probs, alpha, &NaiveGeometry::Labels).unwrap();
        let mass: f64 = set.labels().unwrap().iter().map(|&j| probs[j]).sum();
        prop_assert!(mass >= 1.0 - alpha - 1e-9);
    }

    #[test]
    fn readout_channel_preserves_normalization(raw in prop::collection::vec(0.0f64..1.0, 4), flip in 0.0f64..0.5) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 1e-6);
        let probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
        let c = ConfusionMatrix::symmetric(4, flip).unwrap();
        let out = apply_measurement_channel(&probs, &c).unwrap();
        prop_assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(out.iter().all(|p| *p >= 0.0));
    }

    #[test]
    fn random_states_give_distributions(re in prop::collection::vec(-1.0f64..1.0, 8), im in prop::collection::vec(-1.0f64..1.0, 8)) {
        let amps: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let n: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(n > 1e-3);
        let psi = PureState::from_amplitudes(amps.iter().map(|a| a / n).collect()).unwrap();
        let p = born_probabilities(&psi, &Observable::equispaced(3).unwrap()).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn model_json_round_trip(seed in any::<u64>()) {
        use rand::SeedableRng;
        let mut rng = qconf_core::Rng::seed_from_u64(seed);
        let m = PqcModel::encoded(2, 2, qconf_core::ansatz::EncoderKind::Neural, &mut rng);
        let text = serde_json::to_string(&m).unwrap();
        let back: PqcModel = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.params(), m.params());
    }
}
