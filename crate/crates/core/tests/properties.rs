//! Property tests for invariants that must hold for every valid input.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use protrans_core::detector::{cdf_scan, ed_scan, DetectorConfig};
use protrans_core::features::ar_fit;
use protrans_core::learn::{
    train_forest, train_tree, ConfusionMatrix, Dataset, ForestConfig, MaxFeatures, TreeConfig,
};
use protrans_core::relay::{
    ar_direction, ar_zone, build_cascade, classify_event, measure_impedance, ArRelayConfig,
    CascadeConfig, CascadeModel, ImpedanceParams, StageKind, Verdict,
};
use protrans_core::select::{mrmr_rank, mutual_information, FeatureMatrix};
use protrans_core::txmodel::{
    generate_corpus, random_scenario, synthesize, two_winding_matrix, CorpusSpec, TwoWindingParams,
    WindingFaultSpec,
};
use protrans_core::waveform::{RecordKind, SamplingSpec, ThreePhaseRecord};

fn spec() -> SamplingSpec {
    SamplingSpec::new(10_000.0, 60.0).unwrap()
}

fn sinusoid(n: usize, amp: f64, psi: f64) -> ThreePhaseRecord {
    let w = 2.0 * PI * 60.0 / 10_000.0;
    let phases = [0.0, -2.0 * PI / 3.0, 2.0 * PI / 3.0]
        .map(|s: f64| (0..n).map(|i| amp * (w * i as f64 + psi + s).sin()).collect::<Vec<_>>());
    ThreePhaseRecord::new(phases, RecordKind::Current, spec()).unwrap()
}

fn class_record() -> impl Strategy<Value = ThreePhaseRecord> {
    (0usize..12, any::<u64>()).prop_map(|(class, seed)| {
        let sc = random_scenario(class, &spec(), 6, seed).unwrap();
        synthesize(&sc, &spec(), 6).unwrap()
    })
}

/// Rows drawn from a few shifted clusters so every class is present.
fn labelled_rows(max_rows: usize, width: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>)> {
    prop::collection::vec((0usize..3, prop::collection::vec(-1.0f64..1.0, width)), 9..max_rows).prop_map(|v| {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for (i, (c, mut r)) in v.into_iter().enumerate() {
            let c = if i < 3 { i } else { c };
            r[0] += c as f64;
            rows.push(r);
            y.push(c);
        }
        (rows, y)
    })
}

fn names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("f{i}")).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn full_window_is_identity(rec in class_record()) {
        prop_assert_eq!(rec.window(0, rec.len()).unwrap(), rec);
    }

    #[test]
    fn detector_traces_are_scale_invariant(rec in class_record(), c in 1e-3f64..1e3) {
        let cfg = DetectorConfig::default();
        let scaled = rec.scaled(c).unwrap();
        for scan in [ed_scan, cdf_scan] {
            let a = scan(&rec, &cfg).unwrap();
            let b = scan(&scaled, &cfg).unwrap();
            prop_assert_eq!(a.trigger_index, b.trigger_index);
            for (pa, pb) in a.index_trace.iter().zip(&b.index_trace) {
                for (x, y) in pa.iter().zip(pb) {
                    prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn synthesis_is_deterministic(class in 0usize..12, seed: u64) {
        let sc = random_scenario(class, &spec(), 5, seed).unwrap();
        prop_assert_eq!(synthesize(&sc, &spec(), 5).unwrap(), synthesize(&sc, &spec(), 5).unwrap());
    }

    #[test]
    fn two_winding_matrix_is_symmetric_psd(
        mva in 1.0f64..1000.0,
        v1 in 1.0f64..500.0,
        v2 in 1.0f64..500.0,
        im in 0.001f64..0.2,
        xl in 0.01f64..0.3,
        f1 in 1.0f64..99.0,
        f2 in 1.0f64..99.0,
    ) {
        let p = TwoWindingParams { mva, v1, v2, f: 60.0, im, xl };
        let m = two_winding_matrix(&p, &WindingFaultSpec::new(f1, f2).unwrap()).unwrap();
        let n = m.order();
        let a = DMatrix::from_fn(n, n, |i, j| m.get(i, j));
        let scale = a.amax();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((a[(i, j)] - a[(j, i)]).abs() <= 1e-12 * scale);
            }
        }
        let min_eig = a.symmetric_eigen().eigenvalues.min();
        prop_assert!(min_eig >= -1e-9 * scale, "min eigenvalue {min_eig}");
    }

    #[test]
    fn ar_fit_recovers_noise_free_recursions(r in 0.97f64..0.999, theta in 0.1f64..2.5, x1 in -1.0f64..1.0) {
        // complex roots r·e^{±iθ} keep the recursion oscillating without decaying away
        let (p1, p2) = (2.0 * r * theta.cos(), -r * r);
        let mut x = vec![1.0, x1];
        for t in 2..400 {
            let v = p1 * x[t - 1] + p2 * x[t - 2];
            x.push(v);
        }
        let fit = ar_fit(&x, 2, false).unwrap();
        prop_assert!((fit.phi[0] - p1).abs() < 1e-9 && (fit.phi[1] - p2).abs() < 1e-9, "{:?}", fit.phi);
    }

    #[test]
    fn mutual_information_nonnegative_and_affine_invariant(
        (rows, y) in labelled_rows(80, 1),
        a in 0.01f64..100.0,
        b in -100.0f64..100.0,
    ) {
        let x: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let mi = mutual_information(&x, &y, 16).unwrap();
        prop_assert!(mi >= 0.0);
        let z: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        prop_assert!((mutual_information(&z, &y, 16).unwrap() - mi).abs() < 1e-9);
    }

    #[test]
    fn mrmr_starts_with_most_relevant((rows, y) in labelled_rows(60, 4)) {
        let mi: Vec<f64> = (0..4)
            .map(|j| mutual_information(&rows.iter().map(|r| r[j]).collect::<Vec<_>>(), &y, 16).unwrap())
            .collect();
        let best = mi.iter().cloned().fold(f64::MIN, f64::max);
        let d = Dataset::new(rows, y, names(3)).unwrap();
        let m = FeatureMatrix::new(names(4), d).unwrap();
        let first = &mrmr_rank(&m, 2, 16).unwrap().0[0].name;
        let idx: usize = first[1..].parse().unwrap();
        // ties resolve to the lexicographically first name
        let expected = mi.iter().position(|&v| v == best).unwrap();
        prop_assert_eq!(idx, expected);
    }

    #[test]
    fn single_tree_forest_equals_tree((rows, y) in labelled_rows(60, 3), probe in prop::collection::vec(-2.0f64..4.0, 3)) {
        let d = Dataset::new(rows, y, names(3)).unwrap();
        let tree = train_tree(&d, &TreeConfig::default()).unwrap();
        let forest = train_forest(&d, &ForestConfig {
            n_estimators: 1,
            bootstrap: false,
            max_features: MaxFeatures::All,
            ..ForestConfig::default()
        }).unwrap();
        for r in d.rows().chain(std::iter::once(probe.as_slice())) {
            prop_assert_eq!(tree.proba(r), forest.proba(r));
        }
    }

    #[test]
    fn unbounded_tree_fits_consistent_data((rows, y) in labelled_rows(60, 3)) {
        let d = Dataset::new(rows, y, names(3)).unwrap();
        let tree = train_tree(&d, &TreeConfig::default()).unwrap();
        for (r, &label) in d.rows().zip(d.labels()) {
            let p = tree.proba(r);
            let top = (0..p.len()).max_by(|&a, &b| p[a].total_cmp(&p[b]).then(b.cmp(&a))).unwrap();
            prop_assert_eq!(top, label);
        }
    }

    #[test]
    fn balanced_accuracy_ignores_per_class_duplication(
        counts in prop::collection::vec(prop::collection::vec(0u64..50, 3), 3),
        dup in prop::collection::vec(1u64..5, 3),
    ) {
        prop_assume!(counts.iter().all(|r| r.iter().sum::<u64>() > 0));
        let a = ConfusionMatrix { counts: counts.clone() };
        let b = ConfusionMatrix {
            counts: counts.iter().zip(&dup).map(|(r, &k)| r.iter().map(|v| v * k).collect()).collect(),
        };
        let (x, y) = (a.balanced_accuracy().unwrap(), b.balanced_accuracy().unwrap());
        prop_assert!((x - y).abs() < 1e-12);
    }

    #[test]
    fn impedance_is_homogeneous(
        v in (-1e5f64..1e5, -1e5f64..1e5),
        i in (1.0f64..1e3, -1e3f64..1e3),
        i0 in (-1e2f64..1e2, -1e2f64..1e2),
        k in (0.01f64..100.0, -PI..PI),
    ) {
        let p = ImpedanceParams::example_line();
        let (v, i, i0) = (Complex64::new(v.0, v.1), Complex64::new(i.0, i.1), Complex64::new(i0.0, i0.1));
        let k = Complex64::from_polar(k.0, k.1);
        if let (Ok(a), Ok(b)) = (measure_impedance(v, i, i0, &p), measure_impedance(v * k, i * k, i0 * k, &p)) {
            prop_assert!((a - b).norm() <= 1e-9 * a.norm().max(1e-9));
        }
    }

    #[test]
    fn ar_verdicts_survive_scaling(rec in class_record(), c in 1e-3f64..1e3) {
        let cfg = ArRelayConfig::default();
        let scaled = rec.scaled(c).unwrap();
        // quiet phases make the AR design singular; that must not depend on scale either
        prop_assert_eq!(ar_direction(&rec, &cfg).ok(), ar_direction(&scaled, &cfg).ok());
        prop_assert_eq!(ar_zone(&rec, &cfg).ok(), ar_zone(&scaled, &cfg).ok());
    }
}

fn cascade() -> &'static CascadeModel {
    static M: OnceLock<CascadeModel> = OnceLock::new();
    M.get_or_init(|| {
        let cs = CorpusSpec {
            per_class: 12,
            n_cycles: 6,
            snr_db: Some(40.0),
            seed: 5,
        };
        let records = generate_corpus(&spec(), &cs).unwrap();
        let mut cfg = CascadeConfig::differential(protrans_core::learn::TrainerConfig::DecisionTree(TreeConfig::default()));
        cfg.stages.retain(|s| matches!(s.kind, StageKind::Detect | StageKind::DisturbanceType));
        cfg.cv_folds = 0;
        build_cascade(&records, &cfg).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn no_trip_without_trigger(rec in class_record(), start in 0usize..400, len in 334usize..700, amp in 0.01f64..100.0, psi in 0.0f64..6.3) {
        let m = cascade();
        let len = len.min(rec.len() - start);
        let mut candidates = vec![sinusoid(len.max(334), amp, psi)];
        if len >= 334 {
            candidates.push(rec.window(start, len).unwrap());
        }
        for r in candidates {
            let det = m.config.detect(&r).unwrap();
            let decision = classify_event(m, &r).unwrap();
            if !det.triggered {
                prop_assert_ne!(decision.verdict, Verdict::Trip);
                prop_assert_eq!(decision.trigger_index, None);
            }
        }
    }
}
