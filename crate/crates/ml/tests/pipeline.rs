use proptest::prelude::*;
use pqscope_ml::chi2::chi2_matrix;
use pqscope_ml::schema::{MEMORY_FEATURES, NUM_CORES, VM_DATA, VM_EXE, VM_RSS, VM_SIZE};
use pqscope_ml::synth::presets;
use pqscope_ml::*;

fn accuracy(model: &TrainedModel, test: &Dataset) -> f64 {
    evaluate(model, test).unwrap().overall_accuracy
}

#[test]
fn memory_only_separation_selects_memory_features() {
    for seed in 0..3 {
        let ds = synthesize(&presets::kex_memory(), 1000, seed).unwrap();
        let sel = select_top_k(&chi2_scores(&ds).unwrap(), 4).unwrap();
        let mut got = sel.selected.clone();
        got.sort_unstable();
        assert_eq!(got, [VM_SIZE, VM_RSS, VM_DATA, VM_EXE], "{:?}", sel.names());
        assert!(sel.selected.iter().all(|f| MEMORY_FEATURES.contains(f)));
    }
}

#[test]
fn separated_classes_reach_high_accuracy() {
    let mut forest_acc = Vec::new();
    let mut logreg_acc = Vec::new();
    for seed in 1..=5u64 {
        let ds = synthesize(&presets::kex_separated(), 1000, seed).unwrap();
        let sp = split(&ds, 0.8, seed).unwrap();
        let sel = select_top_k(&chi2_scores(&sp.train).unwrap(), 4).unwrap();
        let f = fit_forest(&sp.train, &sel, &ForestParams { n_trees: 25, ..ForestParams::with_seed(seed) }).unwrap();
        let l = fit_logreg(&sp.train, &sel, &LogRegParams::default()).unwrap();
        forest_acc.push(accuracy(&f, &sp.test));
        logreg_acc.push(accuracy(&l, &sp.test));
    }
    for acc in [&forest_acc, &logreg_acc] {
        let mean = acc.iter().sum::<f64>() / acc.len() as f64;
        assert!(mean >= 0.95, "{acc:?}");
        assert!(acc.iter().all(|&a| a >= 0.92), "{acc:?}");
    }
}

#[test]
fn cycles_only_ablation_is_worse() {
    let mut lower = 0;
    for seed in 1..=5u64 {
        let ds = synthesize(&presets::kex_loaded(), 500, seed).unwrap();
        let sp = split(&ds, 0.8, seed).unwrap();
        let p = ForestParams { n_trees: 25, ..ForestParams::with_seed(seed) };
        let full = fit_forest(&sp.train, &FeatureSelector::all(), &p).unwrap();
        let cycles = fit_forest(&sp.train, &FeatureSelector::from_indices((0..NUM_CORES).collect()), &p).unwrap();
        if accuracy(&cycles, &sp.test) < accuracy(&full, &sp.test) {
            lower += 1;
        }
    }
    assert!(lower >= 4);
}

#[test]
fn snark_cycles_separate_perfectly() {
    let ds = synthesize(&presets::snark(), 2000, 11).unwrap();
    let sp = split(&ds, 0.8, 11).unwrap();
    let sel = select_top_k(&chi2_scores(&sp.train).unwrap(), 2).unwrap();
    assert!(sel.selected.iter().all(|&f| f < NUM_CORES), "{:?}", sel.names());
    let f = fit_forest(&sp.train, &sel, &ForestParams { n_trees: 10, ..ForestParams::with_seed(11) }).unwrap();
    assert_eq!(accuracy(&f, &sp.test), 1.0);
    let l = fit_logreg(&sp.train, &sel, &LogRegParams::default()).unwrap();
    assert_eq!(accuracy(&l, &sp.test), 1.0);
}

#[test]
fn single_class_is_rejected() {
    let ds = synthesize(&presets::kex_memory(), 5, 1).unwrap();
    let only: Vec<_> = ds.rows.iter().filter(|r| r.label.as_deref() == Some("pq")).cloned().collect();
    let one = Dataset::new(only);
    assert!(matches!(fit_logreg(&one, &FeatureSelector::all(), &LogRegParams::default()), Err(MlError::SingleClass)));
    assert!(matches!(fit_forest(&one, &FeatureSelector::all(), &ForestParams::with_seed(1)), Err(MlError::SingleClass)));
}

#[test]
fn separable_1d_logreg_and_duplication() {
    let mk = |v: u64, l: &str| {
        let mut a = [0u64; NUM_FEATURES];
        a[VM_SIZE] = v;
        FeatureVector::from_values(a, Some(l.into()))
    };
    let ds = Dataset::new(vec![mk(0, "a"), mk(1, "b")]);
    let sel = FeatureSelector::from_indices(vec![VM_SIZE]);
    let m = fit_logreg(&ds, &sel, &LogRegParams::default()).unwrap();
    assert_eq!(accuracy(&m, &ds), 1.0);
    let mut rows = ds.rows.clone();
    rows.extend(ds.rows.clone());
    let m2 = fit_logreg(&Dataset::new(rows), &sel, &LogRegParams::default()).unwrap();
    let probe: Vec<FeatureVector> = (0..=20).map(|i| mk(i, "a")).collect();
    assert_eq!(predict(&m, &probe), predict(&m2, &probe));
}

#[test]
fn fixed_seed_forests_are_identical() {
    let ds = synthesize(&presets::kex_loaded(), 100, 3).unwrap();
    let p = ForestParams { n_trees: 10, ..ForestParams::with_seed(42) };
    let a = fit_forest(&ds, &FeatureSelector::all(), &p).unwrap();
    let b = fit_forest(&ds, &FeatureSelector::all(), &p).unwrap();
    assert_eq!(save_model(&a), save_model(&b));
}

#[test]
fn model_round_trip_predicts_identically() {
    let ds = synthesize(&presets::kex_loaded(), 200, 5).unwrap();
    let probe = synthesize(&presets::kex_loaded(), 50, 99).unwrap();
    let forest = fit_forest(&ds, &FeatureSelector::all(), &ForestParams { n_trees: 15, ..ForestParams::with_seed(5) }).unwrap();
    let logreg = fit_logreg(&ds, &FeatureSelector::all(), &LogRegParams { iterations: 300, ..Default::default() }).unwrap();
    for m in [forest, logreg] {
        let back = load_model(&save_model(&m)).unwrap();
        assert_eq!(back, m);
        assert_eq!(predict(&back, &probe.rows), predict(&m, &probe.rows));
    }
}

#[test]
fn model_version_and_truncation_errors() {
    let ds = synthesize(&presets::kex_memory(), 20, 5).unwrap();
    let m = fit_forest(&ds, &FeatureSelector::all(), &ForestParams { n_trees: 2, ..ForestParams::with_seed(5) }).unwrap();
    let text = save_model(&m);
    let v2 = text.replacen("\"schema_version\":1", "\"schema_version\":2", 1);
    assert!(matches!(load_model(&v2), Err(MlError::UnsupportedModelVersion(2))));
    assert!(matches!(load_model(&text[..text.len() / 2]), Err(MlError::MalformedModel(_))));
    assert!(predict(&m, &[]).is_empty());
}

/// Exhaustive decision stump by plain floating-point Gini impurity.
fn stump_oracle(x: &[Vec<u64>], y: &[usize], k: usize) -> Option<(usize, f64)> {
    let gini = |idx: &[usize]| {
        let n = idx.len() as f64;
        let mut c = vec![0.0; k];
        for &i in idx {
            c[y[i]] += 1.0;
        }
        1.0 - c.iter().map(|v| (v / n) * (v / n)).sum::<f64>()
    };
    let n = x.len();
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..x[0].len() {
        let mut vals: Vec<u64> = x.iter().map(|r| r[f]).collect();
        vals.sort_unstable();
        vals.dedup();
        for w in vals.windows(2) {
            let t = w[0] as f64 + (w[1] as f64 - w[0] as f64) / 2.0;
            let (l, r): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| (x[i][f] as f64) <= t);
            let g = (l.len() as f64 * gini(&l) + r.len() as f64 * gini(&r)) / n as f64;
            if best.map(|(bg, _, _)| g < bg - 1e-12).unwrap_or(true) {
                best = Some((g, f, t));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn chi2_duplication_and_permutation(
        rows in prop::collection::vec((prop::collection::vec(0u64..1_000_000, 3), 0usize..3), 2..40),
        rot in any::<prop::sample::Index>(),
    ) {
        let x: Vec<Vec<u64>> = rows.iter().map(|r| r.0.clone()).collect();
        let y: Vec<usize> = rows.iter().map(|r| r.1).collect();
        let s = chi2_matrix(&x, &y, 3);
        let x2: Vec<Vec<u64>> = x.iter().chain(&x).cloned().collect();
        let y2: Vec<usize> = y.iter().chain(&y).copied().collect();
        let s2 = chi2_matrix(&x2, &y2, 3);
        for (a, b) in s.iter().zip(&s2) {
            prop_assert_eq!(2.0 * a, *b);
        }
        let r = rot.index(x.len());
        let mut xp = x.clone();
        let mut yp = y.clone();
        xp.rotate_left(r);
        yp.rotate_left(r);
        xp.reverse();
        yp.reverse();
        prop_assert_eq!(chi2_matrix(&xp, &yp, 3), s);
    }

    #[test]
    fn depth_one_tree_matches_exhaustive_stump(
        rows in prop::collection::vec((prop::collection::vec(0u64..6, 1..=3), 0usize..3), 2..=20),
    ) {
        let d = rows[0].0.len();
        let rows: Vec<_> = rows.into_iter().map(|(mut v, l)| { v.resize(d, 0); (v, l) }).collect();
        let mut feats = Vec::new();
        for (v, l) in &rows {
            let mut a = [0u64; NUM_FEATURES];
            a[..d].copy_from_slice(v);
            feats.push(FeatureVector::from_values(a, Some(format!("c{l}"))));
        }
        let ds = Dataset::new(feats);
        prop_assume!(ds.classes.len() >= 2);
        let y = ds.label_indices().unwrap();
        let x: Vec<Vec<u64>> = rows.iter().map(|r| r.0.clone()).collect();
        let oracle = stump_oracle(&x, &y, ds.classes.len());
        let sel = FeatureSelector::from_indices((0..d).collect());
        let p = ForestParams { n_trees: 1, max_depth: Some(1), min_leaf: 1, feature_subsample: Some(d), bootstrap: false, seed: 0 };
        let m = fit_forest(&ds, &sel, &p).unwrap();
        let model::ModelParams::Forest { trees } = &m.params else { unreachable!() };
        let root = match &trees[0].nodes[0] {
            forest::Node::Split { feature, threshold, .. } => Some((*feature, *threshold)),
            forest::Node::Leaf { .. } => None,
        };
        prop_assert_eq!(root, oracle);
    }

    #[test]
    fn csv_round_trip(rows in prop::collection::vec((prop::array::uniform19(any::<u64>()), "[a-z]{1,6}"), 0..20)) {
        let ds = Dataset::new(rows.into_iter().map(|(v, l)| FeatureVector::from_values(v, Some(l))).collect());
        let mut out = Vec::new();
        write_csv(&ds, &mut out).unwrap();
        let back = load_csv(&out[..]).unwrap().dataset;
        if ds.is_empty() {
            prop_assert!(back.is_empty());
        } else {
            prop_assert_eq!(back, ds);
        }
    }
}
