use drybean_core::gbt::{gbt_train, GbtHyper};
use drybean_core::linalg::Matrix;
use drybean_core::modelselect::{nested_cv, CvConfig, ModelKind, ParamGrid, PipelineMode};
use drybean_core::preprocess::PcaTarget;
use drybean_core::report::render_report;
use drybean_core::svm::{svm_train, GammaMode, KernelSpec, SvmHyper};
use drybean_core::Dataset;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

fn names(k: usize) -> Vec<String> {
    (0..k).map(|c| format!("C{c}")).collect()
}

fn features(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("f{j}")).collect()
}

/// Gaussian-ish blobs around well separated centres, plus a few noise columns.
fn blobs(n_per: usize, k: usize, spread: f64, seed: u64) -> Dataset {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for c in 0..k {
        for _ in 0..n_per {
            let noise = |rng: &mut Xoshiro256PlusPlus| (0..4).map(|_| rng.random_range(-1.0..1.0)).sum::<f64>() / 2.0;
            rows.push(vec![
                3.0 * (c as f64 * 0.9).cos() + spread * noise(&mut rng),
                3.0 * (c as f64 * 0.9).sin() + spread * noise(&mut rng),
                c as f64 * 0.5 + spread * noise(&mut rng),
                noise(&mut rng),
            ]);
            labels.push(c);
        }
    }
    Dataset::new(Matrix::from_rows(&rows).unwrap(), labels, features(4), names(k)).unwrap()
}

#[test]
fn rbf_svm_solves_xor() {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for &(x, y) in &[(0.0, 0.0), (1.0, 1.0), (0.0, 1.0), (1.0, 0.0)] {
        for d in [-0.05, 0.0, 0.05] {
            rows.push([x + d, y - d]);
            labels.push(usize::from(x != y));
        }
    }
    let d = Dataset::new(Matrix::from_rows(&rows).unwrap(), labels, features(2), names(2)).unwrap();
    let rbf = svm_train(&d, &SvmHyper::new(10.0, KernelSpec::rbf(GammaMode::Fixed(2.0)))).unwrap();
    assert_eq!(rbf.predict(d.features()).unwrap(), d.labels());
    let linear = svm_train(&d, &SvmHyper::new(10.0, KernelSpec::linear())).unwrap();
    assert_ne!(linear.predict(d.features()).unwrap(), d.labels());
}

#[test]
fn huge_c_separates_separable_data() {
    let d = blobs(15, 3, 0.3, 4);
    let m = svm_train(&d, &SvmHyper::new(1e6, KernelSpec::linear())).unwrap();
    assert_eq!(m.predict(d.features()).unwrap(), d.labels());
}

#[test]
fn duplicating_every_row_keeps_boosted_predictions() {
    // With lambda = 0 and no child-weight floor, doubling every gradient and
    // hessian leaves leaf weights and the split ranking unchanged.
    let d = blobs(12, 3, 1.0, 8);
    let twice: Vec<usize> = (0..d.n_rows()).flat_map(|i| [i, i]).collect();
    let doubled = d.select_rows(&twice);
    let h = GbtHyper {
        n_estimators: 10,
        reg_lambda: 0.0,
        min_child_weight: 0.0,
        max_depth: 3,
        ..GbtHyper::default()
    };
    let a = gbt_train(&d, &h).unwrap();
    let b = gbt_train(&doubled, &h).unwrap();
    let probe = blobs(20, 3, 1.5, 99);
    let (pa, qa) = a.predict(probe.features()).unwrap();
    let (pb, qb) = b.predict(probe.features()).unwrap();
    assert_eq!(pa, pb);
    assert!(qa.max_abs_diff(&qb) < 1e-9);
}

fn small_cv(kind: ModelKind, mode: PipelineMode) -> (CvConfig, ParamGrid) {
    let mut cfg = CvConfig::new(kind, mode, 17);
    cfg.preprocess.pca = Some(PcaTarget::VarianceRatio(0.9999));
    let grid = match kind {
        ModelKind::Svm => ParamGrid::parse("'C': [0.1, 1, 10]\n'kernel': ['linear', 'rbf']\n'gamma': ['scale', 'auto']"),
        ModelKind::Gbt => ParamGrid::parse("'n_estimators': [5, 10]\n'learning_rate': [0.3]\n'max_depth': [3]"),
    }
    .unwrap();
    (cfg, grid)
}

#[test]
fn nested_cv_is_deterministic_across_thread_counts() {
    let d = blobs(20, 4, 1.2, 3);
    for kind in [ModelKind::Svm, ModelKind::Gbt] {
        for mode in [PipelineMode::PaperFaithful, PipelineMode::LeakageFree] {
            let (cfg, grid) = small_cv(kind, mode);
            let texts: Vec<String> = [1, 3]
                .iter()
                .map(|&threads| {
                    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
                    let r = pool.install(|| nested_cv(&d, &grid, &cfg)).unwrap();
                    render_report(&r, &[])
                })
                .collect();
            assert_eq!(texts[0], texts[1], "{kind:?} {mode:?}");
        }
    }
}

#[test]
fn leakage_free_scores_every_row_once() {
    let mut d = blobs(20, 3, 1.0, 6);
    // an extreme row that the filter would drop if it ever saw the test split
    let mut x = d.features().clone();
    x.set(0, 0, 500.0);
    d = d.with_features(x, features(4)).unwrap();
    let (cfg, grid) = small_cv(ModelKind::Svm, PipelineMode::LeakageFree);
    let r = nested_cv(&d, &grid, &cfg).unwrap();
    let scored: u64 = r.folds.iter().map(|f| f.confusion.total()).sum();
    assert_eq!(scored as usize, d.n_rows());
    assert!(r.preprocess.is_none());
    // per-fold scalers differ because they see different rows
    assert_ne!(r.folds[0].scaler_means, r.folds[1].scaler_means);

    let (cfg, grid) = small_cv(ModelKind::Svm, PipelineMode::PaperFaithful);
    let r = nested_cv(&d, &grid, &cfg).unwrap();
    let scored: u64 = r.folds.iter().map(|f| f.confusion.total()).sum();
    assert!((scored as usize) < d.n_rows());
    assert!(r.folds.windows(2).all(|w| w[0].scaler_means == w[1].scaler_means));
}

#[test]
fn metric_identity_holds_on_every_fold() {
    let d = blobs(18, 5, 1.6, 12);
    for kind in [ModelKind::Svm, ModelKind::Gbt] {
        let (cfg, grid) = small_cv(kind, PipelineMode::PaperFaithful);
        let r = nested_cv(&d, &grid, &cfg).unwrap();
        for f in &r.folds {
            assert_eq!(f.metrics.micro_f1, f.metrics.accuracy);
            assert_eq!(f.metrics.micro_recall, f.metrics.accuracy);
        }
        let mean = r.folds.iter().map(|f| f.metrics.accuracy).sum::<f64>() / r.folds.len() as f64;
        assert!((r.mean_accuracy() - mean).abs() < 1e-12);
        if kind == ModelKind::Gbt {
            assert!(r.folds.iter().all(|f| f.loss_non_increasing == Some(true)));
        }
    }
}
