use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use drybean_core::dataset::{class_distribution, correlation_matrix, stratified_subsample, write_named_matrix};
use drybean_core::modelselect::{nested_cv, CvConfig};
use drybean_core::preprocess::{fit_preprocess, zscore_filter, PcaTarget, PreprocessConfig, ZScoreConfig};
use drybean_core::report::{parse_report, render_report};
use drybean_core::{load_csv, Dataset};

use crate::{CliError, RunConfig};

type Result<T> = std::result::Result<T, CliError>;

const TOP_LOADINGS: usize = 4;

fn load(cfg: &RunConfig) -> Result<Dataset> {
    let d = load_csv(&cfg.data, &cfg.label_column)?;
    match cfg.subsample {
        Some(n) => {
            let idx = stratified_subsample(&d, n, cfg.seed)?;
            log::info!("using a stratified subsample of {n} of {} rows", d.n_rows());
            Ok(d.select_rows(&idx))
        }
        None => Ok(d),
    }
}

fn preamble(cfg: &RunConfig) -> Vec<u8> {
    let mut s = String::new();
    for (k, v) in cfg.echo() {
        let _ = writeln!(s, "# {k}={v}");
    }
    s.into_bytes()
}

/// Writes `<out>/<name>`, prefixed with the config echo when `echo` is set.
fn write_output(cfg: &RunConfig, name: &str, echo: bool, body: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
    let path = cfg.out.join(name);
    let mut bytes = if echo { preamble(cfg) } else { Vec::new() };
    bytes.extend_from_slice(body);
    fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

fn render<F>(f: F) -> Vec<u8>
where
    F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory cannot fail");
    buf
}

fn zscore_config(cfg: &RunConfig) -> ZScoreConfig {
    ZScoreConfig::new(cfg.z_threshold)
}

fn preprocess_config(cfg: &RunConfig) -> PreprocessConfig {
    PreprocessConfig {
        zscore: Some(zscore_config(cfg)),
        pca: Some(PcaTarget::VarianceRatio(cfg.variance_threshold)),
    }
}

pub fn cmd_inspect(cfg: &RunConfig) -> Result<String> {
    let d = load(cfg)?;
    let dist = class_distribution(&d)?;
    write_output(cfg, "class_distribution.csv", true, &render(|w| dist.write_csv(w)))?;

    let raw = correlation_matrix(&d)?;
    write_output(
        cfg,
        "correlation_raw.csv",
        true,
        &render(|w| write_named_matrix(w, d.feature_names(), &raw)),
    )?;
    let (filtered, report) = zscore_filter(&d, zscore_config(cfg))?;
    let corr = correlation_matrix(&filtered)?;
    write_output(
        cfg,
        "correlation_filtered.csv",
        true,
        &render(|w| write_named_matrix(w, d.feature_names(), &corr)),
    )?;

    let mut s = format!(
        "{} rows, {} features, {} classes\n",
        d.n_rows(),
        d.n_features(),
        dist.classes.len()
    );
    for c in &dist.classes {
        let _ = writeln!(s, "{:>12} {:>6} {:>7.2}%", c.name, c.count, 100.0 * c.fraction);
    }
    let _ = writeln!(
        s,
        "correlations written before and after outlier removal ({} of {} rows kept)",
        report.rows_after(),
        report.rows_before
    );
    Ok(s)
}

pub fn cmd_preprocess(cfg: &RunConfig) -> Result<String> {
    let d = load(cfg)?;
    let out = fit_preprocess(&d, &preprocess_config(cfg))?;
    let outliers = out.outliers.as_ref().expect("filter enabled");
    let pca = out.fitted.pca.as_ref().expect("pca enabled");

    let cleaned = d.select_rows(&out.kept_rows);
    write_output(cfg, "cleaned.csv", true, &render(|w| cleaned.write_csv(w)))?;
    write_output(cfg, "outliers.csv", true, &render(|w| outliers.write_csv(w, &d)))?;
    write_output(cfg, "scree.csv", true, &render(|w| pca.write_scree_csv(w)))?;
    let mut loadings = Vec::new();
    pca.write_loadings_csv(&mut loadings, d.feature_names(), TOP_LOADINGS)?;
    write_output(cfg, "loadings.csv", true, &loadings)?;

    let mut s = format!(
        "rows: {} -> {} ({} removed at |z| >= {})\n",
        outliers.rows_before,
        outliers.rows_after(),
        outliers.removed.len(),
        cfg.z_threshold
    );
    for (c, n) in outliers.removed_per_class.iter().enumerate() {
        let _ = writeln!(s, "{:>12} {n:>5} removed", d.class_name(c));
    }
    let _ = writeln!(
        s,
        "principal components kept: {} (cumulative ratio {} >= {})",
        pca.n_components(),
        pca.cumulative_ratio()[pca.n_components() - 1],
        cfg.variance_threshold
    );
    for (k, names) in pca.top_features(d.feature_names(), TOP_LOADINGS)?.iter().enumerate() {
        let _ = writeln!(s, "PC{k}: {}", names.join(", "));
    }
    Ok(s)
}

pub fn cmd_nested_cv(cfg: &RunConfig) -> Result<String> {
    let d = load(cfg)?;
    let mut cv = CvConfig::new(cfg.model, cfg.mode, cfg.seed);
    cv.outer_k = cfg.outer_k;
    cv.inner_k = cfg.inner_k;
    cv.preprocess = preprocess_config(cfg);

    let started = Instant::now();
    let report = nested_cv(&d, &cfg.grid, &cv)?;
    let elapsed = started.elapsed();

    let prefix = cfg.model.name();
    let report_path = write_output(
        cfg,
        &format!("{prefix}_report.txt"),
        false,
        render_report(&report, &cfg.echo()).as_bytes(),
    )?;
    for f in &report.folds {
        write_output(
            cfg,
            &format!("{prefix}_fold{}_confusion.csv", f.fold),
            true,
            f.confusion.to_csv().as_bytes(),
        )?;
    }
    let mut folds = String::from("row_index,class,fold\n");
    for (i, &fold) in report.outer_plan.assignments.iter().enumerate() {
        let row = report.source_rows[i];
        let _ = writeln!(folds, "{row},{},{fold}", d.class_name(d.labels()[row]));
    }
    write_output(cfg, &format!("{prefix}_folds.csv"), true, folds.as_bytes())?;
    // Wall-clock time lives apart from the report so that reruns stay byte-identical.
    write_output(
        cfg,
        &format!("{prefix}_timing.txt"),
        true,
        format!("wall_clock_seconds={:.3}\n", elapsed.as_secs_f64()).as_bytes(),
    )?;

    let mut s = String::new();
    for (name, ms) in report.aggregate() {
        let _ = writeln!(s, "{name:>16} {:.4} ± {:.4}", ms.mean, ms.std);
    }
    let _ = writeln!(s, "modal best params: {}", report.modal_best_params());
    let _ = writeln!(s, "wall clock: {:.1}s", elapsed.as_secs_f64());
    let _ = writeln!(s, "report: {}", report_path.display());
    Ok(s)
}

/// Human-readable summary of a report file.
pub fn cmd_report(path: &Path) -> Result<String> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let r = parse_report(&text)?;
    let mut s = String::new();
    let model = r.summary_value("model").unwrap_or("?");
    let mode = r.summary_value("mode").unwrap_or("?");
    let _ = writeln!(s, "model {model}, mode {mode}, {} folds", r.folds.len());
    let _ = writeln!(s, "\n{:<16} {:>20} {:>22}", "metric", "mean", "std");
    for (name, ms) in &r.aggregate {
        let _ = writeln!(s, "{name:<16} {:>20} {:>22}", ms.mean, ms.std);
    }
    let _ = writeln!(s, "\nbest parameters per fold:");
    for f in &r.folds {
        let _ = writeln!(
            s,
            "  fold {}: {} (inner accuracy {:.4}, outer accuracy {:.4})",
            f.fold, f.best_params, f.inner_accuracy, f.metrics.accuracy
        );
    }
    if let Some(m) = r.summary_value("modal_best_params") {
        let _ = writeln!(s, "  modal: {m}");
    }
    for f in &r.folds {
        let _ = writeln!(s, "\nconfusion matrix, fold {} (rows true, columns predicted):", f.fold);
        s.push_str(&f.confusion.render());
    }
    Ok(s)
}
