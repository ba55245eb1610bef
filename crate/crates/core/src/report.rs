//! Versioned plain-text cross-validation report.
//!
//! The layout is line-oriented so two runs can be compared with `diff`:
//!
//! ```text
//! drybean-report 1
//! [config]
//! key=value
//! [summary]
//! ...
//! [aggregate]
//! metric,mean,std
//! [grid]
//! index,params
//! [fold 0]
//! [fold 0 per-class]
//! [fold 0 confusion]
//! ...
//! [end]
//! ```
//!
//! Floats use the shortest representation that parses back to the same
//! value, so writing and re-reading a report is lossless.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::modelselect::{Candidate, ClassMetrics, ConfusionMatrix, CvReport, FoldResult, MeanStd, Metrics};

pub const REPORT_VERSION: u32 = 1;
const MAGIC: &str = "drybean-report";

/// A parsed report file.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportFile {
    pub version: u32,
    pub config: Vec<(String, String)>,
    pub summary: Vec<(String, String)>,
    pub aggregate: Vec<(String, MeanStd)>,
    pub candidates: Vec<Candidate>,
    pub class_names: Vec<String>,
    pub folds: Vec<FoldResult>,
}

impl ReportFile {
    pub fn summary_value(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn config_value(&self, key: &str) -> Option<&str> {
        self.config.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn aggregate_value(&self, metric: &str) -> Option<MeanStd> {
        self.aggregate.iter().find(|(m, _)| m == metric).map(|(_, v)| *v)
    }
}

fn opt_f64(v: Option<f64>) -> String {
    v.map_or_else(|| "na".to_string(), |x| x.to_string())
}

fn join_f64(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

const METRIC_KEYS: [&str; 7] = [
    "accuracy",
    "micro_precision",
    "micro_recall",
    "micro_f1",
    "macro_precision",
    "macro_recall",
    "macro_f1",
];

fn metric_values(m: &Metrics) -> [f64; 7] {
    [
        m.accuracy,
        m.micro_precision,
        m.micro_recall,
        m.micro_f1,
        m.macro_precision,
        m.macro_recall,
        m.macro_f1,
    ]
}

/// Renders `report`; `config` is echoed verbatim in the `[config]` section.
pub fn render_report(report: &CvReport, config: &[(String, String)]) -> String {
    let mut s = format!("{MAGIC} {REPORT_VERSION}\n[config]\n");
    for (k, v) in config {
        let _ = writeln!(s, "{k}={v}");
    }
    s.push_str("[summary]\n");
    let _ = writeln!(s, "model={}", report.kind.name());
    let _ = writeln!(s, "mode={}", report.mode.name());
    let _ = writeln!(s, "outer_k={}", report.outer_k);
    let _ = writeln!(s, "inner_k={}", report.inner_k);
    let _ = writeln!(s, "seed={}", report.seed);
    let _ = writeln!(s, "classes={}", report.class_names.join(","));
    let _ = writeln!(s, "rows={}", report.n_rows);
    if let Some(p) = &report.preprocess {
        let _ = writeln!(s, "rows_before_filter={}", p.rows_before);
        let _ = writeln!(s, "rows_after_filter={}", p.rows_after);
        let _ = writeln!(s, "n_components={}", p.n_components);
    }
    let _ = writeln!(s, "mean_accuracy={}", report.mean_accuracy());
    let _ = writeln!(s, "modal_best_params={}", report.modal_best_params());

    s.push_str("[aggregate]\nmetric,mean,std\n");
    for (name, ms) in report.aggregate() {
        let _ = writeln!(s, "{name},{},{}", ms.mean, ms.std);
    }

    s.push_str("[grid]\nindex,params\n");
    for (i, c) in report.candidates.iter().enumerate() {
        let _ = writeln!(s, "{i},{c}");
    }

    for f in &report.folds {
        let i = f.fold;
        let _ = writeln!(s, "[fold {i}]");
        let _ = writeln!(s, "n_train={}", f.n_train);
        let _ = writeln!(s, "n_test={}", f.n_test);
        let _ = writeln!(s, "best_index={}", f.best_index);
        let _ = writeln!(s, "best_params={}", f.best_params);
        let _ = writeln!(s, "inner_accuracy={}", f.inner_accuracy);
        let scores: Vec<String> = f.candidate_scores.iter().map(|v| opt_f64(*v)).collect();
        let _ = writeln!(s, "candidate_scores={}", scores.join(","));
        let _ = writeln!(s, "scaler_means={}", join_f64(&f.scaler_means));
        let _ = writeln!(s, "solver_warnings={}", f.solver_warnings);
        let loss = match f.loss_non_increasing {
            Some(b) => b.to_string(),
            None => "na".into(),
        };
        let _ = writeln!(s, "loss_non_increasing={loss}");
        for (k, v) in METRIC_KEYS.iter().zip(metric_values(&f.metrics)) {
            let _ = writeln!(s, "{k}={v}");
        }
        let _ = writeln!(s, "[fold {i} per-class]");
        s.push_str("class,precision,recall,f1,support\n");
        for (name, c) in report.class_names.iter().zip(&f.metrics.per_class) {
            let _ = writeln!(s, "{name},{},{},{},{}", c.precision, c.recall, c.f1, c.support);
        }
        let _ = writeln!(s, "[fold {i} confusion]");
        s.push_str(&f.confusion.to_csv());
    }
    s.push_str("[end]\n");
    s
}

struct Lines<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            what: "report",
            line: self.pos.max(1),
            message: message.into(),
        }
    }

    /// Next line, or an error naming the line after the last one.
    fn next(&mut self) -> Result<&'a str> {
        match self.lines.get(self.pos) {
            Some(l) => {
                self.pos += 1;
                Ok(l)
            }
            None => {
                self.pos = self.lines.len() + 1;
                Err(self.err("unexpected end of report (truncated?)"))
            }
        }
    }

    fn peek(&self) -> Option<&'a str> {
        self.lines.get(self.pos).copied()
    }

    fn expect(&mut self, want: &str) -> Result<()> {
        let got = self.next()?;
        if got != want {
            return Err(self.err(format!("expected `{want}`, found `{got}`")));
        }
        Ok(())
    }

    /// `key=value` lines until the next section header.
    fn pairs(&mut self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        while let Some(l) = self.peek() {
            if l.starts_with('[') {
                break;
            }
            self.pos += 1;
            let (k, v) = l.split_once('=').ok_or_else(|| self.err(format!("expected key=value, found `{l}`")))?;
            out.push((k.to_string(), v.to_string()));
        }
        Ok(out)
    }

    /// Data lines until the next section header.
    fn rows(&mut self) -> Vec<&'a str> {
        let mut out = Vec::new();
        while let Some(l) = self.peek() {
            if l.starts_with('[') {
                break;
            }
            self.pos += 1;
            out.push(l);
        }
        out
    }

    fn num<T: std::str::FromStr>(&self, s: &str, what: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("invalid {what} `{s}`")))
    }
}

fn take<'p>(pairs: &'p [(String, String)], key: &str, lines: &Lines) -> Result<&'p str> {
    pairs
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| lines.err(format!("missing `{key}`")))
}

fn split_list(s: &str) -> Vec<&str> {
    if s.is_empty() {
        Vec::new()
    } else {
        s.split(',').collect()
    }
}

pub fn parse_report(text: &str) -> Result<ReportFile> {
    let mut l = Lines {
        lines: text.lines().collect(),
        pos: 0,
    };
    let header = l.next()?;
    let version: u32 = match header.split_once(' ') {
        Some((MAGIC, v)) => l.num(v, "version")?,
        _ => return Err(l.err(format!("not a report file: `{header}`"))),
    };
    if version != REPORT_VERSION {
        return Err(l.err(format!("unsupported report version {version}")));
    }
    l.expect("[config]")?;
    let config = l.pairs()?;
    l.expect("[summary]")?;
    let summary = l.pairs()?;
    let class_names: Vec<String> = split_list(take(&summary, "classes", &l)?)
        .into_iter()
        .map(String::from)
        .collect();
    let k = class_names.len();

    l.expect("[aggregate]")?;
    l.expect("metric,mean,std")?;
    let mut aggregate = Vec::new();
    for row in l.rows() {
        let parts: Vec<&str> = row.split(',').collect();
        if parts.len() != 3 {
            return Err(l.err(format!("bad aggregate row `{row}`")));
        }
        let mean = l.num(parts[1], "mean")?;
        let std = l.num(parts[2], "std")?;
        aggregate.push((parts[0].to_string(), MeanStd { mean, std }));
    }

    l.expect("[grid]")?;
    l.expect("index,params")?;
    let mut candidates = Vec::new();
    for row in l.rows() {
        let (idx, params) = row.split_once(',').ok_or_else(|| l.err(format!("bad grid row `{row}`")))?;
        let idx: usize = l.num(idx, "grid index")?;
        if idx != candidates.len() {
            return Err(l.err(format!("grid index {idx} out of order")));
        }
        candidates.push(Candidate::parse(params).ok_or_else(|| l.err(format!("bad candidate `{params}`")))?);
    }

    let mut folds = Vec::new();
    loop {
        let head = l.next()?;
        if head == "[end]" {
            break;
        }
        let fold = folds.len();
        if head != format!("[fold {fold}]") {
            return Err(l.err(format!("expected `[fold {fold}]` or `[end]`, found `{head}`")));
        }
        let p = l.pairs()?;
        let scores = split_list(take(&p, "candidate_scores", &l)?)
            .into_iter()
            .map(|v| if v == "na" { Ok(None) } else { l.num(v, "score").map(Some) })
            .collect::<Result<Vec<_>>>()?;
        let scaler_means = split_list(take(&p, "scaler_means", &l)?)
            .into_iter()
            .map(|v| l.num(v, "mean"))
            .collect::<Result<Vec<f64>>>()?;
        let loss_non_increasing = match take(&p, "loss_non_increasing", &l)? {
            "na" => None,
            v => Some(l.num(v, "flag")?),
        };
        let best_params = take(&p, "best_params", &l)?;
        let mut mv = [0.0; 7];
        for (slot, key) in mv.iter_mut().zip(METRIC_KEYS) {
            *slot = l.num(take(&p, key, &l)?, key)?;
        }

        l.expect(&format!("[fold {fold} per-class]"))?;
        l.expect("class,precision,recall,f1,support")?;
        let rows = l.rows();
        if rows.len() != k {
            return Err(l.err(format!("expected {k} per-class rows, found {}", rows.len())));
        }
        let mut per_class = Vec::with_capacity(k);
        for row in rows {
            let parts: Vec<&str> = row.split(',').collect();
            if parts.len() != 5 {
                return Err(l.err(format!("bad per-class row `{row}`")));
            }
            per_class.push(ClassMetrics {
                precision: l.num(parts[1], "precision")?,
                recall: l.num(parts[2], "recall")?,
                f1: l.num(parts[3], "f1")?,
                support: l.num(parts[4], "support")?,
            });
        }

        l.expect(&format!("[fold {fold} confusion]"))?;
        l.next()?;
        let rows = l.rows();
        if rows.len() != k {
            return Err(l.err(format!("expected {k} confusion rows, found {}", rows.len())));
        }
        let mut counts = Vec::with_capacity(k);
        for row in rows {
            let cells = row
                .split(',')
                .skip(1)
                .map(|c| l.num(c, "count"))
                .collect::<Result<Vec<u64>>>()?;
            if cells.len() != k {
                return Err(l.err(format!("bad confusion row `{row}`")));
            }
            counts.push(cells);
        }

        folds.push(FoldResult {
            fold,
            n_train: l.num(take(&p, "n_train", &l)?, "n_train")?,
            n_test: l.num(take(&p, "n_test", &l)?, "n_test")?,
            best_index: l.num(take(&p, "best_index", &l)?, "best_index")?,
            best_params: Candidate::parse(best_params).ok_or_else(|| l.err("bad best_params"))?,
            inner_accuracy: l.num(take(&p, "inner_accuracy", &l)?, "inner_accuracy")?,
            candidate_scores: scores,
            metrics: Metrics {
                accuracy: mv[0],
                micro_precision: mv[1],
                micro_recall: mv[2],
                micro_f1: mv[3],
                macro_precision: mv[4],
                macro_recall: mv[5],
                macro_f1: mv[6],
                per_class,
            },
            confusion: ConfusionMatrix {
                class_names: class_names.clone(),
                counts,
            },
            scaler_means,
            solver_warnings: l.num(take(&p, "solver_warnings", &l)?, "solver_warnings")?,
            loss_non_increasing,
        });
    }
    if let Some(extra) = l.peek() {
        return Err(l.err(format!("trailing content after [end]: `{extra}`")));
    }
    Ok(ReportFile {
        version,
        config,
        summary,
        aggregate,
        candidates,
        class_names,
        folds,
    })
}
