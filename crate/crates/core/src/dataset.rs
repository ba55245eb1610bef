//! Labelled feature tables: CSV loading, label encoding, class shares and
//! feature correlations.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// A feature matrix with one integer class label per row.
///
/// Labels index into `class_names`, which is sorted ascending, so the
/// encoding is the rank of the label string in sorted order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    feature_names: Vec<String>,
    class_names: Vec<String>,
    label_name: String,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if feature_names.len() != features.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.cols()
            )));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        if class_names.is_empty() || class_names.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "class names must be non-empty, sorted and unique".into(),
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::InvalidArgument(format!(
                "label id {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        Ok(Self {
            features,
            labels,
            feature_names,
            class_names,
            label_name: "Class".to_string(),
        })
    }

    /// Encodes string labels by their rank among the sorted unique labels.
    pub fn from_string_labels<S: AsRef<str>>(
        features: Matrix,
        labels: &[S],
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let class_names: Vec<String> = labels
            .iter()
            .map(|s| s.as_ref().to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let ids: Vec<usize> = labels
            .iter()
            .map(|s| class_names.binary_search_by(|c| c.as_str().cmp(s.as_ref())).unwrap())
            .collect();
        Self::new(features, ids, feature_names, class_names)
    }

    pub fn with_label_name(mut self, name: impl Into<String>) -> Self {
        self.label_name = name.into();
        self
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_name(&self, id: usize) -> &str {
        &self.class_names[id]
    }

    /// Decodes every label id back to its class string.
    pub fn decoded_labels(&self) -> Vec<&str> {
        self.labels.iter().map(|&l| self.class_names[l].as_str()).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Row indices grouped by class id, each group ascending.
    pub fn rows_by_class(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.n_classes()];
        for (i, &l) in self.labels.iter().enumerate() {
            groups[l].push(i);
        }
        groups
    }

    /// Subset of rows in the given order. Class names are kept as-is so label
    /// ids stay comparable with the parent dataset.
    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
            label_name: self.label_name.clone(),
        }
    }

    /// Same rows and labels with a new feature matrix.
    pub fn with_features(&self, features: Matrix, feature_names: Vec<String>) -> Result<Dataset> {
        let d = Dataset::new(
            features,
            self.labels.clone(),
            feature_names,
            self.class_names.clone(),
        )?;
        Ok(d.with_label_name(self.label_name.clone()))
    }

    /// Writes the table as CSV in the same dialect `load_csv` reads.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(&self.label_name);
        out.write_record(&header)?;
        for (row, &label) in self.features.row_iter().zip(&self.labels) {
            let mut record: Vec<String> = row.iter().map(f64::to_string).collect();
            record.push(self.class_names[label].clone());
            out.write_record(&record)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Loads a comma-separated table with a header row.
///
/// Blank lines and lines starting with `#` are skipped. Every column other
/// than `label_column` must hold finite reals.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, label_column)
}

pub fn parse_csv(text: &str, label_column: &str) -> Result<Dataset> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .quoting(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let csv_error = |e: csv::Error| {
        let line = e.position().map_or(1, |p| p.line() as usize);
        match e.kind() {
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::RaggedRow {
                line,
                expected: *expected_len as usize,
                found: *len as usize,
            },
            _ => Error::Parse {
                what: "csv",
                line,
                message: e.to_string(),
            },
        }
    };

    let quoted = |line: usize| Error::Parse {
        what: "csv",
        line,
        message: "quoted fields are not supported".into(),
    };
    let header = reader.headers().map_err(csv_error)?;
    if header.iter().any(|f| f.contains('"')) {
        return Err(quoted(header.position().map_or(1, |p| p.line() as usize)));
    }
    let columns: Vec<String> = header.iter().map(String::from).collect();
    if columns.is_empty() || columns.iter().any(String::is_empty) {
        return Err(Error::MissingHeader);
    }
    let mut seen = HashSet::new();
    for c in &columns {
        if !seen.insert(c.as_str()) {
            return Err(Error::DuplicateColumn(c.clone()));
        }
    }
    let label_idx = columns
        .iter()
        .position(|c| c == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;
    if columns.len() < 2 {
        return Err(Error::InvalidArgument("no feature columns besides the label".into()));
    }

    let n_features = columns.len() - 1;
    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line_no = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().any(|f| f.contains('"')) {
            return Err(quoted(line_no));
        }
        for (j, field) in record.iter().enumerate() {
            if j == label_idx {
                if field.is_empty() {
                    return Err(Error::BadCell {
                        line: line_no,
                        column: columns[j].clone(),
                        value: field.to_string(),
                    });
                }
                raw_labels.push(field.to_string());
                continue;
            }
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(Error::BadCell {
                        line: line_no,
                        column: columns[j].clone(),
                        value: field.to_string(),
                    })
                }
            }
        }
    }
    if raw_labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let features = Matrix::new(raw_labels.len(), n_features, values)?;
    let feature_names = columns
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx)
        .map(|(_, c)| c.clone())
        .collect();
    Ok(Dataset::from_string_labels(features, &raw_labels, feature_names)?.with_label_name(label_column))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassShare {
    pub name: String,
    pub count: usize,
    pub fraction: f64,
}

/// Class counts and fractions, largest class first.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistribution {
    pub classes: Vec<ClassShare>,
}

impl ClassDistribution {
    pub fn get(&self, name: &str) -> Option<&ClassShare> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn total(&self) -> usize {
        self.classes.iter().map(|c| c.count).sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "class,count,fraction")?;
        for c in &self.classes {
            writeln!(w, "{},{},{}", c.name, c.count, c.fraction)?;
        }
        Ok(())
    }
}

/// Classes with no rows are omitted.
pub fn class_distribution(d: &Dataset) -> Result<ClassDistribution> {
    if d.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let n = d.n_rows() as f64;
    let mut classes: Vec<ClassShare> = d
        .class_counts()
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(id, count)| ClassShare {
            name: d.class_name(id).to_string(),
            count,
            fraction: count as f64 / n,
        })
        .collect();
    classes.sort_by(|a, b| b.count.cmp(&a.count));
    Ok(ClassDistribution { classes })
}

/// Pearson correlation between feature columns (population moments).
pub fn correlation_matrix(d: &Dataset) -> Result<Matrix> {
    let x = d.features();
    if x.rows() < 2 {
        return Err(Error::InvalidArgument("correlation needs at least 2 rows".into()));
    }
    let cov = crate::linalg::covariance(x)?;
    let p = x.cols();
    let mut std = Vec::with_capacity(p);
    for j in 0..p {
        let var = cov.get(j, j);
        if var <= 0.0 {
            return Err(Error::ConstantColumn(d.feature_names()[j].clone()));
        }
        std.push(var.sqrt());
    }
    let mut corr = Matrix::identity(p);
    for i in 0..p {
        for j in (i + 1)..p {
            let r = (cov.get(i, j) / (std[i] * std[j])).clamp(-1.0, 1.0);
            corr.set(i, j, r);
            corr.set(j, i, r);
        }
    }
    Ok(corr)
}

/// Writes a square matrix with the same names on both axes.
pub fn write_named_matrix<W: Write>(mut w: W, names: &[String], m: &Matrix) -> std::io::Result<()> {
    writeln!(w, ",{}", names.join(","))?;
    for (name, row) in names.iter().zip(m.row_iter()) {
        write!(w, "{name}")?;
        for v in row {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Draws a seeded stratified subsample of `n` rows. Each class receives its
/// proportional share (largest remainder, ties to the lower class id) and at
/// least one row when `n` allows. Returned indices are ascending.
pub fn stratified_subsample(d: &Dataset, n: usize, seed: u64) -> Result<Vec<usize>> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    let total = d.n_rows();
    if n == 0 || n > total {
        return Err(Error::InvalidArgument(format!(
            "subsample size {n} must be in 1..={total}"
        )));
    }
    let groups = d.rows_by_class();
    let present: Vec<usize> = (0..groups.len()).filter(|&c| !groups[c].is_empty()).collect();
    let mut quota: BTreeMap<usize, usize> = BTreeMap::new();
    let mut remainders = Vec::new();
    let mut assigned = 0;
    for &c in &present {
        let exact = groups[c].len() as f64 * n as f64 / total as f64;
        let q = exact.floor() as usize;
        quota.insert(c, q);
        assigned += q;
        remainders.push((exact - q as f64, c));
    }
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, c) in remainders.iter().take(n - assigned) {
        *quota.get_mut(&c).unwrap() += 1;
    }
    let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut picked = Vec::with_capacity(n);
    for &c in &present {
        let mut rows = groups[c].clone();
        rows.shuffle(&mut rng);
        picked.extend_from_slice(&rows[..quota[&c]]);
    }
    picked.sort_unstable();
    Ok(picked)
}
