//! Confusion matrices and classification metrics.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Counts of (true class, predicted class) pairs; rows are true classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("true\\predicted,{}\n", self.class_names.join(","));
        for (name, row) in self.class_names.iter().zip(&self.counts) {
            s.push_str(name);
            for c in row {
                let _ = write!(s, ",{c}");
            }
            s.push('\n');
        }
        s
    }

    /// Right-aligned text table.
    pub fn render(&self) -> String {
        let width = self
            .class_names
            .iter()
            .map(String::len)
            .chain(self.counts.iter().flatten().map(|c| c.to_string().len()))
            .max()
            .unwrap_or(1)
            .max(4);
        let mut s = format!("{:>width$}", "");
        for name in &self.class_names {
            let _ = write!(s, " {name:>width$}");
        }
        s.push('\n');
        for (name, row) in self.class_names.iter().zip(&self.counts) {
            let _ = write!(s, "{name:>width$}");
            for c in row {
                let _ = write!(s, " {c:>width$}");
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassMetrics>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Builds the confusion matrix and metrics.
///
/// Per-class ratios with a zero denominator are 0. Macro averages run over
/// the classes that occur in `truth` or `predicted`. Micro figures are
/// computed from pooled counts, so for single-label data they equal the
/// accuracy bit for bit.
pub fn evaluate(truth: &[usize], predicted: &[usize], class_names: &[String]) -> Result<(ConfusionMatrix, Metrics)> {
    if truth.len() != predicted.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} true labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::InvalidArgument("cannot evaluate an empty prediction set".into()));
    }
    let k = class_names.len();
    if let Some(&bad) = truth.iter().chain(predicted).find(|&&c| c >= k) {
        return Err(Error::InvalidArgument(format!("class id {bad} out of range for {k} classes")));
    }
    let mut counts = vec![vec![0u64; k]; k];
    for (&t, &p) in truth.iter().zip(predicted) {
        counts[t][p] += 1;
    }
    let total = truth.len() as u64;
    let correct: u64 = (0..k).map(|i| counts[i][i]).sum();

    let mut per_class = Vec::with_capacity(k);
    let mut active = Vec::new();
    for c in 0..k {
        let tp = counts[c][c];
        let support: u64 = counts[c].iter().sum();
        let predicted_c: u64 = (0..k).map(|t| counts[t][c]).sum();
        let (fp, fn_) = (predicted_c - tp, support - tp);
        per_class.push(ClassMetrics {
            precision: ratio(tp, predicted_c),
            recall: ratio(tp, support),
            f1: ratio(2 * tp, 2 * tp + fp + fn_),
            support,
        });
        if support > 0 || predicted_c > 0 {
            active.push(c);
        }
    }
    let mean = |f: fn(&ClassMetrics) -> f64| -> f64 {
        active.iter().map(|&c| f(&per_class[c])).sum::<f64>() / active.len() as f64
    };
    // Pooled: tp = correct, fp = fn = total - correct.
    let wrong = total - correct;
    let metrics = Metrics {
        accuracy: ratio(correct, total),
        micro_precision: ratio(correct, correct + wrong),
        micro_recall: ratio(correct, correct + wrong),
        micro_f1: ratio(2 * correct, 2 * correct + 2 * wrong),
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        per_class,
    };
    let confusion = ConfusionMatrix {
        class_names: class_names.to_vec(),
        counts,
    };
    Ok((confusion, metrics))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|c| format!("c{c}")).collect()
    }

    #[test]
    fn perfect_prediction() {
        let y = [0, 1, 2, 2, 1, 0, 0];
        let (cm, m) = evaluate(&y, &y, &names(3)).unwrap();
        assert_eq!(cm.counts, vec![vec![3, 0, 0], vec![0, 2, 0], vec![0, 0, 2]]);
        assert_eq!(m.accuracy, 1.0);
        assert!(m.per_class.iter().all(|c| c.f1 == 1.0));
        assert_eq!(m.macro_f1, 1.0);
    }

    #[test]
    fn hand_computed_example() {
        let (cm, m) = evaluate(&[0, 0, 1, 1], &[0, 1, 1, 1], &names(2)).unwrap();
        assert_eq!(cm.counts, vec![vec![1, 1], vec![0, 2]]);
        assert_eq!(m.accuracy, 0.75);
        assert_eq!(m.macro_recall, 0.75);
        assert_eq!(m.micro_f1, 0.75);
        assert_eq!(m.per_class[0].precision, 1.0);
        assert!((m.per_class[1].precision - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_denominators_are_zero() {
        // class 2 never predicted and never true; class 1 predicted but never true
        let (_, m) = evaluate(&[0, 0], &[0, 1], &names(3)).unwrap();
        assert_eq!(m.per_class[1].precision, 0.0);
        assert_eq!(m.per_class[1].recall, 0.0);
        assert_eq!(m.per_class[2].f1, 0.0);
        // macro over classes 0 and 1 only
        assert_eq!(m.macro_recall, 0.25);
    }

    #[test]
    fn micro_scores_equal_accuracy() {
        let t = [0, 1, 2, 3, 4, 5, 6, 0, 1, 2];
        let p = [0, 2, 2, 3, 1, 5, 0, 0, 1, 6];
        let (_, m) = evaluate(&t, &p, &names(7)).unwrap();
        assert_eq!(m.micro_f1, m.accuracy);
        assert_eq!(m.micro_recall, m.accuracy);
        assert_eq!(m.micro_precision, m.accuracy);
    }

    #[test]
    fn errors() {
        assert!(evaluate(&[0], &[0, 1], &names(2)).is_err());
        assert!(evaluate(&[], &[], &names(2)).is_err());
        assert!(evaluate(&[2], &[0], &names(2)).is_err());
    }

    #[test]
    fn render_aligns_columns() {
        let (cm, _) = evaluate(&[0, 1, 1], &[0, 1, 0], &["A".into(), "BBBBBB".into()]).unwrap();
        let text = cm.render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.len() == lines[0].len()));
        assert!(cm.to_csv().starts_with("true\\predicted,A,BBBBBB\nA,1,0\n"));
    }
}
