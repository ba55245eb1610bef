use std::io::Write;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::prng;

/// Assignment of every row to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
    pub stratified: bool,
}

impl FoldPlan {
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }

    pub fn write_csv<W: Write>(&self, mut w: W, labels: &[usize], class_names: &[String]) -> std::io::Result<()> {
        writeln!(w, "row_index,class,fold")?;
        for (i, (&f, &l)) in self.assignments.iter().zip(labels).enumerate() {
            writeln!(w, "{i},{},{f}", class_names[l])?;
        }
        Ok(())
    }
}

/// Stratified k-fold assignment.
///
/// Classes are visited in id order. Each class's rows are shuffled with one
/// shared seeded stream and dealt round-robin, the deal continuing from the
/// fold where the previous class stopped, so per-class counts differ by at
/// most one across folds and fold sizes stay balanced.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be >= 2, got {k}")));
    }
    let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut groups = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        groups[l].push(i);
    }
    if let Some(smallest) = groups.iter().map(Vec::len).filter(|&c| c > 0).min() {
        if k > smallest {
            return Err(Error::InvalidArgument(format!(
                "k = {k} exceeds the smallest class size {smallest}"
            )));
        }
    } else {
        return Err(Error::EmptyDataset);
    }

    let mut rng = prng(seed);
    let mut assignments = vec![0; labels.len()];
    let mut next = 0;
    for rows in &mut groups {
        rows.shuffle(&mut rng);
        for &r in rows.iter() {
            assignments[r] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldPlan {
        k,
        assignments,
        seed,
        stratified: true,
    })
}
