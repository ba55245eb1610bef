//! Least-recently-used cache of kernel matrix rows.

use std::collections::BTreeMap;
use std::rc::Rc;

use super::kernel::Kernel;
use crate::linalg::Matrix;

/// Default memory budget per binary problem.
pub const DEFAULT_CACHE_BYTES: usize = 256 * 1024 * 1024;

pub(crate) struct KernelCache<'a> {
    x: &'a Matrix,
    rows: &'a [usize],
    kernel: Kernel,
    slots: Vec<Option<(Rc<[f64]>, u64)>>,
    lru: BTreeMap<u64, usize>,
    clock: u64,
    capacity: usize,
    pub(crate) hits: u64,
    pub(crate) misses: u64,
}

impl<'a> KernelCache<'a> {
    /// Caches rows of K over `x.select_rows(rows)` without copying `x`.
    pub(crate) fn new(x: &'a Matrix, rows: &'a [usize], kernel: Kernel, budget_bytes: usize) -> Self {
        let n = rows.len();
        let row_bytes = n * std::mem::size_of::<f64>();
        // Two rows are always needed at once.
        let capacity = (budget_bytes / row_bytes.max(1)).clamp(2, n.max(2));
        Self {
            x,
            rows,
            kernel,
            slots: vec![None; n],
            lru: BTreeMap::new(),
            clock: 0,
            capacity,
            hits: 0,
            misses: 0,
        }
    }

    #[inline]
    pub(crate) fn point(&self, i: usize) -> &[f64] {
        self.x.row(self.rows[i])
    }

    pub(crate) fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.len())
            .map(|i| self.kernel.eval(self.point(i), self.point(i)))
            .collect()
    }

    pub(crate) fn row(&mut self, i: usize) -> Rc<[f64]> {
        self.clock += 1;
        let now = self.clock;
        if let Some((row, stamp)) = &mut self.slots[i] {
            self.hits += 1;
            self.lru.remove(stamp);
            *stamp = now;
            self.lru.insert(now, i);
            return Rc::clone(row);
        }
        self.misses += 1;
        if self.lru.len() >= self.capacity {
            let (_, victim) = self.lru.pop_first().expect("cache non-empty");
            self.slots[victim] = None;
        }
        let xi = self.point(i);
        let row: Rc<[f64]> = (0..self.rows.len())
            .map(|j| self.kernel.eval(xi, self.point(j)))
            .collect();
        self.slots[i] = Some((Rc::clone(&row), now));
        self.lru.insert(now, i);
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::kernel::KernelKind;

    #[test]
    fn evicts_least_recently_used() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let rows = [0, 1, 2, 3];
        let k = Kernel {
            kind: KernelKind::Linear,
            gamma: 1.0,
            degree: 3,
            coef0: 0.0,
        };
        // Room for exactly two rows of four entries.
        let mut c = KernelCache::new(&x, &rows, k, 2 * 4 * 8);
        assert_eq!(&*c.row(1), &[0.0, 1.0, 2.0, 3.0]);
        c.row(2);
        c.row(1);
        c.row(3); // evicts 2
        assert_eq!((c.hits, c.misses), (1, 3));
        c.row(1);
        assert_eq!(c.hits, 2);
        c.row(2);
        assert_eq!(c.misses, 4);
        assert!(c.slots[3].is_none());
    }
}
