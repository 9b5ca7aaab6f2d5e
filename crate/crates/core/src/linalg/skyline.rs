use super::CsrMatrix;
use crate::{Error, Result};
use std::collections::VecDeque;

/// Reverse Cuthill–McKee ordering of a symmetric sparsity pattern.
/// Returns `perm` with `perm[new] = old`.
pub fn rcm_ordering(a: &CsrMatrix) -> Vec<usize> {
    let p = &a.pattern;
    let n = p.n;
    let degree: Vec<usize> = (0..n).map(|i| p.row(i).len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        // start each component from a minimum-degree unvisited vertex
        let start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .unwrap_or(0);
        let start = pseudo_peripheral(a, start, &degree);
        let mut queue = VecDeque::new();
        queue.push_back(start);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = p.row(v).iter().copied().filter(|&u| !visited[u]).collect();
            nbrs.sort_unstable_by_key(|&u| (degree[u], u));
            for u in nbrs {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(a: &CsrMatrix, start: usize, degree: &[usize]) -> usize {
    let p = &a.pattern;
    let mut current = start;
    let mut best_ecc = 0;
    for _ in 0..8 {
        let mut level = vec![usize::MAX; p.n];
        level[current] = 0;
        let mut queue = VecDeque::from([current]);
        let mut last = current;
        while let Some(v) = queue.pop_front() {
            for &u in p.row(v) {
                if level[u] == usize::MAX {
                    level[u] = level[v] + 1;
                    queue.push_back(u);
                    if level[u] > level[last] || (level[u] == level[last] && degree[u] < degree[last]) {
                        last = u;
                    }
                }
            }
        }
        let ecc = level[last];
        if ecc <= best_ecc {
            break;
        }
        best_ecc = ecc;
        current = last;
    }
    current
}

/// Envelope (skyline) Cholesky factor `P A Pᵀ = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// first stored column of each row of `L` (in permuted numbering)
    first: Vec<usize>,
    /// offset of row `i` inside `data`; row `i` stores columns `first[i]..=i`
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let perm = rcm_ordering(a);
        Self::factor_with_ordering(a, perm)
    }

    pub fn factor_with_ordering(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.n();
        let p = &a.pattern;
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for &j in p.row(old) {
                let jn = inv[j];
                if jn < first[new] {
                    first[new] = jn;
                }
            }
        }
        let mut offset = vec![0usize; n + 1];
        for i in 0..n {
            offset[i + 1] = offset[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; offset[n]];
        for (new, &old) in perm.iter().enumerate() {
            for k in p.row_ptr[old]..p.row_ptr[old + 1] {
                let jn = inv[p.col_idx[k]];
                if jn <= new {
                    data[offset[new] + jn - first[new]] += a.values[k];
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let len = j - k0;
                let ri = offset[i] + (k0 - fi);
                let rj = offset[j] + (k0 - fj);
                let mut s = 0.0;
                for t in 0..len {
                    s += data[ri + t] * data[rj + t];
                }
                let idx = offset[i] + (j - fi);
                if j < i {
                    let diag = data[offset[j] + (j - fj)];
                    data[idx] = (data[idx] - s) / diag;
                } else {
                    let d = data[idx] - s;
                    if d <= 0.0 || !d.is_finite() {
                        return Err(Error::NotPositiveDefinite { row: perm[i], pivot: d });
                    }
                    data[idx] = d.sqrt();
                }
            }
        }
        Ok(SkylineCholesky { n, perm, first, offset, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        // L y = b
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            let mut s = y[i];
            for (t, lij) in row[..i - fi].iter().enumerate() {
                s -= lij * y[fi + t];
            }
            y[i] = s / row[i - fi];
        }
        // Lᵀ x = y
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            let xi = y[i] / row[i - fi];
            y[i] = xi;
            for (t, lij) in row[..i - fi].iter().enumerate() {
                y[fi + t] -= lij * xi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}
