use std::sync::Arc;

/// Compressed sparse row structure (sorted column indices per row).
#[derive(Debug, Clone)]
pub struct CsrPattern {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
}

impl CsrPattern {
    /// Symmetric pattern coupling every pair of indices inside each clique.
    pub fn from_cliques<'a, I>(n: usize, cliques: I) -> Self
    where
        I: IntoIterator<Item = &'a [usize]>,
    {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for c in cliques {
            for &i in c {
                for &j in c {
                    rows[i].push(j);
                }
            }
        }
        for (i, r) in rows.iter_mut().enumerate() {
            r.push(i);
            r.sort_unstable();
            r.dedup();
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for r in rows {
            col_idx.extend_from_slice(&r);
            row_ptr.push(col_idx.len());
        }
        CsrPattern { n, row_ptr, col_idx }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Storage offset of entry `(i, j)`, if structurally present.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.row(i);
        r.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }
}

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub pattern: Arc<CsrPattern>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: Arc<CsrPattern>) -> Self {
        let nnz = pattern.nnz();
        CsrMatrix { pattern, values: vec![0.0; nnz] }
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        let p = &self.pattern;
        for (i, yi) in y.iter_mut().enumerate().take(p.n) {
            let mut s = 0.0;
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                s += self.values[k] * x[p.col_idx[k]];
            }
            *yi = s;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n()];
        self.mul_vec(x, &mut y);
        y
    }

    /// `xᵀ A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let p = &self.pattern;
        let mut s = 0.0;
        for i in 0..p.n {
            let mut r = 0.0;
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                r += self.values[k] * y[p.col_idx[k]];
            }
            s += x[i] * r;
        }
        s
    }

    /// `self + alpha * other`; both must share the same pattern.
    pub fn add_scaled(&self, alpha: f64, other: &CsrMatrix) -> CsrMatrix {
        debug_assert!(Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern.col_idx == other.pattern.col_idx);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + alpha * b)
            .collect();
        CsrMatrix { pattern: self.pattern.clone(), values }
    }

    /// Principal submatrix on the indices with `map[i] = Some(new_i)`.
    pub fn principal_submatrix(&self, map: &[Option<usize>], n_sub: usize) -> CsrMatrix {
        let p = &self.pattern;
        let mut row_ptr = vec![0usize; n_sub + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut order: Vec<(usize, usize)> = map
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.map(|s| (s, i)))
            .collect();
        order.sort_unstable();
        for &(s, i) in &order {
            let mut entries: Vec<(usize, f64)> = (p.row_ptr[i]..p.row_ptr[i + 1])
                .filter_map(|k| map[p.col_idx[k]].map(|c| (c, self.values[k])))
                .collect();
            entries.sort_unstable_by_key(|e| e.0);
            for (c, v) in entries {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr[s + 1] = col_idx.len();
        }
        CsrMatrix {
            pattern: Arc::new(CsrPattern { n: n_sub, row_ptr, col_idx }),
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assemble_and_multiply() {
        let cliques: Vec<Vec<usize>> = vec![vec![0, 1], vec![1, 2]];
        let pat = Arc::new(CsrPattern::from_cliques(3, cliques.iter().map(|c| c.as_slice())));
        assert_eq!(pat.nnz(), 7);
        let mut a = CsrMatrix::zeros(pat.clone());
        for c in &cliques {
            for &i in c {
                for &j in c {
                    let p = pat.position(i, j).unwrap();
                    a.values[p] += if i == j { 1.0 } else { -1.0 };
                }
            }
        }
        let y = a.apply(&[1.0, 1.0, 1.0]);
        assert_eq!(y, vec![0.0, 0.0, 0.0]);
        let sub = a.principal_submatrix(&[None, Some(0), Some(1)], 2);
        assert_eq!(sub.get(0, 0), 2.0);
        assert_eq!(sub.get(0, 1), -1.0);
        assert_eq!(sub.get(1, 1), 1.0);
    }
}
