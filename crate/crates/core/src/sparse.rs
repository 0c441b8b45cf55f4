//! Minimal compressed-row sparse matrix, enough for stencil operators.

#[derive(Clone, Debug, Default)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Assemble from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trips: Vec<(usize, usize, f64)>) -> Self {
        trips.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut values: Vec<f64> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trips {
            debug_assert!(r < nrows && c < ncols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let s = self.indptr[r];
        let e = self.indptr[r + 1];
        (&self.indices[s..e], &self.values[s..e])
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.nrows) {
            let (idx, val) = self.row(r);
            *yr = idx.iter().zip(val).map(|(&c, v)| v * x[c]).sum();
        }
    }

    /// y = Aᵀ x
    pub fn matvec_t(&self, x: &[f64], y: &mut [f64]) {
        y[..self.ncols].iter_mut().for_each(|v| *v = 0.0);
        for (r, &xr) in x.iter().enumerate().take(self.nrows) {
            if xr == 0.0 {
                continue;
            }
            let (idx, val) = self.row(r);
            for (&c, v) in idx.iter().zip(val) {
                y[c] += v * xr;
            }
        }
    }

    pub fn transpose(&self) -> Csr {
        let mut trips = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            let (idx, val) = self.row(r);
            for (&c, &v) in idx.iter().zip(val) {
                trips.push((c, r, v));
            }
        }
        Csr::from_triplets(self.ncols, self.nrows, trips)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_sum_and_transpose_matches() {
        let a = Csr::from_triplets(2, 3, vec![(0, 1, 1.0), (1, 2, 2.0), (0, 1, 0.5), (1, 0, -1.0)]);
        assert_eq!(a.nnz(), 3);
        let x = [1.0, 2.0, 3.0];
        let mut y = [0.0; 2];
        a.matvec(&x, &mut y);
        assert_eq!(y, [3.0, 5.0]);
        let at = a.transpose();
        let mut z = [0.0; 3];
        at.matvec(&[1.0, 1.0], &mut z);
        let mut z2 = [0.0; 3];
        a.matvec_t(&[1.0, 1.0], &mut z2);
        assert_eq!(z, z2);
        assert_eq!(z, [-1.0, 1.5, 2.0]);
    }
}
