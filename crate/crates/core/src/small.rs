//! Fixed-size helpers for the per-node m x m blocks (m <= 3).

pub type Mat3 = [[f64; 3]; 3];
/// Connection coefficients indexed `[k][i][j]` for Γ^k_ij.
pub type Chr = [[[f64; 3]; 3]; 3];

pub const ZERO3: Mat3 = [[0.0; 3]; 3];
pub const ZERO_CHR: Chr = [[[0.0; 3]; 3]; 3];

/// Inverse of the leading `m x m` block, or `None` when singular.
pub fn invert(a: &Mat3, m: usize) -> Option<Mat3> {
    let mut work = *a;
    let mut inv = ZERO3;
    for (i, row) in inv.iter_mut().enumerate().take(m) {
        row[i] = 1.0;
    }
    let scale = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| a[i][j].abs())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&p, &q| work[p][col].abs().total_cmp(&work[q][col].abs()))
            .unwrap();
        if work[pivot][col].abs() <= 1e-300_f64.max(scale * 1e-15) {
            return None;
        }
        work.swap(col, pivot);
        inv.swap(col, pivot);
        let d = work[col][col];
        for j in 0..m {
            work[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..m {
            if r != col {
                let f = work[r][col];
                if f != 0.0 {
                    for j in 0..m {
                        work[r][j] -= f * work[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Lower Cholesky factor of an SPD block; `None` if not positive-definite.
pub fn cholesky(a: &Mat3, m: usize) -> Option<Mat3> {
    let mut l = ZERO3;
    for i in 0..m {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

pub fn is_diagonal(a: &Mat3, m: usize) -> bool {
    (0..m).all(|i| (0..m).all(|j| i == j || a[i][j] == 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invert_roundtrip() {
        let a = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let inv = invert(&a, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let p: f64 = (0..3).map(|k| a[i][k] * inv[k][j]).sum();
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = [[1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(cholesky(&a, 2).is_none());
        assert!(invert(&ZERO3, 2).is_none());
    }
}
