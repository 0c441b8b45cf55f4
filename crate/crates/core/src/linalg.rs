//! Dense symmetric eigensolver, preconditioned conjugate gradients
//! and a fully reorthogonalized Lanczos iteration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{KvError, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// y += a x
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Eigen-decomposition of a dense symmetric matrix stored column-major.
/// Returns ascending eigenvalues and column-major eigenvectors.
pub fn symmetric_eigen(n: usize, a: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let mat = faer::Mat::<f64>::from_fn(n, n, |i, j| a[j * n + i]);
    let evd = mat
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| KvError::NonConvergence {
            solver: "self_adjoint_eigen",
            iterations: 0,
            residual: f64::NAN,
        })?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let w: Vec<f64> = (0..n).map(|k| s[k]).collect();
    let mut vecs = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            vecs[j * n + i] = u[(i, j)];
        }
    }
    Ok((w, vecs))
}

#[derive(Clone, Debug)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned CG for a symmetric positive (semi)definite system.
/// For singular systems `b` must lie in the range; the iterate never leaves
/// it when started from zero. Stops when ‖r‖ ≤ max(tol·‖b‖, atol).
pub fn pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    diag: Option<&[f64]>,
    tol: f64,
    atol: f64,
    max_iter: usize,
) -> Result<CgResult> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm <= atol {
        return Ok(CgResult {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let precond = |r: &[f64], z: &mut [f64]| match diag {
        Some(d) => {
            for i in 0..n {
                z[i] = if d[i] > 0.0 { r[i] / d[i] } else { r[i] };
            }
        }
        None => z.copy_from_slice(r),
    };
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = 1.0;
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rn = norm(&r);
        rel = rn / bnorm;
        if rel <= tol || rn <= atol {
            return Ok(CgResult {
                x,
                iterations: it,
                relative_residual: rel,
            });
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(KvError::NonConvergence {
        solver: "conjugate_gradient",
        iterations: max_iter,
        residual: rel,
    })
}

/// Ritz pairs from a Lanczos run.
#[derive(Clone, Debug)]
pub struct RitzPairs {
    /// Descending.
    pub values: Vec<f64>,
    /// One vector per value.
    pub vectors: Vec<Vec<f64>>,
    /// Residual norms ‖A v − θ v‖ (vectors have unit norm).
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// Convergence test for Ritz residuals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tolerance {
    Absolute(f64),
    /// Relative to |θ| of the pair.
    Relative(f64),
}

impl Tolerance {
    fn accepts(self, residual: f64, theta: f64) -> bool {
        match self {
            Tolerance::Absolute(t) => residual <= t,
            Tolerance::Relative(t) => residual <= t * theta.abs(),
        }
    }
}

/// Largest-algebraic eigenpairs of a symmetric operator by Lanczos with full
/// reorthogonalization. Stops once the leading `count` Ritz residuals are
/// below `tol`, or fails after `max_iter` steps.
pub fn lanczos_largest(
    apply: impl Fn(&[f64], &mut [f64]),
    n: usize,
    count: usize,
    max_iter: usize,
    tol: Tolerance,
    seed: u64,
) -> Result<RitzPairs> {
    let max_iter = max_iter.min(n).max(1);
    let count = count.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n0 = norm(&q0);
    q0.iter_mut().for_each(|v| *v /= n0);
    let mut basis: Vec<Vec<f64>> = vec![q0];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut best: Option<RitzPairs> = None;
    for j in 0..max_iter {
        apply(&basis[j], &mut w);
        let a = dot(&basis[j], &w);
        alpha.push(a);
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
            }
        }
        let b = norm(&w);
        let done = j + 1 == max_iter || b <= 1e-14 * a.abs().max(1.0) || j + 1 == n;
        let check = done || (j + 1 >= count && (j + 1) % 10 == 0);
        if check {
            let pairs = ritz(&basis, &alpha, &beta, b, count)?;
            let converged = pairs
                .residuals
                .iter()
                .zip(&pairs.values)
                .all(|(&r, &v)| tol.accepts(r, v));
            if converged || done {
                if converged || b <= 1e-14 * a.abs().max(1.0) || j + 1 == n {
                    return Ok(RitzPairs {
                        iterations: j + 1,
                        ..pairs
                    });
                }
                best = Some(pairs);
                break;
            }
        }
        beta.push(b);
        basis.push(w.iter().map(|v| v / b).collect());
    }
    let residual = best
        .as_ref()
        .map(|p| p.residuals.iter().cloned().fold(0.0, f64::max))
        .unwrap_or(f64::NAN);
    Err(KvError::NonConvergence {
        solver: "lanczos",
        iterations: max_iter,
        residual,
    })
}

fn ritz(basis: &[Vec<f64>], alpha: &[f64], beta: &[f64], b_last: f64, count: usize) -> Result<RitzPairs> {
    let k = alpha.len();
    let mut t = vec![0.0; k * k];
    for i in 0..k {
        t[i * k + i] = alpha[i];
        if i + 1 < k {
            t[i * k + i + 1] = beta[i];
            t[(i + 1) * k + i] = beta[i];
        }
    }
    let (vals, vecs) = symmetric_eigen(k, t)?;
    let take = count.min(k);
    let n = basis[0].len();
    let mut values = Vec::with_capacity(take);
    let mut vectors = Vec::with_capacity(take);
    let mut residuals = Vec::with_capacity(take);
    for idx in (k - take..k).rev() {
        let s = &vecs[idx * k..(idx + 1) * k];
        values.push(vals[idx]);
        residuals.push((b_last * s[k - 1]).abs());
        let mut v = vec![0.0; n];
        for (q, &c) in basis.iter().zip(s) {
            axpy(c, q, &mut v);
        }
        vectors.push(v);
    }
    Ok(RitzPairs {
        values,
        vectors,
        residuals,
        iterations: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> impl Fn(&[f64], &mut [f64]) {
        move |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                y[i] = 2.0 * x[i] - l - r;
            }
        }
    }

    #[test]
    fn dense_eigen_of_path_laplacian() {
        let n = 12;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 2.0;
            if i + 1 < n {
                a[i * n + i + 1] = -1.0;
                a[(i + 1) * n + i] = -1.0;
            }
        }
        let (w, _) = symmetric_eigen(n, a).unwrap();
        for (k, wk) in w.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((wk - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn cg_solves_spd_system() {
        let n = 50;
        let op = laplacian_1d(n);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let res = pcg(&op, &b, None, 1e-12, 0.0, 500).unwrap();
        let mut ax = vec![0.0; n];
        op(&res.x, &mut ax);
        let err: f64 = ax.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn lanczos_finds_largest_eigenvalues() {
        let n = 200;
        let op = laplacian_1d(n);
        let pairs = lanczos_largest(&op, n, 3, 200, Tolerance::Absolute(1e-8), 1).unwrap();
        for (k, v) in pairs.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (n - k) as f64 / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-8, "{v} vs {exact}");
        }
    }
}
