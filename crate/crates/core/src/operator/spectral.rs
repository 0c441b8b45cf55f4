use super::{FlowOperator, MassMatrix};
use crate::error::{KvError, Result};
use crate::fields::{energy_report, VectorField};
use crate::linalg::{lanczos_largest, symmetric_eigen, Tolerance};
use crate::manifold::Manifold;

/// Largest problem (in degrees of freedom) decomposed densely.
pub const DENSE_THRESHOLD: usize = 8192;

/// Eigenpairs of L_h, eigenvalues descending (closest to zero first).
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub values: Vec<f64>,
    /// M-orthonormal eigenfields, flat node-major.
    pub vectors: Vec<Vec<f64>>,
    /// ‖L_h v − λ v‖_M per pair.
    pub residuals: Vec<f64>,
    /// True when every eigenpair of the operator is present.
    pub complete: bool,
    pub mass: MassMatrix,
    pub dim: usize,
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }

    /// max |⟨v_a, v_b⟩_M − δ_ab|, via one dense product VᵀMV.
    pub fn orthonormality_defect(&self) -> f64 {
        let k = self.len();
        if k == 0 {
            return 0.0;
        }
        let n = self.vectors[0].len();
        let v = faer::Mat::<f64>::from_fn(n, k, |i, j| self.vectors[j][i]);
        let mut mv = faer::Mat::<f64>::zeros(n, k);
        let mut buf = vec![0.0; n];
        for (j, col) in self.vectors.iter().enumerate() {
            self.mass.apply(col, &mut buf);
            for (i, b) in buf.iter().enumerate() {
                mv[(i, j)] = *b;
            }
        }
        let g = v.transpose() * &mv;
        let mut worst: f64 = 0.0;
        for a in 0..k {
            for b in 0..k {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g[(a, b)] - target).abs());
            }
        }
        worst
    }
}

fn residual(op: &FlowOperator, v: &[f64], lambda: f64) -> f64 {
    let mut lv = vec![0.0; v.len()];
    op.apply(v, &mut lv);
    lv.iter_mut().zip(v).for_each(|(a, b)| *a -= lambda * b);
    op.mass.norm_sq(&lv).sqrt()
}

/// Full dense decomposition up to [`DENSE_THRESHOLD`] dofs, otherwise the
/// `count` eigenpairs closest to zero by Lanczos.
pub fn eigendecompose(op: &FlowOperator, count: Option<usize>) -> Result<SpectralDecomposition> {
    let n = op.dofs();
    let (values, vectors, complete) = if n <= DENSE_THRESHOLD {
        let (vals, vecs) = dense_symmetrized(op)?;
        let take = count.unwrap_or(n).min(n);
        let mut values = Vec::with_capacity(take);
        let mut vectors = Vec::with_capacity(take);
        for k in (n - take..n).rev() {
            let mut u = vecs[k * n..(k + 1) * n].to_vec();
            op.mass.upper_solve(&mut u);
            values.push(vals[k]);
            vectors.push(u);
        }
        (values, vectors, take == n)
    } else {
        let want = count.unwrap_or(16).min(n);
        let pairs = lanczos_largest(
            |u, out| op.symmetric_apply(u, out),
            n,
            want,
            1000,
            Tolerance::Absolute(1e-8),
            0x5eed,
        )?;
        let mut vectors = pairs.vectors;
        for u in vectors.iter_mut() {
            op.mass.upper_solve(u);
        }
        (pairs.values, vectors, false)
    };
    let residuals = values
        .iter()
        .zip(&vectors)
        .map(|(&l, v)| residual(op, v, l))
        .collect();
    Ok(SpectralDecomposition {
        values,
        vectors,
        residuals,
        complete,
        mass: op.mass.clone(),
        dim: op.dim,
    })
}

/// Ascending eigenvalues and column-major eigenvectors of C⁻¹(−2S)C⁻ᵀ.
fn dense_symmetrized(op: &FlowOperator) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = op.dofs();
    let mut a = vec![0.0; n * n];
    for r in 0..n {
        let (idx, val) = op.stiffness.row(r);
        for (&c, &v) in idx.iter().zip(val) {
            a[c * n + r] = -2.0 * v;
        }
    }
    // Columns: C⁻¹ B; then transpose (B symmetric) and apply C⁻¹ again.
    for col in a.chunks_mut(n) {
        op.mass.lower_solve(col);
    }
    for i in 0..n {
        for j in i + 1..n {
            a.swap(i * n + j, j * n + i);
        }
    }
    for col in a.chunks_mut(n) {
        op.mass.lower_solve(col);
    }
    symmetric_eigen(n, a)
}

/// The default kernel tolerance and the spectral gap it was derived from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelTolerance {
    pub tol: f64,
    /// First eigenvalue past the kernel gap.
    pub first_nonzero: f64,
    /// Number of eigenvalues before the gap (0 when no clear gap exists).
    pub gap_index: usize,
}

/// min(10h², ½) · |λ_first_nonzero|. The kernel boundary is the last ratio jump
/// |λ_{k+1}/λ_k| ≥ 10 among the leading eigenvalues; near-null modes of
/// different discretization order may sit below it.
pub fn default_kernel_tol(spec: &SpectralDecomposition, manifold: &Manifold) -> KernelTolerance {
    let lead: Vec<f64> = spec.values.iter().take(24).map(|v| v.abs()).collect();
    let mut best = (0usize, 0.0f64);
    for k in 0..lead.len().saturating_sub(1) {
        let ratio = lead[k + 1] / lead[k].max(1e-300);
        if ratio >= 10.0 {
            best = (k + 1, ratio);
        }
    }
    let gap_index = if best.1 >= 10.0 { best.0 } else { 0 };
    let first_nonzero = spec.values.get(gap_index).copied().unwrap_or(0.0);
    let h = manifold.h_max();
    // on coarse grids 10h² exceeds 1/2 and the formula would swallow the gap
    KernelTolerance {
        tol: (10.0 * h * h).min(0.5) * first_nonzero.abs(),
        first_nonzero,
        gap_index,
    }
}

/// Near-null eigenfields, each confirmed by a small nodal 𝔏.
#[derive(Clone, Debug)]
pub struct KillingBasis {
    pub fields: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    /// Nodal finite-difference 𝔏 of each member.
    pub frak_l: Vec<f64>,
    /// Eigenvalue candidates whose nodal 𝔏 exceeded the tolerance.
    pub rejected: usize,
    pub kernel_tol: f64,
}

impl KillingBasis {
    pub fn dim(&self) -> usize {
        self.fields.len()
    }
}

pub fn killing_kernel(spec: &SpectralDecomposition, kernel_tol: f64, manifold: &Manifold) -> KillingBasis {
    let mut basis = KillingBasis {
        fields: Vec::new(),
        eigenvalues: Vec::new(),
        frak_l: Vec::new(),
        rejected: 0,
        kernel_tol,
    };
    for (v, &l) in spec.vectors.iter().zip(&spec.values) {
        if l.abs() > kernel_tol {
            continue;
        }
        let field = VectorField::from_data(spec.dim, v.clone()).expect("eigenvector shape");
        let fl = energy_report(&field, manifold).frak_l;
        if fl <= kernel_tol {
            basis.fields.push(v.clone());
            basis.eigenvalues.push(l);
            basis.frak_l.push(fl);
        } else {
            basis.rejected += 1;
        }
    }
    basis
}

/// M-orthogonal projection onto the span of an M-orthonormal basis.
pub fn project_killing(x: &VectorField, basis: &KillingBasis, mass: &MassMatrix) -> VectorField {
    let mut out = vec![0.0; x.as_slice().len()];
    for v in &basis.fields {
        let c = mass.inner(x.as_slice(), v);
        crate::linalg::axpy(c, v, &mut out);
    }
    VectorField::from_data(x.dim(), out).expect("shape preserved")
}

/// Exact semidiscrete solution Σ e^{λ_k t} ⟨X0, v_k⟩_M v_k.
pub fn evolve_spectral(x0: &VectorField, t: f64, spec: &SpectralDecomposition) -> Result<VectorField> {
    if !spec.complete {
        return Err(KvError::IncompleteDecomposition {
            available: spec.len(),
            required: x0.as_slice().len(),
        });
    }
    let mut out = vec![0.0; x0.as_slice().len()];
    for (v, &l) in spec.vectors.iter().zip(&spec.values) {
        let c = spec.mass.inner(x0.as_slice(), v) * (l * t).exp();
        crate::linalg::axpy(c, v, &mut out);
    }
    VectorField::from_data(x0.dim(), out)
}

/// Largest eigenvalue of −L_h by Lanczos to 1e−3 relative, returned as the
/// Ritz value plus its residual (an upper estimate).
pub fn lambda_max_estimate(op: &FlowOperator) -> Result<f64> {
    let n = op.dofs();
    if n == 0 {
        return Ok(0.0);
    }
    let pairs = lanczos_largest(
        |u, out| {
            op.symmetric_apply(u, out);
            out.iter_mut().for_each(|v| *v = -*v);
        },
        n,
        1,
        300,
        Tolerance::Relative(1e-3),
        0x1a4d,
    )?;
    Ok((pairs.values[0] + pairs.residuals[0]).max(0.0))
}
