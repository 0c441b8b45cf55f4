//! Variational flow operator L_h = −2 M⁻¹ DᵀWD, its spectrum and the
//! discrete Killing kernel.
//!
//! D evaluates Def(X) on staggered points: a diagonal component Def_ii sits
//! half a cell along i, an off-diagonal Def_ij half a cell along both i and
//! j. Derivatives there are compact differences, so D has no grid-scale null
//! modes; the only near-null fields are the discrete Killing fields.
//! Staggered points that would land on a pole are omitted.

mod scalar;
mod spectral;

pub use scalar::ScalarLaplacian;
pub use spectral::{
    default_kernel_tol, eigendecompose, evolve_spectral, killing_kernel, lambda_max_estimate, project_killing,
    KernelTolerance, KillingBasis, SpectralDecomposition, DENSE_THRESHOLD,
};

use crate::error::{KvError, Result};
use crate::fields::VectorField;
use crate::manifold::{BoundaryRule, Manifold};
use crate::small::{cholesky, is_diagonal, Mat3};
use crate::sparse::Csr;

/// Block-diagonal mass matrix with per-node blocks w·g_ij.
#[derive(Clone, Debug)]
pub struct MassMatrix {
    pub dim: usize,
    pub blocks: Vec<Mat3>,
    /// Lower Cholesky factor of each block.
    chol: Vec<Mat3>,
}

impl MassMatrix {
    pub fn new(manifold: &Manifold) -> Result<Self> {
        let m = manifold.dim();
        let mut blocks = Vec::with_capacity(manifold.node_count());
        let mut chol = Vec::with_capacity(manifold.node_count());
        for node in 0..manifold.node_count() {
            let w = manifold.metric.weight[node];
            let mut b = manifold.metric.g[node];
            for row in b.iter_mut().take(m) {
                for v in row.iter_mut().take(m) {
                    *v *= w;
                }
            }
            chol.push(cholesky(&b, m).ok_or(KvError::NonPositiveDefinite { node })?);
            blocks.push(b);
        }
        Ok(Self { dim: m, blocks, chol })
    }

    pub fn dofs(&self) -> usize {
        self.dim * self.blocks.len()
    }

    /// out = M x
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let m = self.dim;
        for (node, b) in self.blocks.iter().enumerate() {
            let xs = &x[node * m..(node + 1) * m];
            for i in 0..m {
                out[node * m + i] = (0..m).map(|j| b[i][j] * xs[j]).sum();
            }
        }
    }

    /// out = M⁻¹ x
    pub fn solve(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
        self.lower_solve(out);
        self.upper_solve(out);
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let m = self.dim;
        let mut s = 0.0;
        for (node, b) in self.blocks.iter().enumerate() {
            let xs = &x[node * m..(node + 1) * m];
            let ys = &y[node * m..(node + 1) * m];
            for i in 0..m {
                for j in 0..m {
                    s += b[i][j] * xs[i] * ys[j];
                }
            }
        }
        s
    }

    pub fn norm_sq(&self, x: &[f64]) -> f64 {
        self.inner(x, x)
    }

    /// x ← C⁻¹ x, with M = C Cᵀ.
    pub(crate) fn lower_solve(&self, x: &mut [f64]) {
        let m = self.dim;
        for (node, c) in self.chol.iter().enumerate() {
            let xs = &mut x[node * m..(node + 1) * m];
            for i in 0..m {
                let mut v = xs[i];
                for j in 0..i {
                    v -= c[i][j] * xs[j];
                }
                xs[i] = v / c[i][i];
            }
        }
    }

    /// x ← C⁻ᵀ x
    pub(crate) fn upper_solve(&self, x: &mut [f64]) {
        let m = self.dim;
        for (node, c) in self.chol.iter().enumerate() {
            let xs = &mut x[node * m..(node + 1) * m];
            for i in (0..m).rev() {
                let mut v = xs[i];
                for j in i + 1..m {
                    v -= c[j][i] * xs[j];
                }
                xs[i] = v / c[i][i];
            }
        }
    }
}

/// Staggered deformation operator and its tensor-side weights.
#[derive(Clone, Debug)]
pub struct DefOperator {
    pub d: Csr,
    /// w(p)·g^ii g^jj, doubled for off-diagonal components.
    pub weights: Vec<f64>,
    /// (node, i, j) owning each tensor row.
    pub rows: Vec<(usize, u8, u8)>,
}

impl DefOperator {
    pub fn new(manifold: &Manifold) -> Result<Self> {
        let m = manifold.dim();
        let grid = &manifold.grid;
        let geo = &manifold.geometry;
        let cell = grid.cell_volume();
        let mut trips = Vec::new();
        let mut weights = Vec::new();
        let mut rows = Vec::new();
        for node in 0..grid.node_count() {
            let base = grid.multi(node);
            for i in 0..m {
                for j in i..m {
                    let stag: Vec<usize> = if i == j { vec![i] } else { vec![i, j] };
                    if stag
                        .iter()
                        .any(|&d| grid.rules[d] == BoundaryRule::PoleOffset && base[d] + 1 == grid.n[d])
                    {
                        continue;
                    }
                    let mut pos = [base[0] as f64, base[1] as f64, base[2] as f64];
                    for &d in &stag {
                        pos[d] += 0.5;
                    }
                    let p = grid.coord_at(pos);
                    let gp = geo.metric(&p);
                    if !is_diagonal(&gp, m) {
                        return Err(KvError::Precondition(
                            "staggered deformation operator requires a diagonal metric".into(),
                        ));
                    }
                    let gam = geo.christoffel(&p);
                    let ncorner = 1usize << stag.len();
                    let avg = 1.0 / ncorner as f64;
                    let row = rows.len();
                    for corner in 0..ncorner {
                        let mut target = base;
                        let mut off = [0u8; 3];
                        for (bit, &d) in stag.iter().enumerate() {
                            if corner & (1 << bit) != 0 {
                                off[d] = 1;
                                target[d] = (target[d] + 1) % grid.n[d];
                            }
                        }
                        let c = grid.index(target);
                        let gc = &manifold.metric.g[c];
                        let dcoef = |d: usize| -> f64 {
                            let s = if off[d] == 1 { 1.0 } else { -1.0 };
                            s * 2.0 * avg / grid.h[d]
                        };
                        // Def_ij = ½(∂_i X_j + ∂_j X_i) − Γ^k_ij(p) avg(X_k), X_k = g_kl X^l at corners
                        for l in 0..m {
                            let mut v = 0.0;
                            v += 0.5 * dcoef(i) * gc[j][l];
                            v += 0.5 * dcoef(j) * gc[i][l];
                            for k in 0..m {
                                v -= gam[k][i][j] * gc[k][l] * avg;
                            }
                            if v != 0.0 {
                                trips.push((row, c * m + l, v));
                            }
                        }
                    }
                    let gi = [1.0 / gp[0][0], 1.0 / gp[1][1], if m > 2 { 1.0 / gp[2][2] } else { 0.0 }];
                    let w = geo.sqrt_det(&p) * cell;
                    let mult = if i == j { 1.0 } else { 2.0 };
                    weights.push(w * gi[i] * gi[j] * mult);
                    rows.push((node, i as u8, j as u8));
                }
            }
        }
        if weights.iter().any(|&w| w <= 0.0) {
            return Err(KvError::Precondition("non-positive tensor weight".into()));
        }
        let d = Csr::from_triplets(rows.len(), m * grid.node_count(), trips);
        Ok(Self { d, weights, rows })
    }

    /// Σ_p W_p (D x)_p²
    pub fn frak_l(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.d.nrows];
        self.d.matvec(x, &mut y);
        y.iter().zip(&self.weights).map(|(a, w)| w * a * a).sum()
    }

    /// Dᵀ W D as an assembled symmetric matrix.
    pub fn gram(&self) -> Csr {
        let mut trips = Vec::new();
        for r in 0..self.d.nrows {
            let (idx, val) = self.d.row(r);
            let w = self.weights[r];
            for (&a, &va) in idx.iter().zip(val) {
                for (&b, &vb) in idx.iter().zip(val) {
                    trips.push((a, b, w * va * vb));
                }
            }
        }
        Csr::from_triplets(self.d.ncols, self.d.ncols, trips)
    }
}

/// L_h = −2 M⁻¹ S with S = DᵀWD.
#[derive(Clone, Debug)]
pub struct FlowOperator {
    pub mass: MassMatrix,
    pub def: DefOperator,
    /// DᵀWD
    pub stiffness: Csr,
    pub dim: usize,
    pub nodes: usize,
}

pub fn assemble(manifold: &Manifold) -> Result<FlowOperator> {
    let mass = MassMatrix::new(manifold)?;
    let def = DefOperator::new(manifold)?;
    let stiffness = def.gram();
    Ok(FlowOperator {
        mass,
        def,
        stiffness,
        dim: manifold.dim(),
        nodes: manifold.node_count(),
    })
}

impl FlowOperator {
    pub fn dofs(&self) -> usize {
        self.dim * self.nodes
    }

    /// out = L_h x
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let mut s = vec![0.0; x.len()];
        self.stiffness.matvec(x, &mut s);
        s.iter_mut().for_each(|v| *v *= -2.0);
        self.mass.solve(&s, out);
    }

    pub fn apply_field(&self, x: &VectorField) -> VectorField {
        let mut out = vec![0.0; x.as_slice().len()];
        self.apply(x.as_slice(), &mut out);
        VectorField::from_data(self.dim, out).expect("dimension preserved")
    }

    /// Discrete 𝔏_h(x) = Σ W (Dx)².
    pub fn frak_l(&self, x: &[f64]) -> f64 {
        let mut s = vec![0.0; x.len()];
        self.stiffness.matvec(x, &mut s);
        crate::linalg::dot(x, &s)
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.mass.inner(x, y)
    }

    pub fn norm_sq(&self, x: &[f64]) -> f64 {
        self.mass.norm_sq(x)
    }

    /// out = C⁻¹ (−2S) C⁻ᵀ u, the symmetrized operator.
    pub(crate) fn symmetric_apply(&self, u: &[f64], out: &mut [f64]) {
        let mut t = u.to_vec();
        self.mass.upper_solve(&mut t);
        self.stiffness.matvec(&t, out);
        out.iter_mut().for_each(|v| *v *= -2.0);
        self.mass.lower_solve(out);
    }

    /// max |S_ij − S_ji| / max |S_ij| for the assembled M·L_h.
    pub fn asymmetry(&self) -> f64 {
        let s = &self.stiffness;
        let t = s.transpose();
        let mut scale: f64 = 0.0;
        let mut diff: f64 = 0.0;
        for r in 0..s.nrows {
            let (ia, va) = s.row(r);
            let (ib, vb) = t.row(r);
            let mut bmap = std::collections::HashMap::with_capacity(ib.len());
            for (&c, &v) in ib.iter().zip(vb) {
                bmap.insert(c, v);
            }
            for (&c, &v) in ia.iter().zip(va) {
                scale = scale.max(v.abs());
                diff = diff.max((v - bmap.get(&c).copied().unwrap_or(0.0)).abs());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            diff / scale
        }
    }
}

#[cfg(test)]
mod tests;
