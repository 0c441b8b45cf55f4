use crate::error::Result;
use crate::linalg::{lanczos_largest, Tolerance};
use crate::manifold::{BoundaryRule, Manifold};
use crate::sparse::Csr;

/// Variational scalar Laplacian Δ_s = −M_s⁻¹ GᵀW_sG with G the compact
/// staggered gradient. Σ M_s Δ_s f = 0 exactly, so the mean is conserved.
#[derive(Clone, Debug)]
pub struct ScalarLaplacian {
    pub grad: Csr,
    /// w(p)·g^dd(p) per staggered edge.
    pub weights: Vec<f64>,
    /// Node quadrature weights.
    pub mass: Vec<f64>,
    /// GᵀW_sG
    pub stiffness: Csr,
}

impl ScalarLaplacian {
    pub fn new(manifold: &Manifold) -> Self {
        let grid = &manifold.grid;
        let geo = &manifold.geometry;
        let m = grid.dim;
        let cell = grid.cell_volume();
        let mut trips = Vec::new();
        let mut weights = Vec::new();
        for node in 0..grid.node_count() {
            let base = grid.multi(node);
            for d in 0..m {
                if grid.rules[d] == BoundaryRule::PoleOffset && base[d] + 1 == grid.n[d] {
                    continue;
                }
                let mut pos = [base[0] as f64, base[1] as f64, base[2] as f64];
                pos[d] += 0.5;
                let p = grid.coord_at(pos);
                let mut next = base;
                next[d] = (next[d] + 1) % grid.n[d];
                let row = weights.len();
                trips.push((row, grid.index(next), 1.0 / grid.h[d]));
                trips.push((row, node, -1.0 / grid.h[d]));
                let g = geo.metric(&p);
                weights.push(geo.sqrt_det(&p) * cell / g[d][d]);
            }
        }
        let grad = Csr::from_triplets(weights.len(), grid.node_count(), trips);
        let mut st = Vec::new();
        for r in 0..grad.nrows {
            let (idx, val) = grad.row(r);
            for (&a, &va) in idx.iter().zip(val) {
                for (&b, &vb) in idx.iter().zip(val) {
                    st.push((a, b, weights[r] * va * vb));
                }
            }
        }
        let stiffness = Csr::from_triplets(grid.node_count(), grid.node_count(), st);
        Self {
            grad,
            weights,
            mass: manifold.metric.weight.clone(),
            stiffness,
        }
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// out = Δ_s f
    pub fn apply(&self, f: &[f64], out: &mut [f64]) {
        self.stiffness.matvec(f, out);
        for (o, w) in out.iter_mut().zip(&self.mass) {
            *o = -*o / w;
        }
    }

    /// fᵀ S f = ∫|∇f|² (discrete)
    pub fn dirichlet(&self, f: &[f64]) -> f64 {
        let mut s = vec![0.0; f.len()];
        self.stiffness.matvec(f, &mut s);
        crate::linalg::dot(f, &s)
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.mass).map(|(a, w)| a * w).sum()
    }

    pub fn l2_sq(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.mass).map(|(a, w)| a * a * w).sum()
    }

    /// Largest eigenvalue of −Δ_s (Ritz value plus residual).
    pub fn lambda_max_estimate(&self) -> Result<f64> {
        let n = self.len();
        let isq: Vec<f64> = self.mass.iter().map(|w| 1.0 / w.sqrt()).collect();
        let pairs = lanczos_largest(
            |u, out| {
                let t: Vec<f64> = u.iter().zip(&isq).map(|(a, b)| a * b).collect();
                self.stiffness.matvec(&t, out);
                out.iter_mut().zip(&isq).for_each(|(o, b)| *o *= b);
            },
            n,
            1,
            300,
            Tolerance::Relative(1e-3),
            0x5ca1,
        )?;
        Ok(pairs.values[0] + pairs.residuals[0])
    }
}
