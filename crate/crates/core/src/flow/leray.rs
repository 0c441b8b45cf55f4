use crate::error::Result;
use crate::linalg::{dot, norm, pcg};
use crate::manifold::Manifold;
use crate::operator::MassMatrix;
use crate::sparse::Csr;

/// Relative residual of the pressure solve.
pub const POISSON_TOL: f64 = 1e-10;

/// Discrete Leray projection X ↦ X − G p with GᵀMG p = GᵀM X, G the nodal
/// central gradient. It is M-orthogonal and idempotent; afterwards the
/// discrete divergence −M_s⁻¹GᵀM X vanishes to the solver tolerance.
#[derive(Clone, Debug)]
pub struct LerayProjector {
    grad: Csr,
    grad_t: Csr,
    abs_grad_t: Csr,
    poisson: Csr,
    diag: Vec<f64>,
    mass: MassMatrix,
    node_weight: Vec<f64>,
}

impl LerayProjector {
    pub fn new(manifold: &Manifold, mass: &MassMatrix) -> Self {
        let m = manifold.dim();
        let grid = &manifold.grid;
        let n = grid.node_count();
        let mut trips = Vec::new();
        for node in 0..n {
            let gi = &manifold.metric.g_inv[node];
            for j in 0..m {
                let p = grid.neighbor(node, j, 1);
                let q = grid.neighbor(node, j, -1);
                let c = 1.0 / (2.0 * grid.h[j]);
                for i in 0..m {
                    if gi[i][j] != 0.0 {
                        trips.push((node * m + i, p.node, gi[i][j] * c));
                        trips.push((node * m + i, q.node, -gi[i][j] * c));
                    }
                }
            }
        }
        let grad = Csr::from_triplets(n * m, n, trips);
        let mut pt = Vec::new();
        for node in 0..n {
            let b = &mass.blocks[node];
            for i in 0..m {
                let (ia, va) = grad.row(node * m + i);
                for j in 0..m {
                    if b[i][j] == 0.0 {
                        continue;
                    }
                    let (ib, vb) = grad.row(node * m + j);
                    for (&a, &x) in ia.iter().zip(va) {
                        for (&c, &y) in ib.iter().zip(vb) {
                            pt.push((a, c, x * b[i][j] * y));
                        }
                    }
                }
            }
        }
        let poisson = Csr::from_triplets(n, n, pt);
        let diag = (0..n)
            .map(|r| {
                let (idx, val) = poisson.row(r);
                idx.iter().zip(val).find(|(&c, _)| c == r).map(|(_, &v)| v).unwrap_or(0.0)
            })
            .collect();
        let grad_t = grad.transpose();
        let abs_grad_t = Csr {
            values: grad_t.values.iter().map(|v| v.abs()).collect(),
            ..grad_t.clone()
        };
        Self {
            grad_t,
            abs_grad_t,
            grad,
            poisson,
            diag,
            mass: mass.clone(),
            node_weight: manifold.metric.weight.clone(),
        }
    }

    /// Discrete divergence −M_s⁻¹ GᵀM X per node.
    pub fn divergence(&self, x: &[f64]) -> Vec<f64> {
        let mut mx = vec![0.0; x.len()];
        self.mass.apply(x, &mut mx);
        let mut d = vec![0.0; self.node_weight.len()];
        self.grad_t.matvec(&mx, &mut d);
        d.iter_mut().zip(&self.node_weight).for_each(|(v, w)| *v = -*v / w);
        d
    }

    /// (Σ w div²)^{1/2}
    pub fn divergence_norm(&self, x: &[f64]) -> f64 {
        self.divergence(x)
            .iter()
            .zip(&self.node_weight)
            .map(|(d, w)| d * d * w)
            .sum::<f64>()
            .sqrt()
    }

    /// Project in place; returns the pressure-solve iteration count.
    pub fn project(&self, x: &mut [f64]) -> Result<usize> {
        let mut mx = vec![0.0; x.len()];
        self.mass.apply(x, &mut mx);
        let mut rhs = vec![0.0; self.node_weight.len()];
        self.grad_t.matvec(&mx, &mut rhs);
        // Roundoff scale of the right-hand side itself.
        let amx: Vec<f64> = mx.iter().map(|v| v.abs()).collect();
        let mut scale_v = vec![0.0; rhs.len()];
        self.abs_grad_t.matvec(&amx, &mut scale_v);
        let atol = 1e-13 * norm(&scale_v);
        let sol = pcg(
            |u, out| self.poisson.matvec(u, out),
            &rhs,
            Some(&self.diag),
            POISSON_TOL,
            atol,
            20 * rhs.len() + 100,
        )?;
        let mut p = sol.x;
        let mean = dot(&p, &self.node_weight) / self.node_weight.iter().sum::<f64>();
        p.iter_mut().for_each(|v| *v -= mean);
        let mut gp = vec![0.0; x.len()];
        self.grad.matvec(&p, &mut gp);
        x.iter_mut().zip(&gp).for_each(|(a, b)| *a -= b);
        Ok(sol.iterations)
    }
}
