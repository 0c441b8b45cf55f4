//! Discrete tensor calculus on a chart manifold.
//!
//! Derivatives are second-order central differences on the nodes, reaching
//! across poles through the grid's ghost rule. This is the "direct" form of
//! the flow; the variational form lives in [`crate::operator`].

pub mod analytic;
mod calculus;
mod energy;

pub use calculus::{
    advection_skew, covariant_derivative, deformation, divergence, divergence_density, flow_rhs,
    gradient, laplace_beltrami, lower, nabla, partial, raise, ricci_apply, rough_laplacian,
    tensor_norm_sq,
};
pub use energy::{dagger_source, energy_report, DaggerSource, EnergyReport};

use crate::error::{KvError, Result};
use crate::manifold::Manifold;

/// Contravariant components X^i at every node, node-major.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    dim: usize,
    data: Vec<f64>,
}

impl VectorField {
    pub fn zeros(manifold: &Manifold) -> Self {
        Self::zeros_with(manifold.dim(), manifold.node_count())
    }

    pub fn zeros_with(dim: usize, nodes: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * nodes],
        }
    }

    pub fn from_data(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(KvError::DimensionMismatch {
                expected: dim,
                got: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    /// Sample `f(coords)` at every node; only the first `dim` outputs are used.
    pub fn from_fn(manifold: &Manifold, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let m = manifold.dim();
        let mut out = Self::zeros(manifold);
        for node in 0..manifold.node_count() {
            let v = f(manifold.coord(node));
            out.at_mut(node).copy_from_slice(&v[..m]);
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn at(&self, node: usize) -> &[f64] {
        &self.data[node * self.dim..(node + 1) * self.dim]
    }

    pub fn at_mut(&mut self, node: usize) -> &mut [f64] {
        &mut self.data[node * self.dim..(node + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn check_compatible(&self, manifold: &Manifold) -> Result<()> {
        if self.dim != manifold.dim() || self.node_count() != manifold.node_count() {
            return Err(KvError::DimensionMismatch {
                expected: manifold.dim() * manifold.node_count(),
                got: self.data.len(),
            });
        }
        Ok(())
    }

    /// self += a · other
    pub fn axpy(&mut self, a: f64, other: &VectorField) {
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for x in self.data.iter_mut() {
            *x *= a;
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    pub fn sum(&self, other: &VectorField) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn diff(&self, other: &VectorField) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Covariant tensor field of rank `rank`; per node `dim^rank` components in
/// row-major index order (first index slowest).
#[derive(Clone, Debug, PartialEq)]
pub struct CovTensor {
    pub rank: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl CovTensor {
    pub fn zeros(rank: usize, dim: usize, nodes: usize) -> Self {
        Self {
            rank,
            dim,
            data: vec![0.0; dim.pow(rank as u32) * nodes],
        }
    }

    pub fn comps(&self) -> usize {
        self.dim.pow(self.rank as u32)
    }

    pub fn at(&self, node: usize) -> &[f64] {
        let c = self.comps();
        &self.data[node * c..(node + 1) * c]
    }

    pub fn at_mut(&mut self, node: usize) -> &mut [f64] {
        let c = self.comps();
        &mut self.data[node * c..(node + 1) * c]
    }

    /// Component (i, j) of a rank-2 tensor at `node`.
    pub fn get2(&self, node: usize, i: usize, j: usize) -> f64 {
        self.at(node)[i * self.dim + j]
    }
}

/// Symmetric (0,2) tensor fields (deformation, stress) share the rank-2
/// layout with both off-diagonal entries stored.
pub type SymTensorField = CovTensor;

#[cfg(test)]
mod tests;
