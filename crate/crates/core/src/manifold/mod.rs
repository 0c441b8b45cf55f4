//! Discrete closed Riemannian manifolds on chart grids.
//!
//! Every built-in geometry is a single coordinate chart with analytic metric
//! coefficients. Periodic directions tile exactly; pole directions place
//! nodes at half-spacing offsets and reach across the pole through ghost
//! nodes (see [`GhostRule`]).

mod geometry;
mod grid;


pub use geometry::{christoffel_from_derivatives, ricci_from_connection, Geometry, ManifoldKind};
pub use grid::{parity, BoundaryRule, ChartGrid, GhostRule, Neighbor};

use crate::error::{KvError, Result};
use crate::fields::VectorField;
use crate::small::{cholesky, invert, Chr, Mat3, ZERO3, ZERO_CHR};

pub const MIN_RESOLUTION: usize = 8;
pub const MAX_PERTURBATION: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldSpec {
    pub kind: ManifoldKind,
    pub resolution: Vec<usize>,
    /// Only meaningful for [`ManifoldKind::PerturbedTorus`].
    pub perturbation_amplitude: f64,
}

impl ManifoldSpec {
    pub fn new(kind: ManifoldKind, resolution: &[usize]) -> Self {
        Self {
            kind,
            resolution: resolution.to_vec(),
            perturbation_amplitude: 0.0,
        }
    }

    pub fn perturbed_torus(n: usize, amplitude: f64) -> Self {
        Self {
            kind: ManifoldKind::PerturbedTorus,
            resolution: vec![n, n],
            perturbation_amplitude: amplitude,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.kind.dim();
        if self.resolution.len() != m || self.resolution.iter().any(|&n| n < MIN_RESOLUTION) {
            return Err(KvError::InvalidResolution {
                kind: self.kind.name(),
                got: self.resolution.clone(),
                expected: m,
                min: MIN_RESOLUTION,
            });
        }
        if self.kind.is_sphere() {
            let last = m - 1;
            if !self.resolution[last].is_multiple_of(2) {
                return Err(KvError::OddPeriodicResolution {
                    kind: self.kind.name(),
                    dir: last,
                    n: self.resolution[last],
                });
            }
        }
        let a = self.perturbation_amplitude;
        if self.kind == ManifoldKind::PerturbedTorus && !(0.0..=MAX_PERTURBATION).contains(&a) {
            return Err(KvError::PerturbationOutOfRange(a));
        }
        Ok(())
    }

    /// The same geometry with every resolution multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        let mut out = self.clone();
        for n in out.resolution.iter_mut() {
            *n *= factor;
        }
        out
    }
}

/// Per-node metric, inverse metric, density and quadrature weight.
#[derive(Clone, Debug)]
pub struct MetricData {
    pub g: Vec<Mat3>,
    pub g_inv: Vec<Mat3>,
    pub sqrt_det: Vec<f64>,
    /// `sqrt_det · ∏ h_i`
    pub weight: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ConnectionData {
    /// Γ^k_ij per node, `[k][i][j]`.
    pub gamma: Vec<Chr>,
}

#[derive(Clone, Debug)]
pub struct CurvatureData {
    pub ricci: Vec<Mat3>,
    /// R^i_j = g^ik Ric_kj
    pub ricci_mixed: Vec<Mat3>,
    pub scalar: Vec<f64>,
}

/// One discretized chart manifold. Immutable after construction.
#[derive(Clone, Debug)]
pub struct Manifold {
    pub spec: ManifoldSpec,
    pub geometry: Geometry,
    pub grid: ChartGrid,
    pub metric: MetricData,
    pub connection: ConnectionData,
    pub curvature: CurvatureData,
}

impl Manifold {
    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn node_count(&self) -> usize {
        self.grid.node_count()
    }

    pub fn kind(&self) -> ManifoldKind {
        self.spec.kind
    }

    pub fn coord(&self, node: usize) -> [f64; 3] {
        self.grid.coord(node)
    }

    pub fn volume(&self) -> f64 {
        self.metric.weight.iter().sum()
    }

    pub fn h_max(&self) -> f64 {
        self.grid.h_max()
    }

    /// Smallest and largest sectional curvature (2D only, K = R/2).
    pub fn sectional_curvature_range(&self) -> Option<(f64, f64)> {
        if self.dim() != 2 {
            return None;
        }
        let lo = self.curvature.scalar.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.curvature.scalar.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Some((lo / 2.0, hi / 2.0))
    }
}

pub fn chart_grid(spec: &ManifoldSpec) -> ChartGrid {
    let m = spec.kind.dim();
    let extents = Geometry {
        kind: spec.kind,
        amplitude: spec.perturbation_amplitude,
        fd_step: [0.0; 3],
    }
    .extents();
    let mut n = [1usize; 3];
    let mut h = [1.0; 3];
    let mut origin = [0.0; 3];
    let mut rules = [BoundaryRule::Periodic; 3];
    let mut ghosts = [None; 3];
    for d in 0..m {
        n[d] = spec.resolution[d];
        origin[d] = extents[d].0;
        h[d] = extents[d].1 / n[d] as f64;
    }
    match spec.kind {
        ManifoldKind::UnitSphereS2 => {
            rules[0] = BoundaryRule::PoleOffset;
            ghosts[0] = Some(GhostRule {
                reflect_mask: 0b001,
                shift_dir: 1,
            });
        }
        ManifoldKind::UnitSphereS3 => {
            rules[0] = BoundaryRule::PoleOffset;
            rules[1] = BoundaryRule::PoleOffset;
            // (−χ, θ, φ) ≡ (χ, π−θ, φ+π) and (χ, −θ, φ) ≡ (χ, θ, φ+π)
            ghosts[0] = Some(GhostRule {
                reflect_mask: 0b011,
                shift_dir: 2,
            });
            ghosts[1] = Some(GhostRule {
                reflect_mask: 0b010,
                shift_dir: 2,
            });
        }
        _ => {}
    }
    ChartGrid {
        dim: m,
        n,
        h,
        origin,
        rules,
        ghosts,
    }
}

/// Build grid, metric, connection and curvature for a model geometry.
pub fn build_manifold(spec: &ManifoldSpec) -> Result<Manifold> {
    spec.validate()?;
    let grid = chart_grid(spec);
    let geometry = Geometry {
        kind: spec.kind,
        amplitude: spec.perturbation_amplitude,
        fd_step: grid.h,
    };
    let metric = metric_data(&geometry, &grid)?;
    let connection = christoffel(&metric, &grid, &geometry);
    let curvature = curvature(&metric, &connection, &grid, &geometry);
    Ok(Manifold {
        spec: spec.clone(),
        geometry,
        grid,
        metric,
        connection,
        curvature,
    })
}

fn metric_data(geometry: &Geometry, grid: &ChartGrid) -> Result<MetricData> {
    let m = grid.dim;
    let n = grid.node_count();
    let cell = grid.cell_volume();
    let mut out = MetricData {
        g: Vec::with_capacity(n),
        g_inv: Vec::with_capacity(n),
        sqrt_det: Vec::with_capacity(n),
        weight: Vec::with_capacity(n),
    };
    for node in 0..n {
        let x = grid.coord(node);
        let g = geometry.metric(&x);
        if cholesky(&g, m).is_none() {
            return Err(KvError::NonPositiveDefinite { node });
        }
        let g_inv = invert(&g, m).ok_or(KvError::NonPositiveDefinite { node })?;
        let s = geometry.sqrt_det(&x);
        if s <= 0.0 {
            return Err(KvError::NonPositiveDefinite { node });
        }
        out.g.push(g);
        out.g_inv.push(g_inv);
        out.sqrt_det.push(s);
        out.weight.push(s * cell);
    }
    Ok(out)
}

/// Levi-Civita connection at the nodes: closed form where available,
/// otherwise second-order central differences of the nodal metric.
pub fn christoffel(metric: &MetricData, grid: &ChartGrid, geometry: &Geometry) -> ConnectionData {
    if geometry.has_closed_form() {
        let gamma = (0..grid.node_count())
            .map(|node| geometry.christoffel(&grid.coord(node)))
            .collect();
        ConnectionData { gamma }
    } else {
        christoffel_fd(metric, grid)
    }
}

pub fn christoffel_fd(metric: &MetricData, grid: &ChartGrid) -> ConnectionData {
    let m = grid.dim;
    let gamma = (0..grid.node_count())
        .map(|node| {
            let mut dg = [ZERO3; 3];
            for (l, dgl) in dg.iter_mut().enumerate().take(m) {
                let p = grid.neighbor(node, l, 1);
                let q = grid.neighbor(node, l, -1);
                for i in 0..m {
                    for j in 0..m {
                        let gp = parity(&[i, j], p.flip) * metric.g[p.node][i][j];
                        let gq = parity(&[i, j], q.flip) * metric.g[q.node][i][j];
                        dgl[i][j] = (gp - gq) / (2.0 * grid.h[l]);
                    }
                }
            }
            christoffel_from_derivatives(&metric.g_inv[node], &dg, m)
        })
        .collect();
    ConnectionData { gamma }
}

/// Ricci tensor, mixed Ricci and scalar curvature at the nodes.
pub fn curvature(
    metric: &MetricData,
    connection: &ConnectionData,
    grid: &ChartGrid,
    geometry: &Geometry,
) -> CurvatureData {
    let ricci: Vec<Mat3> = if geometry.has_closed_form() {
        (0..grid.node_count())
            .map(|node| geometry.ricci(&grid.coord(node)))
            .collect()
    } else {
        ricci_fd(connection, grid)
    };
    finish_curvature(metric, ricci, grid.dim)
}

pub fn ricci_fd(connection: &ConnectionData, grid: &ChartGrid) -> Vec<Mat3> {
    let m = grid.dim;
    (0..grid.node_count())
        .map(|node| {
            let mut dgam = [ZERO_CHR; 3];
            for (l, d) in dgam.iter_mut().enumerate().take(m) {
                let p = grid.neighbor(node, l, 1);
                let q = grid.neighbor(node, l, -1);
                for k in 0..m {
                    for i in 0..m {
                        for j in 0..m {
                            let a = parity(&[k, i, j], p.flip) * connection.gamma[p.node][k][i][j];
                            let b = parity(&[k, i, j], q.flip) * connection.gamma[q.node][k][i][j];
                            d[k][i][j] = (a - b) / (2.0 * grid.h[l]);
                        }
                    }
                }
            }
            ricci_from_connection(&connection.gamma[node], &dgam, m)
        })
        .collect()
}

pub(crate) fn finish_curvature(metric: &MetricData, ricci: Vec<Mat3>, m: usize) -> CurvatureData {
    let mut mixed = Vec::with_capacity(ricci.len());
    let mut scalar = Vec::with_capacity(ricci.len());
    for (node, ric) in ricci.iter().enumerate() {
        let gi = &metric.g_inv[node];
        let mut r = ZERO3;
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                r[i][j] = (0..m).map(|k| gi[i][k] * ric[k][j]).sum();
                s += gi[i][j] * ric[i][j];
            }
        }
        mixed.push(r);
        scalar.push(s);
    }
    CurvatureData {
        ricci,
        ricci_mixed: mixed,
        scalar,
    }
}

/// ∫_M f dV by the node-weight rule.
pub fn integrate_scalar(f: &[f64], manifold: &Manifold) -> f64 {
    f.iter()
        .zip(&manifold.metric.weight)
        .map(|(a, w)| a * w)
        .sum()
}

/// L² inner product Σ g_ij X^i Y^j w over the nodes.
pub fn l2_inner(x: &VectorField, y: &VectorField, manifold: &Manifold) -> Result<f64> {
    let m = manifold.dim();
    for v in [x, y] {
        if v.dim() != m || v.node_count() != manifold.node_count() {
            return Err(KvError::DimensionMismatch {
                expected: m * manifold.node_count(),
                got: v.dim() * v.node_count(),
            });
        }
    }
    let mut s = 0.0;
    for node in 0..manifold.node_count() {
        let g = &manifold.metric.g[node];
        let a = x.at(node);
        let b = y.at(node);
        let mut q = 0.0;
        for i in 0..m {
            for j in 0..m {
                q += g[i][j] * a[i] * b[j];
            }
        }
        s += q * manifold.metric.weight[node];
    }
    Ok(s)
}

#[cfg(test)]
mod tests;
