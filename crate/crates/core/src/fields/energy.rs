use super::calculus::{covariant_derivative, divergence, flow_rhs, gradient, laplace_beltrami, symmetrize, tensor_norm_sq};
use super::VectorField;
use crate::einstein::verify_einstein;
use crate::error::{KvError, Result};
use crate::manifold::{integrate_scalar, l2_inner, Manifold};

/// Integral energies of one vector field (direct finite-difference form).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyReport {
    /// ∫ |Def X|²
    pub frak_l: f64,
    /// ∫ |∇X|² + |div X|² − Ric(X, X)
    pub e_bochner: f64,
    /// 2 · frak_l
    pub e_def: f64,
    /// e_bochner − e_def, zero in the continuum for every field
    pub yano_residual: f64,
    pub div_l2: f64,
    pub grad_l2: f64,
    pub ric_quad: f64,
}

impl EnergyReport {
    /// |yano_residual| / max(|E_bochner|, E_def, ‖X‖²)
    pub fn relative_yano_residual(&self, norm_x2: f64) -> f64 {
        let scale = self.e_bochner.abs().max(self.e_def).max(norm_x2);
        if scale == 0.0 {
            0.0
        } else {
            self.yano_residual.abs() / scale
        }
    }
}

pub fn energy_report(x: &VectorField, manifold: &Manifold) -> EnergyReport {
    let m = manifold.dim();
    let nabla_x = covariant_derivative(x, manifold);
    let def = symmetrize(&nabla_x);
    let frak_l = integrate_scalar(&tensor_norm_sq(&def, manifold), manifold);
    let grad_l2 = integrate_scalar(&tensor_norm_sq(&nabla_x, manifold), manifold);
    let div = divergence(x, manifold);
    let div_l2 = integrate_scalar(&div.iter().map(|d| d * d).collect::<Vec<_>>(), manifold);
    let ric: Vec<f64> = (0..manifold.node_count())
        .map(|node| {
            let r = &manifold.curvature.ricci[node];
            let v = x.at(node);
            let mut s = 0.0;
            for i in 0..m {
                for j in 0..m {
                    s += r[i][j] * v[i] * v[j];
                }
            }
            s
        })
        .collect();
    let ric_quad = integrate_scalar(&ric, manifold);
    let e_bochner = grad_l2 + div_l2 - ric_quad;
    let e_def = 2.0 * frak_l;
    EnergyReport {
        frak_l,
        e_bochner,
        e_def,
        yano_residual: e_bochner - e_def,
        div_l2,
        grad_l2,
        ric_quad,
    }
}

/// A field X = K + ∇h whose flow right-hand side is the gradient ∇φ_X.
#[derive(Clone, Debug)]
pub struct DaggerSource {
    pub field: VectorField,
    /// φ_X = 2 Δh + (2R/m) h
    pub potential: Vec<f64>,
    /// ‖flow_rhs(X) − ∇φ_X‖_M / max(‖X‖_M, ‖∇φ_X‖_M)
    pub residual: f64,
}

/// On an Einstein manifold, X = K + ∇h with K Killing has
/// X† = ∇(2Δh + (2R/m)h), using Δ∇h = ∇Δh + Ric♯∇h.
pub fn dagger_source(h: &[f64], killing: &VectorField, manifold: &Manifold) -> Result<DaggerSource> {
    killing.check_compatible(manifold)?;
    if h.len() != manifold.node_count() {
        return Err(KvError::DimensionMismatch {
            expected: manifold.node_count(),
            got: h.len(),
        });
    }
    let report = verify_einstein(manifold);
    if !report.is_einstein {
        return Err(KvError::NotEinstein {
            deviation: report.deviation,
            tolerance: report.tolerance,
        });
    }
    let m = manifold.dim() as f64;
    let lap = laplace_beltrami(h, manifold);
    let potential: Vec<f64> = lap
        .iter()
        .zip(h)
        .map(|(l, v)| 2.0 * l + 2.0 * report.r_const / m * v)
        .collect();
    let field = killing.sum(&gradient(h, manifold));
    let rhs = flow_rhs(&field, manifold);
    let grad_phi = gradient(&potential, manifold);
    let diff = rhs.diff(&grad_phi);
    let scale = l2_inner(&field, &field, manifold)?
        .max(l2_inner(&grad_phi, &grad_phi, manifold)?)
        .sqrt();
    let residual = if scale == 0.0 {
        0.0
    } else {
        l2_inner(&diff, &diff, manifold)?.sqrt() / scale
    };
    Ok(DaggerSource {
        field,
        potential,
        residual,
    })
}
