//! Closed-form chart formulas for the built-in model geometries.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::KvError;
use crate::small::{invert, Chr, Mat3, ZERO3, ZERO_CHR};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ManifoldKind {
    /// Round unit sphere in (θ, φ).
    UnitSphereS2,
    /// [0, 2π)² with the identity metric.
    FlatTorusT2,
    /// [0, 2π)² with g = (1 + a sin x sin y) δ.
    PerturbedTorus,
    /// Round unit 3-sphere in hyperspherical angles (χ, θ, φ).
    UnitSphereS3,
}

impl ManifoldKind {
    pub fn name(self) -> &'static str {
        match self {
            ManifoldKind::UnitSphereS2 => "unit_sphere_s2",
            ManifoldKind::FlatTorusT2 => "flat_torus_t2",
            ManifoldKind::PerturbedTorus => "perturbed_torus",
            ManifoldKind::UnitSphereS3 => "unit_sphere_s3",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            ManifoldKind::UnitSphereS3 => 3,
            _ => 2,
        }
    }

    pub fn is_sphere(self) -> bool {
        matches!(self, ManifoldKind::UnitSphereS2 | ManifoldKind::UnitSphereS3)
    }

    pub fn is_torus(self) -> bool {
        !self.is_sphere()
    }
}

impl fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ManifoldKind {
    type Err = KvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unit_sphere_s2" => Ok(ManifoldKind::UnitSphereS2),
            "flat_torus_t2" => Ok(ManifoldKind::FlatTorusT2),
            "perturbed_torus" => Ok(ManifoldKind::PerturbedTorus),
            "unit_sphere_s3" => Ok(ManifoldKind::UnitSphereS3),
            other => Err(KvError::UnknownManifoldKind(other.to_string())),
        }
    }
}

/// Analytic metric data of one model geometry, evaluable at any chart point.
///
/// `fd_step` is the spacing used wherever derivatives are taken by central
/// differences (the perturbed torus has no closed-form connection here).
#[derive(Clone, Copy, Debug)]
pub struct Geometry {
    pub kind: ManifoldKind,
    pub amplitude: f64,
    pub fd_step: [f64; 3],
}

impl Geometry {
    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn has_closed_form(&self) -> bool {
        self.kind != ManifoldKind::PerturbedTorus
    }

    pub fn metric(&self, x: &[f64; 3]) -> Mat3 {
        let mut g = ZERO3;
        match self.kind {
            ManifoldKind::UnitSphereS2 => {
                let s = x[0].sin();
                g[0][0] = 1.0;
                g[1][1] = s * s;
            }
            ManifoldKind::FlatTorusT2 => {
                g[0][0] = 1.0;
                g[1][1] = 1.0;
            }
            ManifoldKind::PerturbedTorus => {
                let c = self.conformal(x);
                g[0][0] = c;
                g[1][1] = c;
            }
            ManifoldKind::UnitSphereS3 => {
                let s1 = x[0].sin();
                let s2 = x[1].sin();
                g[0][0] = 1.0;
                g[1][1] = s1 * s1;
                g[2][2] = s1 * s1 * s2 * s2;
            }
        }
        g
    }

    fn conformal(&self, x: &[f64; 3]) -> f64 {
        1.0 + self.amplitude * x[0].sin() * x[1].sin()
    }

    /// Volume density, analytically continued (signed) across the poles so
    /// that ghost points carry the mirrored value with the orientation flip.
    pub fn sqrt_det(&self, x: &[f64; 3]) -> f64 {
        match self.kind {
            ManifoldKind::UnitSphereS2 => x[0].sin(),
            ManifoldKind::FlatTorusT2 => 1.0,
            ManifoldKind::PerturbedTorus => self.conformal(x),
            ManifoldKind::UnitSphereS3 => x[0].sin().powi(2) * x[1].sin(),
        }
    }

    pub fn christoffel(&self, x: &[f64; 3]) -> Chr {
        let mut c = ZERO_CHR;
        match self.kind {
            ManifoldKind::UnitSphereS2 => {
                let (s, co) = x[0].sin_cos();
                c[0][1][1] = -s * co;
                c[1][0][1] = co / s;
                c[1][1][0] = co / s;
            }
            ManifoldKind::FlatTorusT2 => {}
            ManifoldKind::PerturbedTorus => return self.christoffel_fd(x),
            ManifoldKind::UnitSphereS3 => {
                let (s1, c1) = x[0].sin_cos();
                let (s2, c2) = x[1].sin_cos();
                c[0][1][1] = -s1 * c1;
                c[0][2][2] = -s1 * c1 * s2 * s2;
                c[1][0][1] = c1 / s1;
                c[1][1][0] = c1 / s1;
                c[1][2][2] = -s2 * c2;
                c[2][0][2] = c1 / s1;
                c[2][2][0] = c1 / s1;
                c[2][1][2] = c2 / s2;
                c[2][2][1] = c2 / s2;
            }
        }
        c
    }

    /// Γ^k_ij = ½ g^kl (∂_i g_jl + ∂_j g_il − ∂_l g_ij) with the metric
    /// derivatives taken by second-order central differences.
    pub fn christoffel_fd(&self, x: &[f64; 3]) -> Chr {
        let m = self.dim();
        let mut dg = [ZERO3; 3];
        for (l, dgl) in dg.iter_mut().enumerate().take(m) {
            let h = self.fd_step[l];
            let mut xp = *x;
            let mut xm = *x;
            xp[l] += h;
            xm[l] -= h;
            let gp = self.metric(&xp);
            let gm = self.metric(&xm);
            for i in 0..m {
                for j in 0..m {
                    dgl[i][j] = (gp[i][j] - gm[i][j]) / (2.0 * h);
                }
            }
        }
        let ginv = invert(&self.metric(x), m).expect("metric singular");
        christoffel_from_derivatives(&ginv, &dg, m)
    }

    pub fn ricci(&self, x: &[f64; 3]) -> Mat3 {
        match self.kind {
            ManifoldKind::UnitSphereS2 => self.metric(x),
            ManifoldKind::FlatTorusT2 => ZERO3,
            ManifoldKind::PerturbedTorus => self.ricci_fd(x),
            ManifoldKind::UnitSphereS3 => {
                let mut r = self.metric(x);
                for row in r.iter_mut() {
                    for v in row.iter_mut() {
                        *v *= 2.0;
                    }
                }
                r
            }
        }
    }

    /// Ric_ij = ∂_k Γ^k_ij − ∂_j Γ^k_ki + Γ^k_kl Γ^l_ij − Γ^k_jl Γ^l_ki with
    /// central differences of the finite-difference connection.
    pub fn ricci_fd(&self, x: &[f64; 3]) -> Mat3 {
        let m = self.dim();
        let mut dgam = [ZERO_CHR; 3];
        for (l, d) in dgam.iter_mut().enumerate().take(m) {
            let h = self.fd_step[l];
            let mut xp = *x;
            let mut xm = *x;
            xp[l] += h;
            xm[l] -= h;
            let cp = self.christoffel_fd(&xp);
            let cm = self.christoffel_fd(&xm);
            for k in 0..m {
                for i in 0..m {
                    for j in 0..m {
                        d[k][i][j] = (cp[k][i][j] - cm[k][i][j]) / (2.0 * h);
                    }
                }
            }
        }
        ricci_from_connection(&self.christoffel_fd(x), &dgam, m)
    }

    /// Embedding into Euclidean space for the spheres (unit radius).
    pub fn embed(&self, x: &[f64; 3]) -> Option<[f64; 4]> {
        match self.kind {
            ManifoldKind::UnitSphereS2 => {
                let (st, ct) = x[0].sin_cos();
                let (sp, cp) = x[1].sin_cos();
                Some([st * cp, st * sp, ct, 0.0])
            }
            ManifoldKind::UnitSphereS3 => {
                let (s1, c1) = x[0].sin_cos();
                let (s2, c2) = x[1].sin_cos();
                let (s3, c3) = x[2].sin_cos();
                Some([c1, s1 * c2, s1 * s2 * c3, s1 * s2 * s3])
            }
            _ => None,
        }
    }

    /// Rows ∂_i E for the sphere embeddings.
    pub fn embed_jacobian(&self, x: &[f64; 3]) -> Option<[[f64; 4]; 3]> {
        match self.kind {
            ManifoldKind::UnitSphereS2 => {
                let (st, ct) = x[0].sin_cos();
                let (sp, cp) = x[1].sin_cos();
                Some([
                    [ct * cp, ct * sp, -st, 0.0],
                    [-st * sp, st * cp, 0.0, 0.0],
                    [0.0; 4],
                ])
            }
            ManifoldKind::UnitSphereS3 => {
                let (s1, c1) = x[0].sin_cos();
                let (s2, c2) = x[1].sin_cos();
                let (s3, c3) = x[2].sin_cos();
                Some([
                    [-s1, c1 * c2, c1 * s2 * c3, c1 * s2 * s3],
                    [0.0, -s1 * s2, s1 * c2 * c3, s1 * c2 * s3],
                    [0.0, 0.0, -s1 * s2 * s3, s1 * s2 * c3],
                ])
            }
            _ => None,
        }
    }

    /// Coordinate extents `(lower, length)` per chart direction.
    pub fn extents(&self) -> Vec<(f64, f64)> {
        match self.kind {
            ManifoldKind::UnitSphereS2 => vec![(0.0, PI), (0.0, 2.0 * PI)],
            ManifoldKind::FlatTorusT2 | ManifoldKind::PerturbedTorus => {
                vec![(0.0, 2.0 * PI), (0.0, 2.0 * PI)]
            }
            ManifoldKind::UnitSphereS3 => vec![(0.0, PI), (0.0, PI), (0.0, 2.0 * PI)],
        }
    }
}

pub fn christoffel_from_derivatives(ginv: &Mat3, dg: &[Mat3; 3], m: usize) -> Chr {
    let mut c = ZERO_CHR;
    for k in 0..m {
        for i in 0..m {
            for j in i..m {
                let mut s = 0.0;
                for l in 0..m {
                    s += 0.5 * ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                }
                c[k][i][j] = s;
                c[k][j][i] = s;
            }
        }
    }
    c
}

/// `dgam[l][k][i][j]` holds ∂_l Γ^k_ij.
pub fn ricci_from_connection(gam: &Chr, dgam: &[Chr; 3], m: usize) -> Mat3 {
    let mut r = ZERO3;
    for i in 0..m {
        for j in i..m {
            let mut s = 0.0;
            for k in 0..m {
                s += dgam[k][k][i][j] - dgam[j][k][k][i];
                for l in 0..m {
                    s += gam[k][k][l] * gam[l][i][j] - gam[k][j][l] * gam[l][k][i];
                }
            }
            r[i][j] = s;
            r[j][i] = s;
        }
    }
    r
}
