//! Closed-form test and initial fields for the built-in geometries.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::VectorField;
use crate::error::{KvError, Result};
use crate::manifold::{Manifold, ManifoldKind};

/// Named scalar functions with known derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalarFn {
    /// cos θ (= z on S², = cos χ on S³)
    CosTheta,
    EmbedX,
    EmbedY,
    SinX,
    CosX,
    NegCosX,
    SinY,
    CosY,
    One,
}

impl FromStr for ScalarFn {
    type Err = KvError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cos_theta" | "embed_z" => ScalarFn::CosTheta,
            "embed_x" => ScalarFn::EmbedX,
            "embed_y" => ScalarFn::EmbedY,
            "sin_x" => ScalarFn::SinX,
            "cos_x" => ScalarFn::CosX,
            "neg_cos_x" => ScalarFn::NegCosX,
            "sin_y" => ScalarFn::SinY,
            "cos_y" => ScalarFn::CosY,
            "one" => ScalarFn::One,
            other => return Err(KvError::config("function", format!("unknown scalar function `{other}`"))),
        })
    }
}

impl ScalarFn {
    fn embed_index(self) -> Option<usize> {
        match self {
            ScalarFn::EmbedX => Some(0),
            ScalarFn::EmbedY => Some(1),
            ScalarFn::CosTheta => Some(2),
            _ => None,
        }
    }

    fn check(self, kind: ManifoldKind) -> Result<()> {
        let ok = match self {
            ScalarFn::One => true,
            ScalarFn::CosTheta => kind.is_sphere(),
            ScalarFn::EmbedX | ScalarFn::EmbedY => kind == ManifoldKind::UnitSphereS2,
            _ => kind.is_torus(),
        };
        if ok {
            Ok(())
        } else {
            Err(KvError::config("function", format!("{self:?} is not defined on {kind}")))
        }
    }

    /// Value and chart partial derivatives at `x`.
    fn eval(self, manifold: &Manifold, x: &[f64; 3]) -> (f64, [f64; 3]) {
        let geo = &manifold.geometry;
        if manifold.kind() == ManifoldKind::UnitSphereS3 && self == ScalarFn::CosTheta {
            let (s, c) = x[0].sin_cos();
            return (c, [-s, 0.0, 0.0]);
        }
        if let Some(a) = self.embed_index() {
            let e = geo.embed(x).unwrap();
            let j = geo.embed_jacobian(x).unwrap();
            return (e[a], [j[0][a], j[1][a], j[2][a]]);
        }
        let (sx, cx) = x[0].sin_cos();
        let (sy, cy) = x[1].sin_cos();
        match self {
            ScalarFn::SinX => (sx, [cx, 0.0, 0.0]),
            ScalarFn::CosX => (cx, [-sx, 0.0, 0.0]),
            ScalarFn::NegCosX => (-cx, [sx, 0.0, 0.0]),
            ScalarFn::SinY => (sy, [0.0, cy, 0.0]),
            ScalarFn::CosY => (cy, [0.0, -sy, 0.0]),
            _ => (1.0, [0.0; 3]),
        }
    }
}

pub fn sample_scalar(manifold: &Manifold, f: ScalarFn) -> Result<Vec<f64>> {
    f.check(manifold.kind())?;
    Ok((0..manifold.node_count())
        .map(|node| f.eval(manifold, &manifold.coord(node)).0)
        .collect())
}

/// Exact gradient g^ij ∂_j f of a named scalar function.
pub fn gradient_of(manifold: &Manifold, f: ScalarFn) -> Result<VectorField> {
    f.check(manifold.kind())?;
    let m = manifold.dim();
    let mut out = VectorField::zeros(manifold);
    for node in 0..manifold.node_count() {
        let (_, d) = f.eval(manifold, &manifold.coord(node));
        let gi = &manifold.metric.g_inv[node];
        let o = out.at_mut(node);
        for i in 0..m {
            o[i] = (0..m).map(|j| gi[i][j] * d[j]).sum();
        }
    }
    Ok(out)
}

/// Tangential part of an ambient field V(p): X^i = g^ij ∂_j E · V.
fn tangential(manifold: &Manifold, v: impl Fn(&[f64; 4]) -> [f64; 4]) -> VectorField {
    let m = manifold.dim();
    let geo = &manifold.geometry;
    let mut out = VectorField::zeros(manifold);
    for node in 0..manifold.node_count() {
        let x = manifold.coord(node);
        let p = geo.embed(&x).unwrap();
        let jac = geo.embed_jacobian(&x).unwrap();
        let amb = v(&p);
        let mut cov = [0.0; 3];
        for (j, c) in cov.iter_mut().enumerate().take(m) {
            *c = (0..4).map(|a| jac[j][a] * amb[a]).sum();
        }
        let gi = &manifold.metric.g_inv[node];
        let o = out.at_mut(node);
        for i in 0..m {
            o[i] = (0..m).map(|j| gi[i][j] * cov[j]).sum();
        }
    }
    out
}

/// Infinitesimal isometries: rotations `x`, `y`, `z` on S² (`z` is ∂_φ),
/// plane rotations `e01`..`e23` on S³, translations `x`, `y` on the flat torus.
pub fn killing_rotation(manifold: &Manifold, axis: &str) -> Result<VectorField> {
    match manifold.kind() {
        ManifoldKind::FlatTorusT2 => {
            let c = match axis {
                "x" => 0,
                "y" => 1,
                _ => return Err(KvError::config("axis", format!("torus translations are `x` or `y`, got `{axis}`"))),
            };
            Ok(VectorField::from_fn(manifold, |_| {
                let mut v = [0.0; 3];
                v[c] = 1.0;
                v
            }))
        }
        ManifoldKind::UnitSphereS2 => {
            let (a, b) = match axis {
                "z" => (0, 1),
                "x" => (1, 2),
                "y" => (2, 0),
                _ => return Err(KvError::config("axis", format!("sphere rotation axes are x, y, z, got `{axis}`"))),
            };
            if axis == "z" {
                return Ok(VectorField::from_fn(manifold, |_| [0.0, 1.0, 0.0]));
            }
            Ok(tangential(manifold, |p| plane_rotation(p, a, b)))
        }
        ManifoldKind::UnitSphereS3 => {
            let bytes = axis.as_bytes();
            let parsed = (bytes.len() == 3 && bytes[0] == b'e')
                .then(|| ((bytes[1] as char).to_digit(10), (bytes[2] as char).to_digit(10)));
            match parsed {
                Some((Some(a), Some(b))) if a < b && b < 4 => {
                    Ok(tangential(manifold, |p| plane_rotation(p, a as usize, b as usize)))
                }
                _ => Err(KvError::config("axis", format!("S³ rotations are e01..e23, got `{axis}`"))),
            }
        }
        ManifoldKind::PerturbedTorus => Err(KvError::config(
            "kind",
            "killing_rotation is not available on perturbed_torus (no continuous isometries)",
        )),
    }
}

/// Generator of rotation in the (a, b) coordinate plane.
fn plane_rotation(p: &[f64; 4], a: usize, b: usize) -> [f64; 4] {
    let mut v = [0.0; 4];
    v[a] = -p[b];
    v[b] = p[a];
    v
}

/// Trigonometric factor along one torus direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trig {
    Sin,
    Cos,
}

impl Trig {
    fn eval(self, t: f64) -> f64 {
        match self {
            Trig::Sin => t.sin(),
            Trig::Cos => t.cos(),
        }
    }
}

impl FromStr for Trig {
    type Err = KvError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sin" => Ok(Trig::Sin),
            "cos" => Ok(Trig::Cos),
            other => Err(KvError::config("trig", format!("expected sin or cos, got `{other}`"))),
        }
    }
}

/// X^component = amplitude · fx(kx·x) · fy(ky·y) on a torus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourierMode {
    pub component: usize,
    pub kx: i32,
    pub ky: i32,
    pub fx: Trig,
    pub fy: Trig,
    pub amplitude: f64,
}

impl FourierMode {
    /// sin(k x) along `component` (constant in y).
    pub fn sin_x(component: usize, amplitude: f64) -> Self {
        Self {
            component,
            kx: 1,
            ky: 0,
            fx: Trig::Sin,
            fy: Trig::Cos,
            amplitude,
        }
    }
}

pub fn fourier_mode(manifold: &Manifold, mode: FourierMode) -> Result<VectorField> {
    if !manifold.kind().is_torus() || mode.component >= 2 {
        return Err(KvError::config("kind", "fourier_mode needs a torus manifold and component x or y"));
    }
    Ok(VectorField::from_fn(manifold, |x| {
        let mut v = [0.0; 3];
        v[mode.component] =
            mode.amplitude * mode.fx.eval(mode.kx as f64 * x[0]) * mode.fy.eval(mode.ky as f64 * x[1]);
        v
    }))
}

/// sin x cos y ∂_x − cos x sin y ∂_y
pub fn taylor_green(manifold: &Manifold) -> Result<VectorField> {
    if !manifold.kind().is_torus() {
        return Err(KvError::config("kind", "taylor_green needs a torus manifold"));
    }
    Ok(VectorField::from_fn(manifold, |x| {
        [x[0].sin() * x[1].cos(), -x[0].cos() * x[1].sin(), 0.0]
    }))
}

/// Smooth random field with only low modes: Fourier wavenumbers |k| <= 2 on
/// tori, tangential parts of random quadratic ambient fields on spheres.
/// Scaled to unit L² norm, so absolute diagnostics do not depend on the draw.
pub fn random_bandlimited(manifold: &Manifold, seed: u64) -> VectorField {
    let x = random_raw(manifold, seed);
    let n2 = crate::manifold::l2_inner(&x, &x, manifold).expect("shape matches");
    x.scaled(1.0 / n2.sqrt())
}

fn random_raw(manifold: &Manifold, seed: u64) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = manifold.dim();
    if manifold.kind().is_torus() {
        let mut terms = Vec::new();
        for c in 0..m {
            for kx in -2i32..=2 {
                for ky in -2i32..=2 {
                    let a: f64 = rng.gen_range(-1.0..1.0);
                    let b: f64 = rng.gen_range(-1.0..1.0);
                    terms.push((c, kx, ky, a, b));
                }
            }
        }
        VectorField::from_fn(manifold, |x| {
            let mut v = [0.0; 3];
            for &(c, kx, ky, a, b) in &terms {
                let t = kx as f64 * x[0] + ky as f64 * x[1];
                v[c] += a * t.cos() + b * t.sin();
            }
            v
        })
    } else {
        let amb = m + 1;
        // V^a = c0 + Σ c1_b p_b + Σ_{b<=c} c2_bc p_b p_c
        let mut coef = Vec::new();
        for _ in 0..amb {
            let c0: f64 = rng.gen_range(-1.0..1.0);
            let c1: Vec<f64> = (0..amb).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c2: Vec<f64> = (0..amb * amb).map(|_| rng.gen_range(-1.0..1.0)).collect();
            coef.push((c0, c1, c2));
        }
        tangential(manifold, |p| {
            let mut v = [0.0; 4];
            for (a, (c0, c1, c2)) in coef.iter().enumerate() {
                let mut s = *c0;
                for b in 0..amb {
                    s += c1[b] * p[b];
                    for c in b..amb {
                        s += c2[b * amb + c] * p[b] * p[c];
                    }
                }
                v[a] = s;
            }
            v
        })
    }
}

/// Random band-limited scalar field (same mode content as the vector case).
pub fn random_scalar_bandlimited(manifold: &Manifold, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geo = &manifold.geometry;
    if manifold.kind().is_torus() {
        let terms: Vec<(i32, i32, f64, f64)> = (-2i32..=2)
            .flat_map(|kx| (-2i32..=2).map(move |ky| (kx, ky)))
            .map(|(kx, ky)| (kx, ky, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        (0..manifold.node_count())
            .map(|node| {
                let x = manifold.coord(node);
                terms
                    .iter()
                    .map(|&(kx, ky, a, b)| {
                        let t = kx as f64 * x[0] + ky as f64 * x[1];
                        a * t.cos() + b * t.sin()
                    })
                    .sum()
            })
            .collect()
    } else {
        let amb = manifold.dim() + 1;
        let c: Vec<f64> = (0..1 + amb + amb * amb).map(|_| rng.gen_range(-1.0..1.0)).collect();
        (0..manifold.node_count())
            .map(|node| {
                let p = geo.embed(&manifold.coord(node)).unwrap();
                let mut s = c[0];
                for b in 0..amb {
                    s += c[1 + b] * p[b];
                    for d in b..amb {
                        s += c[1 + amb + b * amb + d] * p[b] * p[d];
                    }
                }
                s
            })
            .collect()
    }
}
