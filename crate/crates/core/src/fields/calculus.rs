use super::{CovTensor, VectorField};
use crate::manifold::{parity, Manifold};

fn index_digits(mut c: usize, rank: usize, m: usize) -> [usize; 4] {
    let mut d = [0usize; 4];
    for slot in (0..rank).rev() {
        d[slot] = c % m;
        c /= m;
    }
    d
}

/// Component signs for every parity mask (3 bits) and component index.
struct ParityTable {
    comps: usize,
    signs: Vec<f64>,
}

impl ParityTable {
    fn new(rank: usize, m: usize) -> Self {
        let comps = m.pow(rank as u32);
        let mut signs = vec![1.0; 8 * comps];
        for mask in 0..8u8 {
            for c in 0..comps {
                let d = index_digits(c, rank, m);
                signs[mask as usize * comps + c] = parity(&d[..rank], mask);
            }
        }
        Self { comps, signs }
    }

    #[inline]
    fn sign(&self, mask: u8, c: usize) -> f64 {
        self.signs[mask as usize * self.comps + c]
    }
}

/// Central difference ∂_dir of every component of a node-major field whose
/// components carry `rank` tensor indices (for parity across poles).
pub fn partial(data: &[f64], rank: usize, manifold: &Manifold, dir: usize) -> Vec<f64> {
    let m = manifold.dim();
    let table = ParityTable::new(rank, m);
    let comps = table.comps;
    let grid = &manifold.grid;
    let inv = 1.0 / (2.0 * grid.h[dir]);
    let mut out = vec![0.0; data.len()];
    for node in 0..grid.node_count() {
        let p = grid.neighbor(node, dir, 1);
        let q = grid.neighbor(node, dir, -1);
        for c in 0..comps {
            let a = table.sign(p.flip, c) * data[p.node * comps + c];
            let b = table.sign(q.flip, c) * data[q.node * comps + c];
            out[node * comps + c] = (a - b) * inv;
        }
    }
    out
}

/// X_j = g_jk X^k
pub fn lower(x: &VectorField, manifold: &Manifold) -> CovTensor {
    let m = manifold.dim();
    let mut out = CovTensor::zeros(1, m, manifold.node_count());
    for node in 0..manifold.node_count() {
        let g = &manifold.metric.g[node];
        let v = x.at(node);
        let o = out.at_mut(node);
        for j in 0..m {
            o[j] = (0..m).map(|k| g[j][k] * v[k]).sum();
        }
    }
    out
}

/// X^i = g^ij X_j
pub fn raise(t: &CovTensor, manifold: &Manifold) -> VectorField {
    assert_eq!(t.rank, 1, "raise expects a covector field");
    let m = manifold.dim();
    let mut out = VectorField::zeros(manifold);
    for node in 0..manifold.node_count() {
        let gi = &manifold.metric.g_inv[node];
        let v = t.at(node);
        let o = out.at_mut(node);
        for i in 0..m {
            o[i] = (0..m).map(|j| gi[i][j] * v[j]).sum();
        }
    }
    out
}

/// (∇T)_{k i1..ir} = ∂_k T_{i1..ir} − Σ_a Γ^p_{k i_a} T_{i1..p..ir}; the new
/// derivative index is placed first.
pub fn nabla(t: &CovTensor, manifold: &Manifold) -> CovTensor {
    let m = manifold.dim();
    let r = t.rank;
    let comps = t.comps();
    let n = manifold.node_count();
    let mut out = CovTensor::zeros(r + 1, m, n);
    let out_comps = out.comps();
    let strides: Vec<usize> = (0..r).map(|a| m.pow((r - 1 - a) as u32)).collect();
    for k in 0..m {
        let d = partial(&t.data, r, manifold, k);
        for node in 0..n {
            let gam = &manifold.connection.gamma[node];
            let src = t.at(node);
            let dst = &mut out.data[node * out_comps + k * comps..node * out_comps + (k + 1) * comps];
            for c in 0..comps {
                let digits = index_digits(c, r, m);
                let mut v = d[node * comps + c];
                for a in 0..r {
                    let ia = digits[a];
                    let base = c - ia * strides[a];
                    for p in 0..m {
                        let g = gam[p][k][ia];
                        if g != 0.0 {
                            v -= g * src[base + p * strides[a]];
                        }
                    }
                }
                dst[c] = v;
            }
        }
    }
    out
}

/// ∇_i X_j as a full (0,2) field.
pub fn covariant_derivative(x: &VectorField, manifold: &Manifold) -> CovTensor {
    nabla(&lower(x, manifold), manifold)
}

/// Def(X)_ij = ½(∇_i X_j + ∇_j X_i), exactly symmetric.
pub fn deformation(x: &VectorField, manifold: &Manifold) -> CovTensor {
    symmetrize(&covariant_derivative(x, manifold))
}

pub(crate) fn symmetrize(t: &CovTensor) -> CovTensor {
    let m = t.dim;
    let mut out = t.clone();
    let n = t.data.len() / (m * m);
    for node in 0..n {
        let src = t.at(node);
        let dst = out.at_mut(node);
        for i in 0..m {
            for j in i..m {
                let v = 0.5 * (src[i * m + j] + src[j * m + i]);
                dst[i * m + j] = v;
                dst[j * m + i] = v;
            }
        }
    }
    out
}

fn trace(t: &CovTensor, manifold: &Manifold) -> Vec<f64> {
    let m = manifold.dim();
    (0..manifold.node_count())
        .map(|node| {
            let gi = &manifold.metric.g_inv[node];
            let v = t.at(node);
            let mut s = 0.0;
            for i in 0..m {
                for j in 0..m {
                    s += gi[i][j] * v[i * m + j];
                }
            }
            s
        })
        .collect()
}

/// div X = g^ij ∇_i X_j
pub fn divergence(x: &VectorField, manifold: &Manifold) -> Vec<f64> {
    trace(&covariant_derivative(x, manifold), manifold)
}

/// Density form (1/√g) ∂_i(√g X^i), the cross-check for [`divergence`].
pub fn divergence_density(x: &VectorField, manifold: &Manifold) -> Vec<f64> {
    let m = manifold.dim();
    let grid = &manifold.grid;
    let geo = &manifold.geometry;
    let mut out = vec![0.0; manifold.node_count()];
    for (node, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for i in 0..m {
            let p = grid.neighbor(node, i, 1);
            let q = grid.neighbor(node, i, -1);
            let a = geo.sqrt_det(&p.coord) * parity(&[i], p.flip) * x.at(p.node)[i];
            let b = geo.sqrt_det(&q.coord) * parity(&[i], q.flip) * x.at(q.node)[i];
            s += (a - b) / (2.0 * grid.h[i]);
        }
        *o = s / manifold.metric.sqrt_det[node];
    }
    out
}

/// (∇f)^i = g^ij ∂_j f
pub fn gradient(f: &[f64], manifold: &Manifold) -> VectorField {
    let m = manifold.dim();
    let n = manifold.node_count();
    let mut df = CovTensor::zeros(1, m, n);
    for j in 0..m {
        let d = partial(f, 0, manifold, j);
        for node in 0..n {
            df.at_mut(node)[j] = d[node];
        }
    }
    raise(&df, manifold)
}

/// Scalar Laplace–Beltrami as div ∘ grad.
pub fn laplace_beltrami(f: &[f64], manifold: &Manifold) -> Vec<f64> {
    divergence(&gradient(f, manifold), manifold)
}

/// Δ_LB X = g^ab ∇_a ∇_b X, from two nested covariant derivatives.
pub fn rough_laplacian(x: &VectorField, manifold: &Manifold) -> VectorField {
    let m = manifold.dim();
    let hess = nabla(&covariant_derivative(x, manifold), manifold);
    let mut cov = CovTensor::zeros(1, m, manifold.node_count());
    for node in 0..manifold.node_count() {
        let gi = &manifold.metric.g_inv[node];
        let h = hess.at(node);
        let o = cov.at_mut(node);
        for j in 0..m {
            let mut s = 0.0;
            for a in 0..m {
                for b in 0..m {
                    s += gi[a][b] * h[(a * m + b) * m + j];
                }
            }
            o[j] = s;
        }
    }
    raise(&cov, manifold)
}

/// (Ric♯X)^i = R^i_j X^j
pub fn ricci_apply(x: &VectorField, manifold: &Manifold) -> VectorField {
    let m = manifold.dim();
    let mut out = VectorField::zeros(manifold);
    for node in 0..manifold.node_count() {
        let r = &manifold.curvature.ricci_mixed[node];
        let v = x.at(node);
        let o = out.at_mut(node);
        for i in 0..m {
            o[i] = (0..m).map(|j| r[i][j] * v[j]).sum();
        }
    }
    out
}

/// Δ_LB X + ∇ div X + Ric♯X in direct finite-difference form.
pub fn flow_rhs(x: &VectorField, manifold: &Manifold) -> VectorField {
    let mut out = rough_laplacian(x, manifold);
    out.axpy(1.0, &gradient(&divergence(x, manifold), manifold));
    out.axpy(1.0, &ricci_apply(x, manifold));
    out
}

/// Pointwise |T|² = g^{i1j1}···g^{irjr} T_I T_J.
pub fn tensor_norm_sq(t: &CovTensor, manifold: &Manifold) -> Vec<f64> {
    let m = manifold.dim();
    let r = t.rank;
    let comps = t.comps();
    let strides: Vec<usize> = (0..r).map(|a| m.pow((r - 1 - a) as u32)).collect();
    let mut buf = vec![0.0; comps];
    let mut tmp = vec![0.0; comps];
    (0..manifold.node_count())
        .map(|node| {
            let gi = &manifold.metric.g_inv[node];
            let src = t.at(node);
            buf.copy_from_slice(src);
            for a in 0..r {
                for c in 0..comps {
                    let ia = (c / strides[a]) % m;
                    let base = c - ia * strides[a];
                    tmp[c] = (0..m).map(|p| gi[ia][p] * buf[base + p * strides[a]]).sum();
                }
                buf.copy_from_slice(&tmp);
            }
            buf.iter().zip(src).map(|(a, b)| a * b).sum()
        })
        .collect()
}

/// Skew-symmetric form of the covariant advection ∇_X X:
/// ½[X^j ∂_j X^i + (1/√g) ∂_j(√g X^j X^i) − X^i div X] + Γ^i_jk X^j X^k.
/// Continuum-equal to ∇_X X; the central-difference version conserves
/// energy exactly on the flat torus.
pub fn advection_skew(x: &VectorField, manifold: &Manifold) -> VectorField {
    let m = manifold.dim();
    let grid = &manifold.grid;
    let geo = &manifold.geometry;
    let div = divergence_density(x, manifold);
    let mut out = VectorField::zeros(manifold);
    for node in 0..manifold.node_count() {
        let v = x.at(node);
        let gam = &manifold.connection.gamma[node];
        let sg = manifold.metric.sqrt_det[node];
        let mut acc = [0.0; 3];
        for j in 0..m {
            let p = grid.neighbor(node, j, 1);
            let q = grid.neighbor(node, j, -1);
            let inv = 1.0 / (2.0 * grid.h[j]);
            let xp = x.at(p.node);
            let xq = x.at(q.node);
            let sp = geo.sqrt_det(&p.coord);
            let sq = geo.sqrt_det(&q.coord);
            let xjp = parity(&[j], p.flip) * xp[j];
            let xjq = parity(&[j], q.flip) * xq[j];
            for (i, a) in acc.iter_mut().enumerate().take(m) {
                let xip = parity(&[i], p.flip) * xp[i];
                let xiq = parity(&[i], q.flip) * xq[i];
                let conv = v[j] * (xip - xiq) * inv;
                let flux = (sp * xjp * xip - sq * xjq * xiq) * inv / sg;
                *a += 0.5 * (conv + flux);
            }
        }
        let o = out.at_mut(node);
        for i in 0..m {
            let mut s = acc[i] - 0.5 * v[i] * div[node];
            for j in 0..m {
                for k in 0..m {
                    s += gam[i][j][k] * v[j] * v[k];
                }
            }
            o[i] = s;
        }
    }
    out
}
