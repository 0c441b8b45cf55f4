use std::fmt::Write as _;

use crate::fields::{covariant_derivative, divergence, energy_report, nabla, tensor_norm_sq, CovTensor, VectorField};
use crate::manifold::{integrate_scalar, Manifold};
use crate::operator::FlowOperator;

pub const MONITOR_COLUMNS: [&str; 12] = [
    "t",
    "u0",
    "u1",
    "u2",
    "v0",
    "v1",
    "v2",
    "frakL",
    "E_bochner",
    "normX2",
    "E_int",
    "err_partial",
];

/// One logged sample. u_k = ∫|∇^k X|², v_k = ∫|∇^k div X|², NaN above k_max.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonitorRow {
    pub t: f64,
    pub u: [f64; 3],
    pub v: [f64; 3],
    /// Discrete 𝔏_h of the variational operator.
    pub frak_l: f64,
    /// Nodal Bochner–Yano integral.
    pub e_bochner: f64,
    pub norm_x2: f64,
    /// ∫₀ᵗ 2𝔏_h ds (trapezoid over every step).
    pub e_int: f64,
    /// ½‖X₀‖² − E_int
    pub err_partial: f64,
}

impl MonitorRow {
    pub fn values(&self) -> [f64; 12] {
        [
            self.t,
            self.u[0],
            self.u[1],
            self.u[2],
            self.v[0],
            self.v[1],
            self.v[2],
            self.frak_l,
            self.e_bochner,
            self.norm_x2,
            self.e_int,
            self.err_partial,
        ]
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MonitorSeries {
    pub rows: Vec<MonitorRow>,
}

impl MonitorSeries {
    pub fn to_csv(&self) -> String {
        let mut s = MONITOR_COLUMNS.join(",");
        s.push('\n');
        for row in &self.rows {
            let vals: Vec<String> = row.values().iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(s, "{}", vals.join(","));
        }
        s
    }

    /// Parse a CSV written by [`MonitorSeries::to_csv`].
    pub fn from_csv(text: &str) -> Option<Self> {
        let mut lines = text.lines();
        if lines.next()?.trim() != MONITOR_COLUMNS.join(",") {
            return None;
        }
        let mut rows = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let v: Vec<f64> = line.split(',').map(|x| x.trim().parse().ok()).collect::<Option<_>>()?;
            if v.len() != 12 {
                return None;
            }
            rows.push(MonitorRow {
                t: v[0],
                u: [v[1], v[2], v[3]],
                v: [v[4], v[5], v[6]],
                frak_l: v[7],
                e_bochner: v[8],
                norm_x2: v[9],
                e_int: v[10],
                err_partial: v[11],
            });
        }
        Some(Self { rows })
    }

    pub fn first(&self) -> Option<&MonitorRow> {
        self.rows.first()
    }

    pub fn last(&self) -> Option<&MonitorRow> {
        self.rows.last()
    }
}

fn scalar_as_tensor(f: Vec<f64>, m: usize) -> CovTensor {
    let mut t = CovTensor::zeros(0, m, f.len());
    t.data = f;
    t
}

/// Monitor row for one state; `e_int` and `norm0` come from the run.
pub fn monitors(
    t: f64,
    x: &VectorField,
    manifold: &Manifold,
    op: &FlowOperator,
    k_max: usize,
    e_int: f64,
    norm0: f64,
) -> MonitorRow {
    let m = manifold.dim();
    let mut u = [f64::NAN; 3];
    let mut v = [f64::NAN; 3];
    let norm_x2 = op.norm_sq(x.as_slice());
    u[0] = norm_x2;
    let div = divergence(x, manifold);
    v[0] = integrate_scalar(&div.iter().map(|d| d * d).collect::<Vec<_>>(), manifold);
    if k_max >= 1 {
        let dx = covariant_derivative(x, manifold);
        u[1] = integrate_scalar(&tensor_norm_sq(&dx, manifold), manifold);
        let ddiv = nabla(&scalar_as_tensor(div, m), manifold);
        v[1] = integrate_scalar(&tensor_norm_sq(&ddiv, manifold), manifold);
        if k_max >= 2 {
            let ddx = nabla(&dx, manifold);
            u[2] = integrate_scalar(&tensor_norm_sq(&ddx, manifold), manifold);
            let dddiv = nabla(&ddiv, manifold);
            v[2] = integrate_scalar(&tensor_norm_sq(&dddiv, manifold), manifold);
        }
    }
    MonitorRow {
        t,
        u,
        v,
        frak_l: op.frak_l(x.as_slice()),
        e_bochner: energy_report(x, manifold).e_bochner,
        norm_x2,
        e_int,
        err_partial: 0.5 * norm0 - e_int,
    }
}
