use std::fmt;
use std::str::FromStr;

use crate::error::{KvError, Result};
use crate::linalg::axpy;

/// Explicit one-step methods for ẋ = F(x).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrator {
    Euler,
    Rk4,
    /// Second-order Runge–Kutta–Legendre super-time-stepping; one step of
    /// `s` stages is stable for τλ_max ≤ (s²+s−2)/2.
    Rkl2,
}

impl Integrator {
    pub fn name(self) -> &'static str {
        match self {
            Integrator::Euler => "euler",
            Integrator::Rk4 => "rk4",
            Integrator::Rkl2 => "rkl2",
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Integrator::Euler => 1,
            Integrator::Rk4 => 4,
            Integrator::Rkl2 => 2,
        }
    }
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Integrator {
    type Err = KvError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Integrator::Euler),
            "rk4" => Ok(Integrator::Rk4),
            "rkl2" => Ok(Integrator::Rkl2),
            other => Err(KvError::config("integrator", format!("unknown integrator '{other}'"))),
        }
    }
}

/// Step size, stage count and step count covering [0, t_end] exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepPlan {
    pub integrator: Integrator,
    pub dt: f64,
    pub stages: usize,
    pub steps: usize,
}

/// Stability-limited plan. Euler: dt = safety·2/λ; rk4: safety·2.7/λ;
/// rkl2: the base step (or a default) with the fewest stages meeting
/// τλ ≤ safety·(s²+s−2)/2. The step is shrunk to land on t_end.
pub fn plan_steps(
    integrator: Integrator,
    lambda_max: f64,
    dt_safety: f64,
    t_end: f64,
    base_dt: Option<f64>,
) -> Result<StepPlan> {
    if !(dt_safety > 0.0 && dt_safety <= 1.0) {
        return Err(KvError::config("dt_safety", "must lie in (0, 1]"));
    }
    if !(t_end > 0.0) {
        return Err(KvError::config("t_end", "must be positive"));
    }
    let lam = lambda_max.max(0.0);
    let (limit, stages) = match integrator {
        Integrator::Euler | Integrator::Rk4 => {
            let c = if integrator == Integrator::Euler { 2.0 } else { 2.7 };
            let limit = if lam > 0.0 { dt_safety * c / lam } else { f64::INFINITY };
            let stages = if integrator == Integrator::Euler { 1 } else { 4 };
            (limit, stages)
        }
        Integrator::Rkl2 => {
            let tau = base_dt.unwrap_or((t_end / 100.0).min(0.01));
            let need = 2.0 * tau * lam / dt_safety;
            let mut s = 2usize;
            while ((s * s + s - 2) as f64) < need {
                s += 1;
            }
            (tau, s)
        }
    };
    let mut dt = match base_dt {
        Some(b) if integrator != Integrator::Rkl2 => {
            if b > limit {
                return Err(KvError::CflViolation { dt: b, limit });
            }
            b
        }
        _ => limit,
    };
    if !dt.is_finite() {
        dt = t_end / 100.0;
    }
    let steps = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    Ok(StepPlan {
        integrator,
        dt: t_end / steps as f64,
        stages,
        steps,
    })
}

/// Right-hand side callback; may fail (e.g. an inner linear solve).
pub type Rhs<'a> = dyn FnMut(&[f64], &mut [f64]) -> Result<()> + 'a;

/// Advance `x` by one step of size `dt`.
pub fn step(integrator: Integrator, stages: usize, x: &mut [f64], dt: f64, f: &mut Rhs<'_>) -> Result<()> {
    let n = x.len();
    match integrator {
        Integrator::Euler => {
            let mut k = vec![0.0; n];
            f(x, &mut k)?;
            axpy(dt, &k, x);
        }
        Integrator::Rk4 => {
            let mut k1 = vec![0.0; n];
            let mut k2 = vec![0.0; n];
            let mut k3 = vec![0.0; n];
            let mut k4 = vec![0.0; n];
            let mut y = x.to_vec();
            f(x, &mut k1)?;
            y.iter_mut().zip(x.iter().zip(&k1)).for_each(|(y, (a, k))| *y = a + 0.5 * dt * k);
            f(&y, &mut k2)?;
            y.iter_mut().zip(x.iter().zip(&k2)).for_each(|(y, (a, k))| *y = a + 0.5 * dt * k);
            f(&y, &mut k3)?;
            y.iter_mut().zip(x.iter().zip(&k3)).for_each(|(y, (a, k))| *y = a + dt * k);
            f(&y, &mut k4)?;
            for i in 0..n {
                x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        Integrator::Rkl2 => rkl2_step(stages.max(2), x, dt, f)?,
    }
    Ok(())
}

fn rkl2_b(j: usize) -> f64 {
    if j <= 2 {
        1.0 / 3.0
    } else {
        let jf = j as f64;
        (jf * jf + jf - 2.0) / (2.0 * jf * (jf + 1.0))
    }
}

fn rkl2_step(s: usize, x: &mut [f64], tau: f64, f: &mut Rhs<'_>) -> Result<()> {
    let n = x.len();
    let sf = s as f64;
    let w1 = 4.0 / (sf * sf + sf - 2.0);
    let y0 = x.to_vec();
    let mut f0 = vec![0.0; n];
    f(&y0, &mut f0)?;
    let mut ym2 = y0.clone();
    let mut ym1 = y0.clone();
    axpy(rkl2_b(1) * w1 * tau, &f0, &mut ym1);
    let mut fj = vec![0.0; n];
    let mut y = vec![0.0; n];
    for j in 2..=s {
        let jf = j as f64;
        let mu = (2.0 * jf - 1.0) / jf * rkl2_b(j) / rkl2_b(j - 1);
        let nu = -(jf - 1.0) / jf * rkl2_b(j) / rkl2_b(j - 2);
        let mt = mu * w1;
        let gt = -(1.0 - rkl2_b(j - 1)) * mt;
        f(&ym1, &mut fj)?;
        for i in 0..n {
            y[i] = mu * ym1[i] + nu * ym2[i] + (1.0 - mu - nu) * y0[i] + mt * tau * fj[i] + gt * tau * f0[i];
        }
        std::mem::swap(&mut ym2, &mut ym1);
        std::mem::swap(&mut ym1, &mut y);
    }
    x.copy_from_slice(&ym1);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(lambda: f64) -> impl FnMut(&[f64], &mut [f64]) -> Result<()> {
        move |x: &[f64], out: &mut [f64]| {
            out[0] = lambda * x[0];
            Ok(())
        }
    }

    #[test]
    fn rk4_matches_exponential_to_fifth_order() {
        let mut errs = Vec::new();
        for dt in [0.1, 0.05] {
            let mut x = [1.0];
            step(Integrator::Rk4, 4, &mut x, dt, &mut decay(-2.0)).unwrap();
            errs.push((x[0] - (-2.0 * dt).exp()).abs());
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 4.8, "{order}");
    }

    #[test]
    fn rkl2_is_second_order_and_stable_at_its_bound() {
        let mut errs = Vec::new();
        for steps in [20, 40] {
            let mut x = [1.0];
            let dt = 1.0 / steps as f64;
            for _ in 0..steps {
                step(Integrator::Rkl2, 5, &mut x, dt, &mut decay(-1.0)).unwrap();
            }
            errs.push((x[0] - (-1.0f64).exp()).abs());
        }
        assert!((errs[0] / errs[1]).log2() > 1.8);
        for s in [2usize, 7, 40] {
            let beta = ((s * s + s - 2) as f64) / 2.0;
            for frac in [0.3, 0.77, 1.0] {
                let mut x = [1.0];
                step(Integrator::Rkl2, s, &mut x, 1.0, &mut decay(-beta * frac)).unwrap();
                assert!(x[0].abs() <= 1.0 + 1e-12, "s={s} frac={frac} r={}", x[0]);
            }
        }
    }

    #[test]
    fn plans_land_on_t_end() {
        let p = plan_steps(Integrator::Rk4, 100.0, 0.5, 1.0, None).unwrap();
        assert!((p.dt * p.steps as f64 - 1.0).abs() < 1e-12);
        assert!(p.dt <= 0.5 * 2.7 / 100.0);
        let p = plan_steps(Integrator::Rkl2, 1e6, 0.5, 1.0, Some(0.01)).unwrap();
        let s = p.stages as f64;
        assert!(p.dt * 1e6 <= 0.5 * (s * s + s - 2.0) / 2.0 + 1e-9);
        assert!(plan_steps(Integrator::Euler, 100.0, 0.5, 1.0, Some(1.0)).is_err());
    }
}
