//! Fixed-step RK4 and adaptive Dormand-Prince 5(4).

use serde::{Deserialize, Serialize};

use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::scenarios::ReducedODE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Method {
    Rk4 { dt: f64 },
    Dopri5 { rtol: f64, atol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub t_end: f64,
    pub max_steps: usize,
    /// Output spacing. RK4 records every `round(sample_dt / dt)`-th step and
    /// the final one; the adaptive method interpolates onto the grid. Every
    /// step is recorded when absent.
    pub sample_dt: Option<f64>,
}

impl IntegratorConfig {
    pub const DEFAULT_MAX_STEPS: usize = 50_000_000;

    pub fn rk4(dt: f64, t_end: f64) -> Self {
        Self {
            method: Method::Rk4 { dt },
            t_end,
            max_steps: Self::DEFAULT_MAX_STEPS,
            sample_dt: None,
        }
    }

    pub fn adaptive(rtol: f64, atol: f64, t_end: f64) -> Self {
        Self {
            method: Method::Dopri5 { rtol, atol },
            t_end,
            max_steps: Self::DEFAULT_MAX_STEPS,
            sample_dt: None,
        }
    }

    pub fn with_sample_dt(mut self, dt: f64) -> Self {
        self.sample_dt = Some(dt);
        self
    }

    pub fn with_max_steps(mut self, n: usize) -> Self {
        self.max_steps = n;
        self
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        match self.method {
            Method::Rk4 { dt } if !(dt > 0.0 && dt.is_finite()) => return bad(format!("dt must be positive, got {dt}")),
            Method::Dopri5 { rtol, atol } if !(rtol > 0.0 && atol > 0.0) => {
                return bad(format!("rtol and atol must be positive, got {rtol}, {atol}"))
            }
            _ => {}
        }
        if let Some(s) = self.sample_dt {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("sample_dt must be positive, got {s}"));
            }
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        Ok(())
    }
}

fn check_state(ode: &ReducedODE, t: f64, state: &[f64]) -> Result<()> {
    if state.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("state {state:?} at t = {t}")));
    }
    ode.check_guards(t, state)
}

/// Integrates `ode` from `initial` over `[0, cfg.t_end]`.
pub fn integrate(ode: &ReducedODE, initial: &[f64], cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    check_state(ode, 0.0, initial)?;
    let (times, states) = match cfg.method {
        Method::Rk4 { dt } => rk4(ode, initial, dt, cfg)?,
        Method::Dopri5 { rtol, atol } => dopri5(ode, initial, rtol, atol, cfg)?,
    };
    Ok(Trajectory::from_states(times, states, ode.state_names.clone()))
}

fn rk4(ode: &ReducedODE, initial: &[f64], dt: f64, cfg: &IntegratorConfig) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = ode.dim;
    let steps_f = (cfg.t_end / dt - 1e-9).ceil().max(1.0);
    if steps_f > cfg.max_steps as f64 {
        return Err(Error::MaxSteps(cfg.max_steps));
    }
    let steps = steps_f as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(initial.to_vec());
    let mut y = initial.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let stride = cfg.sample_dt.map_or(1, |s| ((s / dt).round() as usize).max(1));
    for i in 0..steps {
        let t = i as f64 * dt;
        let t_next = if i + 1 == steps { cfg.t_end } else { (i + 1) as f64 * dt };
        let h = t_next - t;
        ode.eval_into(t, &y, &mut k1);
        for j in 0..n {
            tmp[j] = y[j] + 0.5 * h * k1[j];
        }
        ode.eval_into(t + 0.5 * h, &tmp, &mut k2);
        for j in 0..n {
            tmp[j] = y[j] + 0.5 * h * k2[j];
        }
        ode.eval_into(t + 0.5 * h, &tmp, &mut k3);
        for j in 0..n {
            tmp[j] = y[j] + h * k3[j];
        }
        ode.eval_into(t + h, &tmp, &mut k4);
        for j in 0..n {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        check_state(ode, t_next, &y)?;
        if (i + 1) % stride == 0 || i + 1 == steps {
            times.push(t_next);
            states.push(y.clone());
        }
    }
    Ok((times, states))
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dopri5(ode: &ReducedODE, initial: &[f64], rtol: f64, atol: f64, cfg: &IntegratorConfig) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = ode.dim;
    let t_end = cfg.t_end;
    let mut times = vec![0.0];
    let mut states = vec![initial.to_vec()];
    let mut y = initial.to_vec();
    let mut t = 0.0;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    ode.eval_into(t, &y, &mut k[0]);

    let scale = |y: &[f64], j: usize| atol + rtol * y[j].abs();
    let norm = |v: &[f64], y: &[f64]| -> f64 {
        (v.iter().enumerate().map(|(j, x)| (x / scale(y, j)).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt()
    };
    let d0 = norm(&y, &y);
    let d1 = norm(&k[0], &y);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(t_end).min(cfg.sample_dt.unwrap_or(f64::INFINITY));

    let mut sample_index = 1usize;
    let next_sample = |idx: usize| -> f64 {
        match cfg.sample_dt {
            Some(s) => (idx as f64 * s).min(t_end),
            None => t_end,
        }
    };
    let mut y_new = vec![0.0; n];
    let mut y_err = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut steps = 0usize;
    while t < t_end {
        steps += 1;
        if steps > cfg.max_steps {
            return Err(Error::MaxSteps(cfg.max_steps));
        }
        let target = next_sample(sample_index);
        let mut step = h;
        let mut lands = false;
        if t + step >= target - 1e-12 * target.abs().max(1.0) {
            step = target - t;
            lands = true;
        }
        if step < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow(t));
        }
        for s in 1..7 {
            for j in 0..n {
                let mut acc = y[j];
                for (l, kl) in k.iter().enumerate().take(s) {
                    acc += step * A[s][l] * kl[j];
                }
                tmp[j] = acc;
            }
            ode.eval_into(t + C[s] * step, &tmp, &mut k[s]);
        }
        for j in 0..n {
            let mut hi = y[j];
            let mut lo = y[j];
            for s in 0..7 {
                hi += step * B5[s] * k[s][j];
                lo += step * B4[s] * k[s][j];
            }
            y_new[j] = hi;
            y_err[j] = hi - lo;
        }
        let err = if y_new.iter().all(|x| x.is_finite()) {
            (y_err
                .iter()
                .enumerate()
                .map(|(j, e)| (e / (atol + rtol * y[j].abs().max(y_new[j].abs()))).powi(2))
                .sum::<f64>()
                / n.max(1) as f64)
                .sqrt()
        } else {
            f64::INFINITY
        };
        if err <= 1.0 {
            t = if lands { target } else { t + step };
            y.copy_from_slice(&y_new);
            check_state(ode, t, &y)?;
            // First-same-as-last: stage 7 is f(t + h, y_new).
            let last = k[6].clone();
            k[0] = last;
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !lands || step >= h {
                h = step * factor;
            } else {
                h = h.max(step * factor);
            }
            if lands {
                sample_index += 1;
            }
            if lands || cfg.sample_dt.is_none() {
                times.push(t);
                states.push(y.clone());
            }
        } else {
            let factor = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.25
            };
            h = step * factor;
        }
    }
    Ok((times, states))
}

/// Integrates to `t1`, reverses the velocity-like components, integrates
/// another `t1` and returns the largest deviation from `initial` (positions
/// compared directly, velocities by magnitude).
pub fn reversibility_check(ode: &ReducedODE, initial: &[f64], t1: f64, cfg: &IntegratorConfig) -> Result<f64> {
    let cfg = cfg.with_t_end(t1);
    let forward = integrate(ode, initial, &cfg)?;
    let mut turned = forward.final_state().to_vec();
    for &i in &ode.velocity_indices {
        turned[i] = -turned[i];
    }
    let back = integrate(ode, &turned, &cfg)?;
    let end = back.final_state();
    Ok((0..ode.dim)
        .map(|i| {
            if ode.velocity_indices.contains(&i) {
                (end[i].abs() - initial[i].abs()).abs()
            } else {
                (end[i] - initial[i]).abs()
            }
        })
        .fold(0.0, f64::max))
}
