//! Closed-form and quadrature reference solutions.

use std::fmt;
use std::sync::Arc;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::numeric::adaptive_simpson;
use crate::scenarios::{adiabat_constant_for, DissipativeConfig, PistonConfig, WagonBathConfig, WagonConfig};
use crate::thermo::body_state;

/// Position of the friction-damped wagon.
pub fn wagon_position(m: f64, mu: f64, x0: f64, v0: f64, t: f64) -> f64 {
    x0 - v0 * m / mu * (-mu * t / m).exp_m1()
}

pub fn wagon_velocity(m: f64, mu: f64, v0: f64, t: f64) -> f64 {
    v0 * (-mu * t / m).exp()
}

/// Temperature of the adiabatic wagon; all kinetic energy ends up as heat.
pub fn wagon_temperature_adiabatic(m: f64, mu: f64, nu: f64, v0: f64, t_init: f64, t: f64) -> f64 {
    t_init - m * v0 * v0 / (2.0 * nu) * (-2.0 * mu * t / m).exp_m1()
}

/// Parameters of the wagon in a bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathWagon {
    pub m: f64,
    pub mu: f64,
    pub nu: f64,
    pub kappa: f64,
    pub t_bath: f64,
    pub v0: f64,
    pub t_init: f64,
}

impl From<&WagonBathConfig> for BathWagon {
    fn from(c: &WagonBathConfig) -> Self {
        Self {
            m: c.wagon.m,
            mu: c.wagon.mu,
            nu: c.wagon.body.nu,
            kappa: c.kappa,
            t_bath: c.t_bath,
            v0: c.wagon.v0,
            t_init: c.wagon.t_init,
        }
    }
}

impl BathWagon {
    fn rates(&self) -> (f64, f64) {
        (self.kappa / self.nu, 2.0 * self.mu / self.m)
    }

    /// Coefficients `(C1, C2)` of `T = T_b + C1 e^(-kappa t/nu) + C2 e^(-2 mu t/m)`.
    pub fn coefficients(&self) -> Result<(f64, f64)> {
        let (a, b) = self.rates();
        if (a - b).abs() <= 1e-9 {
            return Err(Error::Resonant);
        }
        let c2 = self.mu * self.v0 * self.v0 / (self.nu * (a - b));
        Ok((self.t_init - self.t_bath - c2, c2))
    }

    /// Coefficients of the uncoupled (`kappa = 0`) solution; they solve the
    /// cooling equation only for `kappa = 0`.
    pub fn uncoupled_coefficients(&self) -> (f64, f64) {
        let c2 = -self.m * self.v0 * self.v0 / (2.0 * self.nu);
        (self.t_init - self.t_bath - c2, c2)
    }

    fn eval_with(&self, (c1, c2): (f64, f64), t: f64) -> f64 {
        let (a, b) = self.rates();
        self.t_bath + c1 * (-a * t).exp() + c2 * (-b * t).exp()
    }

    fn deriv_with(&self, (c1, c2): (f64, f64), t: f64) -> f64 {
        let (a, b) = self.rates();
        -a * c1 * (-a * t).exp() - b * c2 * (-b * t).exp()
    }

    /// Residual `nu T' - mu x'^2 + kappa (T - T_b)` of a closed form.
    fn residual_with(&self, coeffs: (f64, f64), t: f64) -> f64 {
        let v = wagon_velocity(self.m, self.mu, self.v0, t);
        self.nu * self.deriv_with(coeffs, t) - self.mu * v * v + self.kappa * (self.eval_with(coeffs, t) - self.t_bath)
    }

    pub fn residual(&self, t: f64) -> Result<f64> {
        Ok(self.residual_with(self.coefficients()?, t))
    }

    pub fn uncoupled_residual(&self, t: f64) -> f64 {
        self.residual_with(self.uncoupled_coefficients(), t)
    }

    pub fn uncoupled_temperature(&self, t: f64) -> f64 {
        self.eval_with(self.uncoupled_coefficients(), t)
    }
}

/// Temperature of the wagon in a bath (two-exponential closed form).
pub fn wagon_temperature_bath(p: &BathWagon, t: f64) -> Result<f64> {
    Ok(p.eval_with(p.coefficients()?, t))
}

type CurveFn = Arc<dyn Fn(f64) -> Result<Vec<f64>> + Send + Sync>;

/// A reference curve in configuration coordinates.
#[derive(Clone)]
pub struct OracleCurve {
    eval: CurveFn,
    pub window: (f64, f64),
    pub provenance: &'static str,
    pub observable_names: Vec<String>,
}

impl fmt::Debug for OracleCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OracleCurve")
            .field("window", &self.window)
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl OracleCurve {
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        if t < self.window.0 || t > self.window.1 {
            return Err(Error::Domain(format!("t = {t} outside oracle window {:?}", self.window)));
        }
        (self.eval)(t)
    }

    /// Samples on `n` uniform points of the window, lifted to jets.
    pub fn sample(&self, n: usize) -> Result<Trajectory> {
        let (a, b) = self.window;
        let times: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
        let states = times.iter().map(|&t| self.eval(t)).collect::<Result<Vec<_>>>()?;
        Trajectory::from_configurations(times, states, self.observable_names.clone())
    }
}

fn wagon_names() -> Vec<String> {
    ["x", "T", "S", "U"].map(String::from).to_vec()
}

/// `(x, T, S, U)` of the adiabatic wagon on `[0, t_end]`.
pub fn wagon_adiabatic_curve(cfg: &WagonConfig, t_end: f64) -> OracleCurve {
    let c = *cfg;
    OracleCurve {
        eval: Arc::new(move |t| {
            let x = wagon_position(c.m, c.mu, c.x0, c.v0, t);
            let temp = wagon_temperature_adiabatic(c.m, c.mu, c.body.nu, c.v0, c.t_init, t);
            let (u, s) = body_state(&c.body, temp)?;
            Ok(vec![x, temp, s, u])
        }),
        window: (0.0, t_end),
        provenance: "exponential friction decay with energy conservation",
        observable_names: wagon_names(),
    }
}

/// `(x, T, S, U)` of the wagon in a bath on `[0, t_end]`.
pub fn wagon_bath_curve(cfg: &WagonBathConfig, t_end: f64) -> Result<OracleCurve> {
    let c = *cfg;
    let p = BathWagon::from(cfg);
    p.coefficients()?;
    Ok(OracleCurve {
        eval: Arc::new(move |t| {
            let x = wagon_position(c.wagon.m, c.wagon.mu, c.wagon.x0, c.wagon.v0, t);
            let temp = wagon_temperature_bath(&p, t)?;
            let (u, s) = body_state(&c.wagon.body, temp)?;
            Ok(vec![x, temp, s, u])
        }),
        window: (0.0, t_end),
        provenance: "re-derived two-exponential solution of the cooling balance",
        observable_names: wagon_names(),
    })
}

/// `H(q, p) = p^2/(2m) + m g q + alpha k A^(1-gamma) q^(1-gamma)`.
pub fn piston_hamiltonian(cfg: &PistonConfig, q: f64, p: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::Domain(format!("piston position {q} must be positive")));
    }
    let k = adiabat_constant_for(cfg)?;
    let gamma = cfg.gas.gamma();
    Ok(p * p / (2.0 * cfg.m) + cfg.m * cfg.g * q + cfg.gas.alpha * k * cfg.area.powf(1.0 - gamma) * q.powf(1.0 - gamma))
}

/// Equilibrium `x* = (k A^(1-gamma) / (m g))^(1/gamma)` of the adiabatic piston.
pub fn piston_equilibrium(cfg: &PistonConfig) -> Result<f64> {
    let k = adiabat_constant_for(cfg)?;
    let gamma = cfg.gas.gamma();
    Ok((k * cfg.area.powf(1.0 - gamma) / (cfg.m * cfg.g)).powf(1.0 / gamma))
}

/// Period of small oscillations about the adiabatic equilibrium.
pub fn piston_small_oscillation_period(cfg: &PistonConfig) -> Result<f64> {
    let k = adiabat_constant_for(cfg)?;
    let gamma = cfg.gas.gamma();
    let x_star = piston_equilibrium(cfg)?;
    let stiffness = gamma * k * cfg.area.powf(1.0 - gamma) * x_star.powf(-gamma - 1.0) / cfg.m;
    Ok(2.0 * std::f64::consts::PI / stiffness.sqrt())
}

/// Equilibrium `x* = n0r T / (m g)` of the isothermal piston.
pub fn isothermal_equilibrium(cfg: &PistonConfig) -> f64 {
    cfg.gas.n0r * cfg.t_init / (cfg.m * cfg.g)
}

/// Direction of motion on a monotone branch of the adiabatic piston.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// From the initial velocity, or the initial net force when at rest.
    Auto,
    Increasing,
    Decreasing,
}

/// Time for the adiabatic piston to travel from `x0` to `x_target` along a
/// monotone branch, by quadrature of the energy integral.
pub fn piston_quadrature_time(cfg: &PistonConfig, x_target: f64, branch: Branch) -> Result<f64> {
    cfg.validate()?;
    if !(x_target > 0.0) {
        return Err(Error::Domain(format!("target position {x_target} must be positive")));
    }
    let k = adiabat_constant_for(cfg)?;
    let gamma = cfg.gas.gamma();
    let (g, x0, v0) = (cfg.g, cfg.x0, cfg.v0);
    let stiff = k * cfg.area.powf(1.0 - gamma) / cfg.m;
    // Squared speed after a displacement d, written in increments to avoid
    // cancellation near the start.
    let speed2_at = move |d: f64| {
        let gas_work = x0.powf(1.0 - gamma) * ((1.0 - gamma) * (d / x0).ln_1p()).exp_m1() / (1.0 - gamma);
        v0 * v0 + 2.0 * (-g * d + stiff * gas_work)
    };

    let natural = if v0 != 0.0 {
        v0.signum()
    } else {
        let force = -g + stiff * x0.powf(-gamma);
        if force == 0.0 {
            return Err(Error::TurningPoint { x_target });
        }
        force.signum()
    };
    let sigma = match branch {
        Branch::Auto => natural,
        Branch::Increasing => 1.0,
        Branch::Decreasing => -1.0,
    };
    if sigma != natural {
        return Err(Error::Domain("branch disagrees with the initial motion".into()));
    }
    if x_target == x0 {
        return Ok(0.0);
    }
    if (x_target - x0).signum() != sigma {
        return Err(Error::TurningPoint { x_target });
    }
    if speed2_at(x_target - x0).max(0.0).sqrt() <= 1e-8 {
        return Err(Error::TurningPoint { x_target });
    }
    // s = x0 + sigma u^2 removes the square-root singularity at a start
    // from rest; the integrand becomes 2u / |v(s)|.
    let u_end = (x_target - x0).abs().sqrt();
    let accel0 = (-g + stiff * x0.powf(-gamma)).abs();
    let integrand = move |u: f64| -> Result<f64> {
        if u == 0.0 {
            return if v0 != 0.0 { Ok(0.0) } else { Ok((2.0 / accel0).sqrt()) };
        }
        let f = speed2_at(sigma * u * u);
        if !(f > 0.0) {
            return Err(Error::TurningPoint { x_target });
        }
        Ok(2.0 * u / f.sqrt())
    };
    let scan = 256;
    for i in 1..=scan {
        integrand(u_end * i as f64 / scan as f64)?;
    }
    adaptive_simpson(&integrand, 0.0, u_end, 1e-10, 50)
}

/// Values of `H` on a `q x p` grid; `h[i][j]` belongs to `(q[i], p[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub h: Vec<Vec<f64>>,
}

impl PhaseGrid {
    /// Grid point of smallest `H` on the `p = 0` row (requires `0` in `p`).
    pub fn argmin_at_rest(&self) -> Option<f64> {
        let j = self.p.iter().position(|&p| p == 0.0)?;
        let (i, _) = self.h.iter().enumerate().min_by(|a, b| a.1[j].total_cmp(&b.1[j]))?;
        Some(self.q[i])
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Hamiltonian of the adiabatic piston tabulated on a uniform grid, one row
/// per `q` value computed under `exec`.
pub fn piston_phase_grid(
    cfg: &PistonConfig,
    q_range: (f64, f64),
    p_range: (f64, f64),
    n_q: usize,
    n_p: usize,
    exec: Execution,
) -> Result<PhaseGrid> {
    if n_q == 0 || n_p == 0 {
        return Err(Error::InvalidConfig("phase grid needs at least one point per axis".into()));
    }
    if !(q_range.0 > 0.0 && q_range.1 >= q_range.0 && p_range.1 >= p_range.0) {
        return Err(Error::InvalidConfig(format!("bad phase grid ranges {q_range:?} x {p_range:?}")));
    }
    let q = linspace(q_range.0, q_range.1, n_q);
    let mut p = linspace(p_range.0, p_range.1, n_p);
    // Snap the rest row exactly onto zero when the grid straddles it.
    if let Some(j) = p.iter().position(|v| v.abs() < 1e-12 * (p_range.1 - p_range.0).max(1.0)) {
        p[j] = 0.0;
    }
    let h = map_range(exec, n_q, |i| {
        p.iter().map(|&pj| piston_hamiltonian(cfg, q[i], pj)).collect::<Result<Vec<_>>>()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(PhaseGrid { q, p, h })
}

/// Long-time limit `(x_inf, T_inf)` of the isolated dissipative piston.
pub fn dissipative_steady_state(cfg: &DissipativeConfig) -> (f64, f64) {
    let e0 = 0.5 * cfg.m * cfg.v0 * cfg.v0 + cfg.m * cfg.g * cfg.x0 + cfg.gas.alpha * cfg.gas.n0r * cfg.t_gas0 + cfg.body.nu * cfg.t_c0;
    let t_inf = e0 / (cfg.gas.n0r * (1.0 + cfg.gas.alpha) + cfg.body.nu);
    (cfg.gas.n0r * t_inf / (cfg.m * cfg.g), t_inf)
}

/// Entropy change `n0r ln(x / x0)` of the isothermal piston.
pub fn isothermal_entropy_change(cfg: &PistonConfig, x: f64) -> f64 {
    cfg.gas.n0r * (x / cfg.x0).ln()
}
