use std::sync::Arc;

use nalgebra::DMatrix;

use super::{DissipativeBathConfig, DissipativeConfig, Guard, ReducedODE, Scenario, ScenarioKind};
use crate::error::{Error, Result};
use crate::geometry::{composite_chart, ContactChart};
use crate::socs::{HeatForm, KinematicConstraints, SOCSystem, SecondLawPolicy, VariationalConstraints};
use crate::thermo::{body_state, gas_state};

// q = (x, P, T, V, S, U, Tc, Sc, Uc)
const X: usize = 0;
const P: usize = 1;
const T: usize = 2;
const V: usize = 3;
const S: usize = 4;
const U: usize = 5;
const TC: usize = 6;
const SC: usize = 7;
const UC: usize = 8;

const NAMES: [&str; 9] = ["x", "P", "T", "V", "S", "U", "T_c", "S_c", "U_c"];

/// External bath coupling `(kappa_e, area_e, t_bath)`.
#[derive(Clone, Copy)]
struct Bath {
    kappa_e: f64,
    area_e: f64,
    t_bath: f64,
}

impl Bath {
    fn heat(&self, t_c: f64) -> f64 {
        self.kappa_e * self.area_e * (self.t_bath - t_c)
    }
}

/// Total energy `m x'^2/2 + m g x + U + U_c` of a configuration.
pub fn dissipative_energy(cfg: &DissipativeConfig, q: &[f64], qdot: &[f64]) -> f64 {
    0.5 * cfg.m * qdot[X] * qdot[X] + cfg.m * cfg.g * q[X] + q[U] + q[UC]
}

/// Isolated piston with friction; heat flows between gas and container.
pub fn build_dissipative_piston(cfg: &DissipativeConfig) -> Result<Scenario> {
    cfg.validate()?;
    build(cfg, None, ScenarioKind::PistonDissipative)
}

/// Same piston with the container exchanging heat with a bath.
pub fn build_dissipative_piston_bath(cfg: &DissipativeBathConfig) -> Result<Scenario> {
    cfg.validate()?;
    let bath = Bath {
        kappa_e: cfg.kappa_e,
        area_e: cfg.area_e,
        t_bath: cfg.t_bath,
    };
    build(&cfg.piston, Some(bath), ScenarioKind::PistonDissipativeBath)
}

/// Right-hand side in `(x, x', T, T_c)`; the container rate follows from the
/// energy balance so that the total energy changes only by the bath heat.
fn rhs(cfg: &DissipativeConfig, bath: Option<Bath>) -> impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static {
    let DissipativeConfig {
        m,
        g,
        gas,
        body,
        mu,
        kappa,
        area_model,
        ..
    } = *cfg;
    let (n0r, alpha, nu) = (gas.n0r, gas.alpha, body.nu);
    move |_, s, out| {
        let (x, v, t, tc) = (s[0], s[1], s[2], s[3]);
        let acc = -g + n0r * t / (m * x) - mu * v / m;
        let tdot = kappa * area_model.at(x) * (tc - t) / (alpha * n0r);
        let mut uc_dot = -(m * acc + m * g) * v - alpha * n0r * tdot;
        if let Some(b) = bath {
            uc_dot += b.heat(tc);
        }
        out[0] = v;
        out[1] = acc;
        out[2] = tdot;
        out[3] = uc_dot / nu;
    }
}

fn build(cfg: &DissipativeConfig, bath: Option<Bath>, kind: ScenarioKind) -> Result<Scenario> {
    let DissipativeConfig {
        m,
        g,
        area,
        gas,
        body,
        mu,
        kappa,
        area_model,
        ..
    } = *cfg;
    let (n0r, alpha, nu) = (gas.n0r, gas.alpha, body.nu);

    let ck = KinematicConstraints::new(move |jet| {
        let (q, v, a) = (&jet.q, &jet.qdot, &jet.qddot);
        let e_mec_dot = m * a[X] * v[X] + m * g * v[X];
        let conduction = kappa * area_model.at(q[X]) * (q[T] - q[TC]);
        let mut w = vec![
            q[P] * q[V] - n0r * q[T],
            q[U] - alpha * n0r * q[T],
            area * q[X] - q[V],
            q[S] - gas.entropy(q[T], q[V]),
            q[UC] - nu * q[TC],
            q[SC] - body.entropy(q[TC]),
        ];
        match bath {
            None => {
                w.push(e_mec_dot + v[UC] - conduction);
                w.push(e_mec_dot + v[U] + v[UC]);
            }
            Some(b) => {
                w.push(v[U] + conduction);
                w.push(e_mec_dot + v[U] + v[UC] - b.heat(q[TC]));
            }
        }
        w
    });
    let cv = VariationalConstraints::new(move |q, qd| {
        let mut rows = DMatrix::zeros(8, 9);
        let entries: [(usize, usize, f64); 17] = [
            (0, P, q[V]),
            (0, T, -n0r),
            (0, V, q[P]),
            (1, T, -alpha * n0r),
            (1, U, 1.0),
            (2, X, area),
            (2, V, -1.0),
            (3, T, -n0r * alpha / q[T]),
            (3, V, -n0r / q[V]),
            (3, S, 1.0),
            (4, TC, -nu),
            (4, UC, 1.0),
            (5, TC, -nu / q[TC]),
            (5, SC, 1.0),
            (6, U, 1.0),
            (6, V, q[P]),
            (7, UC, 1.0),
        ];
        for (r, c, value) in entries {
            rows[(r, c)] = value;
        }
        rows[(7, X)] = -mu * qd[X];
        rows
    });
    let heat = match bath {
        Some(b) => HeatForm::rate(move |q, _| b.heat(q[TC])),
        None => HeatForm::Zero,
    };
    let chart = composite_chart(&ContactChart::simple_gas(), &ContactChart::body());
    let system = SOCSystem::thermo_mechanical(kind.name(), 1, chart, move |q, v| 0.5 * m * v[0] * v[0] - m * g * q[0])?
        .with_kinematic(ck)
        .with_variational(cv)
        .with_heat(heat)
        .with_energy(move |q, v| 0.5 * m * v[X] * v[X] + m * g * q[X] + q[U] + q[UC])
        .with_second_law(SecondLawPolicy::new(vec![S, SC], TC));

    let ode = ReducedODE::new(&["x", "x_dot", "T", "T_c"], rhs(cfg, bath))
        .with_guard(Guard::positive("x > 0", 0))
        .with_guard(Guard::positive("T > 0", 2))
        .with_guard(Guard::positive("T_c > 0", 3))
        .with_velocities(vec![1]);

    let reconstruction = Arc::new(move |s: &[f64]| -> Result<Vec<f64>> {
        let (x, t, tc) = (s[0], s[2], s[3]);
        if !(x > 0.0) {
            return Err(Error::Domain(format!("piston position {x} must be positive")));
        }
        let v = area * x;
        let st = gas_state(&gas, t, v)?;
        let (uc, sc) = body_state(&body, tc)?;
        Ok(vec![x, st.p, t, v, st.s, st.u, tc, sc, uc])
    });

    Ok(Scenario {
        kind: Some(kind),
        system,
        ode,
        reconstruction,
        initial: vec![cfg.x0, cfg.v0, cfg.t_gas0, cfg.t_c0],
        observable_names: NAMES.map(String::from).to_vec(),
    })
}
