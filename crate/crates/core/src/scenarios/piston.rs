use std::sync::Arc;

use nalgebra::DMatrix;

use super::{Guard, PistonConfig, PotentialChoice, ReducedODE, Scenario, ScenarioKind};
use crate::error::{Error, Result};
use crate::geometry::ContactChart;
use crate::socs::{HeatForm, KinematicConstraints, SOCSystem, SecondLawPolicy, VariationalConstraints};
use crate::thermo::{gas_adiabat_constant, gas_state};

// q = (x, P, T, V, S, U)
const X: usize = 0;
const P: usize = 1;
const T: usize = 2;
const V: usize = 3;
const S: usize = 4;
const U: usize = 5;

const NAMES: [&str; 6] = ["x", "P", "T", "V", "S", "U"];

/// Adiabat constant `P V^gamma` of the configured initial state.
pub fn adiabat_constant_for(cfg: &PistonConfig) -> Result<f64> {
    let v = cfg.area * cfg.x0;
    let st = gas_state(&cfg.gas, cfg.t_init, v)?;
    gas_adiabat_constant(&cfg.gas, st.p, v)
}

fn mech_energy(m: f64, g: f64) -> impl Fn(&[f64], &[f64]) -> f64 + Clone {
    move |q: &[f64], v: &[f64]| 0.5 * m * v[X] * v[X] + m * g * q[X] + q[U]
}

fn ideal_gas_rows(q: &[f64], n0r: f64, alpha: f64, area: f64) -> [[f64; 6]; 3] {
    [
        [0.0, q[V], -n0r, q[P], 0.0, 0.0],
        [0.0, 0.0, -alpha * n0r, 0.0, 0.0, 1.0],
        [area, 0.0, 0.0, -1.0, 0.0, 0.0],
    ]
}

fn rows_to_matrix(rows: &[[f64; 6]]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), 6, |i, j| rows[i][j])
}

/// Piston on an isentrope: `m x'' = -m g + k A (A x)^(-gamma)`.
pub fn build_piston_adiabatic(cfg: &PistonConfig) -> Result<Scenario> {
    cfg.validate()?;
    let PistonConfig { m, g, area, gas, .. } = *cfg;
    let gamma = gas.gamma();
    let (n0r, alpha) = (gas.n0r, gas.alpha);
    let k = adiabat_constant_for(cfg)?;
    let s0 = gas.entropy(cfg.t_init, area * cfg.x0);

    let ck = KinematicConstraints::new(move |jet| {
        let q = &jet.q;
        vec![
            q[P] * q[V] - n0r * q[T],
            q[U] - alpha * n0r * q[T],
            area * q[X] - q[V],
            q[S] - s0,
            q[P] * q[V].powf(gamma) - k,
        ]
    });
    let cv = VariationalConstraints::new(move |q, _| {
        let [r1, r2, r3] = ideal_gas_rows(q, n0r, alpha, area);
        let vg = q[V].powf(gamma);
        rows_to_matrix(&[
            r1,
            r2,
            r3,
            [0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
            [0.0, vg, 0.0, gamma * q[P] * vg / q[V], 0.0, 0.0],
        ])
    });
    let system = SOCSystem::thermo_mechanical(ScenarioKind::PistonAdiabatic.name(), 1, ContactChart::simple_gas(), move |q, v| {
        0.5 * m * v[0] * v[0] - m * g * q[0]
    })?
    .with_kinematic(ck)
    .with_variational(cv)
    .with_energy(mech_energy(m, g))
    .with_second_law(SecondLawPolicy::new(vec![S], T));

    let force = k * area.powf(1.0 - gamma) / m;
    let ode = ReducedODE::new(&["x", "x_dot"], move |_, s, out| {
        out[0] = s[1];
        out[1] = -g + force * s[0].powf(-gamma);
    })
    .with_guard(Guard::positive("x > 0", 0))
    .with_velocities(vec![1]);

    let reconstruction = Arc::new(move |s: &[f64]| -> Result<Vec<f64>> {
        let x = s[0];
        if !(x > 0.0) {
            return Err(Error::Domain(format!("piston position {x} must be positive")));
        }
        let v = area * x;
        let p = k * v.powf(-gamma);
        let pv = k * v.powf(1.0 - gamma);
        Ok(vec![x, p, pv / n0r, v, s0, alpha * pv])
    });

    Ok(Scenario {
        kind: Some(ScenarioKind::PistonAdiabatic),
        system,
        ode,
        reconstruction,
        initial: vec![cfg.x0, cfg.v0],
        observable_names: NAMES.map(String::from).to_vec(),
    })
}

/// Piston at constant temperature `t_init`: `m x'' = -m g + n0r T / x`.
pub fn build_piston_isothermal(cfg: &PistonConfig, potential: PotentialChoice) -> Result<Scenario> {
    cfg.validate()?;
    let PistonConfig { m, g, area, gas, .. } = *cfg;
    let (n0r, alpha) = (gas.n0r, gas.alpha);
    let t_iso = cfg.t_init;

    let state_rows = move |q: &[f64]| -> Vec<f64> {
        vec![
            q[P] * q[V] - n0r * q[T],
            q[U] - alpha * n0r * q[T],
            area * q[X] - q[V],
            q[S] - gas.entropy(q[T], q[V]),
            q[T] - t_iso,
        ]
    };
    let base_rows = move |q: &[f64]| -> Vec<[f64; 6]> {
        let mut rows = ideal_gas_rows(q, n0r, alpha, area).to_vec();
        rows.push([0.0, 0.0, -n0r * alpha / q[T], -n0r / q[V], 1.0, 0.0]);
        rows.push([0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        rows
    };

    let system = match potential {
        PotentialChoice::InternalEnergy => {
            let ck = KinematicConstraints::new(move |jet| {
                let (q, v, a) = (&jet.q, &jet.qdot, &jet.qddot);
                let mut w = state_rows(q);
                w.push(m * a[X] * v[X] + m * g * v[X] + v[U] - q[T] * v[S]);
                w
            });
            let cv = VariationalConstraints::new(move |q, _| {
                let mut rows = base_rows(q);
                rows.push([q[P] * area, 0.0, 0.0, 0.0, 0.0, 1.0]);
                rows_to_matrix(&rows)
            });
            SOCSystem::thermo_mechanical(ScenarioKind::PistonIsothermal.name(), 1, ContactChart::simple_gas(), move |q, v| {
                0.5 * m * v[0] * v[0] - m * g * q[0]
            })?
            .with_kinematic(ck)
            .with_variational(cv)
        }
        PotentialChoice::Helmholtz => SOCSystem::new(ScenarioKind::PistonIsothermal.name(), 6, 1, move |q, v| {
            0.5 * m * v[X] * v[X] - m * g * q[X] - q[U] + q[T] * q[S]
        })?
        .with_chart(ContactChart::simple_gas())?
        .with_kinematic(KinematicConstraints::new(move |jet| state_rows(&jet.q)))
        .with_variational(VariationalConstraints::new(move |q, _| rows_to_matrix(&base_rows(q)))),
    };
    let system = system
        .with_energy(mech_energy(m, g))
        .with_heat(HeatForm::covector(|q| {
            let mut w = vec![0.0; 6];
            w[S] = q[T];
            w
        }))
        .with_second_law(SecondLawPolicy::new(vec![S], T));

    let force = n0r * t_iso / m;
    let ode = ReducedODE::new(&["x", "x_dot"], move |_, s, out| {
        out[0] = s[1];
        out[1] = -g + force / s[0];
    })
    .with_guard(Guard::positive("x > 0", 0))
    .with_velocities(vec![1]);

    let reconstruction = Arc::new(move |s: &[f64]| -> Result<Vec<f64>> {
        let x = s[0];
        let v = area * x;
        let st = gas_state(&gas, t_iso, v)?;
        Ok(vec![x, st.p, t_iso, v, st.s, st.u])
    });

    Ok(Scenario {
        kind: Some(ScenarioKind::PistonIsothermal),
        system,
        ode,
        reconstruction,
        initial: vec![cfg.x0, cfg.v0],
        observable_names: NAMES.map(String::from).to_vec(),
    })
}
