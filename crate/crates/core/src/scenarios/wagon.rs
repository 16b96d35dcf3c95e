use std::sync::Arc;

use nalgebra::DMatrix;

use super::{Guard, ReducedODE, Scenario, ScenarioKind, WagonBathConfig, WagonConfig};
use crate::error::Result;
use crate::geometry::ContactChart;
use crate::socs::{HeatForm, KinematicConstraints, SOCSystem, SecondLawPolicy, VariationalConstraints};
use crate::thermo::body_state;

// q = (x, T, S, U)
const X: usize = 0;
const T: usize = 1;
const S: usize = 2;
const U: usize = 3;

/// Wagon with internal friction, adiabatically isolated.
pub fn build_wagon_adiabatic(cfg: &WagonConfig) -> Result<Scenario> {
    cfg.validate()?;
    build(cfg, None, ScenarioKind::WagonAdiabatic)
}

/// Wagon exchanging heat `kappa (T_b - T)` with a bath.
pub fn build_wagon_bath(cfg: &WagonBathConfig) -> Result<Scenario> {
    cfg.validate()?;
    build(&cfg.wagon, Some((cfg.kappa, cfg.t_bath)), ScenarioKind::WagonBath)
}

fn build(cfg: &WagonConfig, bath: Option<(f64, f64)>, kind: ScenarioKind) -> Result<Scenario> {
    let WagonConfig { m, mu, body, .. } = *cfg;
    let nu = body.nu;
    let (kappa, t_bath) = bath.unwrap_or((0.0, 1.0));
    let heat_rate = move |q: &[f64]| kappa * (t_bath - q[T]);

    let ck = KinematicConstraints::new(move |jet| {
        let (q, v, a) = (&jet.q, &jet.qdot, &jet.qddot);
        let heat = if bath.is_some() { heat_rate(q) } else { 0.0 };
        vec![q[U] - nu * q[T], q[S] - body.entropy(q[T]), m * a[X] * v[X] + v[U] - heat]
    });
    let cv = VariationalConstraints::new(move |q, v| {
        DMatrix::from_row_slice(
            3,
            4,
            &[
                0.0,
                -nu,
                0.0,
                1.0, //
                0.0,
                -nu / q[T],
                1.0,
                0.0, //
                mu * v[X],
                0.0,
                0.0,
                -1.0,
            ],
        )
    });
    let heat = match bath {
        Some(_) => HeatForm::rate(move |q, _| heat_rate(q)),
        None => HeatForm::Zero,
    };
    let system = SOCSystem::thermo_mechanical(kind.name(), 1, ContactChart::body(), move |_, v| 0.5 * m * v[0] * v[0])?
        .with_kinematic(ck)
        .with_variational(cv)
        .with_heat(heat)
        .with_energy(move |q, v| 0.5 * m * v[X] * v[X] + q[U])
        .with_second_law(SecondLawPolicy::new(vec![S], T));

    let ode = ReducedODE::new(&["x", "x_dot", "T"], move |_, s, out| {
        let v = s[1];
        out[0] = v;
        out[1] = -mu * v / m;
        out[2] = (mu * v * v - kappa * (s[2] - t_bath)) / nu;
    })
    .with_guard(Guard::positive("T > 0", 2))
    .with_velocities(vec![1]);

    let reconstruction = Arc::new(move |s: &[f64]| -> Result<Vec<f64>> {
        let (u, entropy) = body_state(&body, s[2])?;
        Ok(vec![s[0], s[2], entropy, u])
    });

    Ok(Scenario {
        kind: Some(kind),
        system,
        ode,
        reconstruction,
        initial: vec![cfg.x0, cfg.v0, cfg.t_init],
        observable_names: ["x", "T", "S", "U"].map(String::from).to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::socs::{constraint_force, dalembert_violation, el_residual, kinematic_residual, variation_basis, Jet2};
    use approx::assert_relative_eq;

    fn unit() -> Scenario {
        build_wagon_adiabatic(&WagonConfig::default()).unwrap()
    }

    #[test]
    fn basis_at_unit_speed() {
        let sc = unit();
        let q = [0.0, 1.0, 0.0, 1.0];
        let b = variation_basis(&sc.system, &q, &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(b.dim(), 1);
        let col = b.columns.column(0);
        let sign = col[0].signum();
        for k in 0..4 {
            assert_relative_eq!(sign * col[k], 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn el_residual_of_wagon() {
        let sc = unit();
        let jet = Jet2::new(vec![0.2, 1.3, 0.1, 1.3], vec![0.7, 0.4, 0.2, 0.4], vec![-2.5, 0.0, 0.0, 0.0]).unwrap();
        let r = el_residual(&sc.system, &jet).unwrap();
        let expect = [-2.5, 0.0, 0.0, 1.0];
        for k in 0..4 {
            assert_relative_eq!(r[k], expect[k], epsilon = 1e-9);
        }
    }

    #[test]
    fn consistent_and_inconsistent_jets() {
        let sc = unit();
        let v = 0.8;
        let t: f64 = 1.4;
        // x'' = -mu v / m, T' = mu v^2 / nu, S' = nu T' / T, U' = nu T'
        let tdot = v * v;
        let q = vec![0.0, t, (t).ln(), t];
        let jet = Jet2::new(q.clone(), vec![v, tdot, tdot / t, tdot], vec![-v, 0.0, 0.0, 0.0]).unwrap();
        assert!(dalembert_violation(&sc.system, &jet).unwrap() <= 1e-8);
        assert!(kinematic_residual(&sc.system, &jet).unwrap().iter().all(|w| w.abs() <= 1e-12));
        let lambda = constraint_force(&sc.system, &jet).unwrap();
        let r = el_residual(&sc.system, &jet).unwrap();
        let vmat = sc.system.variational_matrix(&jet.q, &jet.qdot);
        assert!((vmat.transpose() * lambda - r).norm() <= 1e-8);

        let bad = Jet2::new(vec![0.0, 1.0, 0.0, 1.0], vec![1.0, 1.0, 1.0, 1.0], vec![0.0; 4]).unwrap();
        assert!(dalembert_violation(&sc.system, &bad).unwrap() > 0.4);
        assert!(constraint_force(&sc.system, &bad).is_err());
    }

    #[test]
    fn affine_violation_of_energy_equation() {
        let sc = unit();
        let jet = Jet2::new(vec![0.0, 1.0, 0.0, 2.0], vec![0.0; 4], vec![0.0; 4]).unwrap();
        assert_eq!(kinematic_residual(&sc.system, &jet).unwrap()[0], 1.0);
    }

    #[test]
    fn bath_ode_relaxes_without_motion() {
        let cfg = WagonBathConfig {
            wagon: WagonConfig {
                v0: 0.0,
                t_init: 3.0,
                ..WagonConfig::default()
            },
            kappa: 0.5,
            t_bath: 1.0,
        };
        let sc = build_wagon_bath(&cfg).unwrap();
        let d = sc.ode.eval(0.0, &sc.initial);
        assert_eq!(d, vec![0.0, 0.0, -1.0]);
        assert_eq!(sc.system.heat_rate(&[0.0, 3.0, 0.0, 3.0], &[0.0; 4]), -1.0);
    }

    #[test]
    fn reconstruction_fills_body_state() {
        let sc = unit();
        assert_eq!(sc.reconstruct(&[0.5, 1.0, 1.0]).unwrap(), vec![0.5, 1.0, 0.0, 1.0]);
        assert!(sc.reconstruct(&[0.5, 1.0, -1.0]).is_err());
    }
}
