use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;
use thermomech::dynamics::{integrate, IntegratorConfig};
use thermomech::scenarios::{build_piston_adiabatic, build_wagon_adiabatic, ideal_ode, PistonConfig, WagonConfig};
use thermomech::socs::{
    constraint_force, dalembert_violation, el_residual, holonomic_embed, variation_basis, Jet2, SOCSystem, VariationalConstraints,
};
use thermomech::thermo::gas_state;

fn wagon(m: f64, mu: f64, nu: f64) -> SOCSystem {
    let cfg = WagonConfig {
        m,
        mu,
        body: thermomech::thermo::BodyParams { nu, ..Default::default() },
        ..WagonConfig::default()
    };
    build_wagon_adiabatic(&cfg).unwrap().system
}

/// Jet of the wagon satisfying every kinematic constraint, with free
/// acceleration `a`.
fn wagon_jet(m: f64, nu: f64, v: f64, a: f64, t: f64) -> Jet2 {
    let u_dot = -m * a * v;
    let t_dot = u_dot / nu;
    Jet2::new(
        vec![0.3, t, nu * t.ln(), nu * t],
        vec![v, t_dot, nu * t_dot / t, u_dot],
        vec![a, 0.0, 0.0, 0.0],
    )
    .unwrap()
}

fn with_rows(sys: &SOCSystem, mix: DMatrix<f64>) -> SOCSystem {
    let orig = sys.clone();
    sys.clone()
        .with_variational(VariationalConstraints::new(move |q, v| &mix * orig.variational_matrix(q, v)))
}

proptest! {
    #[test]
    fn violation_invariant_under_row_rescaling(
        v in 0.1..3.0f64, a in -3.0..3.0f64, t in 0.5..4.0f64,
        row in 0usize..3, c in prop_oneof![-1e3..-1e-3f64, 1e-3..1e3f64],
    ) {
        let sys = wagon(1.3, 0.7, 1.9);
        let mut mix = DMatrix::identity(3, 3);
        mix[(row, row)] = c;
        let scaled = with_rows(&sys, mix);
        let jet = wagon_jet(1.3, 1.9, v, a, t);
        let d0 = dalembert_violation(&sys, &jet).unwrap();
        let d1 = dalembert_violation(&scaled, &jet).unwrap();
        prop_assert!((d0 - d1).abs() <= 1e-10 * (1.0 + d0), "{d0} vs {d1}");
    }

    #[test]
    fn wagon_projection_is_newton(m in 0.5..3.0f64, mu in 0.1..3.0f64, nu in 0.5..3.0f64, v in 0.1..3.0f64, a in -3.0..3.0f64, t in 0.5..4.0f64) {
        let sys = wagon(m, mu, nu);
        let jet = wagon_jet(m, nu, v, a, t);
        let r = el_residual(&sys, &jet).unwrap();
        let basis = variation_basis(&sys, &jet.q, &jet.qdot);
        prop_assert_eq!(basis.dim(), 1);
        let b = basis.columns.column(0);
        let coefficient = b.dot(&r) / b[0];
        prop_assert!((coefficient - (m * a + mu * v)).abs() <= 1e-8 * (1.0 + coefficient.abs()), "{coefficient}");
    }

    /// Mixing the constraint rows by an invertible matrix changes the
    /// multipliers but not the force they represent.
    #[test]
    fn constraint_force_independent_of_row_basis(
        v in 0.1..3.0f64, t in 0.5..4.0f64,
        entries in prop::collection::vec(-2.0..2.0f64, 9),
    ) {
        let (m, mu, nu) = (1.3, 0.7, 1.9);
        let mix = DMatrix::from_row_slice(3, 3, &entries) + DMatrix::identity(3, 3) * 5.0;
        prop_assume!(mix.determinant().abs() > 1.0);
        let sys = wagon(m, mu, nu);
        let mixed = with_rows(&sys, mix.clone());
        let jet = wagon_jet(m, nu, v, -mu * v / m, t);
        let lambda = constraint_force(&sys, &jet).unwrap();
        let lambda_mixed = constraint_force(&mixed, &jet).unwrap();
        let force = sys.variational_matrix(&jet.q, &jet.qdot).transpose() * &lambda;
        let force_mixed = mixed.variational_matrix(&jet.q, &jet.qdot).transpose() * &lambda_mixed;
        prop_assert!((&force - &force_mixed).norm() <= 1e-8 * (1.0 + force.norm()));
        let predicted = mix.transpose().try_inverse().unwrap() * &lambda;
        prop_assert!((predicted - lambda_mixed).norm() <= 1e-8 * (1.0 + lambda.norm()));
    }
}

#[test]
fn holonomic_pendulum_conserves_energy() {
    let g = 9.81;
    let sys = holonomic_embed(
        2,
        move |q, v| 0.5 * (v[0] * v[0] + v[1] * v[1]) - g * q[1],
        |q| vec![q[0] * q[0] + q[1] * q[1] - 1.0],
        &[1.0, 0.0],
    )
    .unwrap();
    let ode = ideal_ode(Arc::new(sys), &["x", "y"]);
    let th: f64 = 0.8;
    let w = 0.5;
    let initial = [th.sin(), -th.cos(), w * th.cos(), w * th.sin()];
    let traj = integrate(&ode, &initial, &IntegratorConfig::rk4(1e-3, 3.0)).unwrap();
    let energy = |s: &[f64]| 0.5 * (s[2] * s[2] + s[3] * s[3]) + g * s[1];
    let e0 = energy(&initial);
    for s in &traj.states {
        assert!((energy(s) - e0).abs() <= 1e-6 * e0.abs(), "{} vs {e0}", energy(s));
        assert!((s[0] * s[0] + s[1] * s[1] - 1.0).abs() <= 1e-6);
    }
}

#[test]
fn adiabatic_piston_on_its_submanifold() {
    let cfg = PistonConfig {
        x0: 1.2,
        v0: 0.1,
        ..PistonConfig::default()
    };
    let PistonConfig { m, g, area, gas, .. } = cfg;
    let scenario = build_piston_adiabatic(&cfg).unwrap();
    let s0 = gas_state(&gas, cfg.t_init, area * cfg.x0).unwrap().s;
    // q = (x, P, T, V, S, U)
    let constraints = move |q: &[f64]| {
        vec![
            q[1] * q[3] - gas.n0r * q[2],
            q[5] - gas.alpha * gas.n0r * q[2],
            q[3] - area * q[0],
            q[4] - gas.entropy(q[2], q[3]),
            q[4] - s0,
        ]
    };
    let q0 = scenario.reconstruct(&scenario.initial).unwrap();
    let sys = holonomic_embed(6, move |q, v| 0.5 * m * v[0] * v[0] - m * g * q[0] - q[5], constraints, &q0).unwrap();
    let ode = ideal_ode(Arc::new(sys), &["x", "P", "T", "V", "S", "U"]);

    let h = 1e-6;
    let up = scenario.reconstruct(&[cfg.x0 + h, cfg.v0]).unwrap();
    let dn = scenario.reconstruct(&[cfg.x0 - h, cfg.v0]).unwrap();
    let mut initial = q0.clone();
    initial.extend(up.iter().zip(&dn).map(|(a, b)| (a - b) / (2.0 * h) * cfg.v0));

    let rk = IntegratorConfig::rk4(1e-3, 2.0);
    let embedded = integrate(&ode, &initial, &rk).unwrap();
    let reduced = integrate(&scenario.ode, &scenario.initial, &rk).unwrap();
    let energy = |s: &[f64]| 0.5 * m * s[6] * s[6] + m * g * s[0] + s[5];
    let e0 = energy(&initial);
    for (a, b) in embedded.states.iter().zip(&reduced.states) {
        assert!((energy(a) - e0).abs() <= 1e-6 * e0);
        assert!((a[0] - b[0]).abs() <= 1e-6, "{} vs {}", a[0], b[0]);
    }
}
