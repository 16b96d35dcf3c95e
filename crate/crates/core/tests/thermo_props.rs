use proptest::prelude::*;
use thermomech::thermo::{gas_adiabat_constant, gas_fundamental, gas_state, gas_temperature_on_isentrope, IdealGasParams};

fn params() -> impl Strategy<Value = IdealGasParams> {
    (0.5..3.0f64, 1.0..3.5f64, -1.0..1.0f64, 0.5..2.0f64, 0.5..2.0f64).prop_map(|(n0r, alpha, s0, t0, v0)| IdealGasParams {
        n0r,
        alpha,
        s0,
        t0,
        v0,
    })
}

proptest! {
    /// dU = T dS - P dV along a smooth path in (T, V).
    #[test]
    fn first_law_along_paths(gas in params(), t0 in 0.5..5.0f64, v0 in 0.5..5.0f64, a in -0.3..0.3f64, b in -0.3..0.3f64) {
        let path = |tau: f64| (t0 * (1.0 + a * tau.sin()), v0 * (1.0 + b * (2.0 * tau).cos()));
        let h = 1e-5;
        for i in 0..10 {
            let tau = 0.3 * i as f64;
            let at = |x: f64| {
                let (t, v) = path(x);
                (gas_state(&gas, t, v).unwrap(), t, v)
            };
            let (up, _, vu) = at(tau + h);
            let (dn, _, vd) = at(tau - h);
            let (mid, t, _) = at(tau);
            let du = (up.u - dn.u) / (2.0 * h);
            let ds = (up.s - dn.s) / (2.0 * h);
            let dv = (vu - vd) / (2.0 * h);
            let residual = du - t * ds + mid.p * dv;
            prop_assert!(residual.abs() <= 1e-6 * (1.0 + mid.u), "{residual}");
        }
    }

    /// Isentropic paths keep P V^gamma fixed.
    #[test]
    fn isentrope_is_adiabat(gas in params(), s in -2.0..2.0f64, v1 in 0.2..5.0f64, v2 in 0.2..5.0f64) {
        let k = |v: f64| {
            let t = gas_temperature_on_isentrope(&gas, s, v).unwrap();
            let st = gas_state(&gas, t, v).unwrap();
            prop_assert!((st.s - s).abs() <= 1e-12 * (1.0 + s.abs()));
            Ok(gas_adiabat_constant(&gas, st.p, v).unwrap())
        };
        let (k1, k2) = (k(v1)?, k(v2)?);
        prop_assert!(((k1 - k2) / k1).abs() <= 1e-9);
    }

    /// Conversely a fixed adiabat constant fixes the entropy.
    #[test]
    fn adiabat_is_isentrope(gas in params(), t1 in 0.5..5.0f64, v1 in 0.2..5.0f64, v2 in 0.2..5.0f64) {
        let st1 = gas_state(&gas, t1, v1).unwrap();
        let k = gas_adiabat_constant(&gas, st1.p, v1).unwrap();
        // P2 = k / V2^gamma, T2 = P2 V2 / n0r
        let p2 = k / v2.powf(gas.gamma());
        let st2 = gas_state(&gas, p2 * v2 / gas.n0r, v2).unwrap();
        prop_assert!((st2.s - st1.s).abs() <= 1e-9 * (1.0 + st1.s.abs()));
    }

    /// The fundamental relation U(S, V) inverts the state equations.
    #[test]
    fn fundamental_matches_state_equations(gas in params(), t in 0.3..6.0f64, v in 0.2..6.0f64) {
        let st = gas_state(&gas, t, v).unwrap();
        let u = gas_fundamental(&gas, 1.0, st.s, v).unwrap();
        prop_assert!(((u - st.u) / st.u).abs() <= 1e-9);
    }
}
