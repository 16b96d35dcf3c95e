//! Ideal gas and constant-heat-capacity body.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FundamentalEquation;

fn positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {value}")))
    }
}

fn positive_temperature(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveTemperature(t))
    }
}

fn positive_domain(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {value}")))
    }
}

/// Ideal gas with fused amount-gas-constant product `n0r = N0 R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdealGasParams {
    pub n0r: f64,
    pub alpha: f64,
    #[serde(default)]
    pub s0: f64,
    #[serde(default = "one")]
    pub t0: f64,
    #[serde(default = "one")]
    pub v0: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for IdealGasParams {
    /// Monatomic gas with unit reference constants.
    fn default() -> Self {
        Self {
            n0r: 1.0,
            alpha: 1.5,
            s0: 0.0,
            t0: 1.0,
            v0: 1.0,
        }
    }
}

impl IdealGasParams {
    pub fn validate(&self) -> Result<()> {
        positive("n0r", self.n0r)?;
        positive("alpha", self.alpha)?;
        positive("t0", self.t0)?;
        positive("v0", self.v0)?;
        if !self.s0.is_finite() {
            return Err(Error::InvalidConfig("s0 must be finite".into()));
        }
        Ok(())
    }

    /// Adiabatic exponent `(alpha + 1) / alpha`.
    pub fn gamma(&self) -> f64 {
        (self.alpha + 1.0) / self.alpha
    }

    /// Reference energy `u0 = n0r alpha t0` of the fundamental equation.
    pub fn u0(&self) -> f64 {
        self.n0r * self.alpha * self.t0
    }

    /// Entropy at `(T, V)`.
    pub fn entropy(&self, t: f64, v: f64) -> f64 {
        self.s0 + self.n0r * (self.alpha * (t / self.t0).ln() + (v / self.v0).ln())
    }

    /// Fundamental equation `U = Phi(V; S)` at the reference amount,
    /// with analytic gradient `(dU/dV, dU/dS) = (-P, T)`.
    pub fn fundamental_equation(&self) -> FundamentalEquation {
        let p = *self;
        let phi = move |y: &[f64], s: f64| gas_fundamental_unchecked(&p, 1.0, s, y[0]);
        let grad = move |y: &[f64], s: f64| {
            let u = gas_fundamental_unchecked(&p, 1.0, s, y[0]);
            (vec![-u / (p.alpha * y[0])], u / (p.alpha * p.n0r))
        };
        FundamentalEquation::new(1, phi).with_gradient(grad).with_domain(|y, _| y[0] > 0.0)
    }
}

/// Constant-heat-capacity body (`U = nu T`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyParams {
    pub nu: f64,
    #[serde(default = "one")]
    pub t0: f64,
    #[serde(default)]
    pub s0: f64,
}

impl Default for BodyParams {
    fn default() -> Self {
        Self { nu: 1.0, t0: 1.0, s0: 0.0 }
    }
}

impl BodyParams {
    pub fn validate(&self) -> Result<()> {
        positive("nu", self.nu)?;
        positive("t0", self.t0)?;
        if !self.s0.is_finite() {
            return Err(Error::InvalidConfig("s0 must be finite".into()));
        }
        Ok(())
    }

    pub fn entropy(&self, t: f64) -> f64 {
        self.s0 + self.nu * (t / self.t0).ln()
    }

    /// `U = Phi(S) = nu t0 exp((S - s0) / nu)`.
    pub fn fundamental_equation(&self) -> FundamentalEquation {
        let b = *self;
        let phi = move |_: &[f64], s: f64| b.nu * b.t0 * ((s - b.s0) / b.nu).exp();
        let grad = move |_: &[f64], s: f64| (Vec::new(), b.t0 * ((s - b.s0) / b.nu).exp());
        FundamentalEquation::new(0, phi).with_gradient(grad)
    }
}

/// Pressure, energy and entropy of a gas state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasState {
    pub p: f64,
    pub u: f64,
    pub s: f64,
}

/// `(P, U, S)` at temperature `t` and volume `v`.
pub fn gas_state(p: &IdealGasParams, t: f64, v: f64) -> Result<GasState> {
    positive_temperature(t)?;
    positive_domain("volume", v)?;
    Ok(GasState {
        p: p.n0r * t / v,
        u: p.alpha * p.n0r * t,
        s: p.entropy(t, v),
    })
}

/// Inverts the state equations: `(T, V)` from pressure and energy.
pub fn gas_temperature_volume(p: &IdealGasParams, pressure: f64, energy: f64) -> Result<(f64, f64)> {
    positive_domain("pressure", pressure)?;
    let t = energy / (p.alpha * p.n0r);
    positive_temperature(t)?;
    Ok((t, p.n0r * t / pressure))
}

/// Temperature on the isentrope through `s` at volume `v`.
pub fn gas_temperature_on_isentrope(p: &IdealGasParams, s: f64, v: f64) -> Result<f64> {
    positive_domain("volume", v)?;
    Ok(p.t0 * (((s - p.s0) / p.n0r - (v / p.v0).ln()) / p.alpha).exp())
}

/// Adiabat constant `k = P V^gamma`.
pub fn gas_adiabat_constant(p: &IdealGasParams, pressure: f64, v: f64) -> Result<f64> {
    positive_domain("pressure", pressure)?;
    positive_domain("volume", v)?;
    Ok(pressure * v.powf(p.gamma()))
}

/// `(U, S)` of a body at temperature `t`.
pub fn body_state(b: &BodyParams, t: f64) -> Result<(f64, f64)> {
    positive_temperature(t)?;
    Ok((b.nu * t, b.entropy(t)))
}

/// Internal energy `U(N, S, V)` with `N` measured in units of the reference
/// amount (so `N R` is `N n0r`).
pub fn gas_fundamental(p: &IdealGasParams, n: f64, s: f64, v: f64) -> Result<f64> {
    positive_domain("mole number", n)?;
    positive_domain("volume", v)?;
    Ok(gas_fundamental_unchecked(p, n, s, v))
}

fn gas_fundamental_unchecked(p: &IdealGasParams, n: f64, s: f64, v: f64) -> f64 {
    let nr = n * p.n0r;
    let inner = (n * p.v0 / v) * ((s - n * p.s0) / nr).exp();
    n * p.u0() * inner.powf(1.0 / p.alpha)
}

/// Chemical potential `mu = U/N (1 + (1 - S/(N R)) / alpha)`.
pub fn gas_chemical_potential(p: &IdealGasParams, n: f64, s: f64, u: f64) -> Result<f64> {
    positive_domain("mole number", n)?;
    Ok(u / n * (1.0 + (1.0 - s / (n * p.n0r)) / p.alpha))
}
