//! Builders for the six thermo-mechanical example systems.
//!
//! Each builder returns a [`Scenario`]: the SOCS description, an explicit
//! reduced ODE used for integration, a map from reduced states to the full
//! configuration `q` (mechanical coordinates followed by chart coordinates),
//! and the initial reduced state.

mod dissipative;
mod piston;
mod wagon;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::socs::{ideal_acceleration, SOCSystem};
use crate::thermo::{BodyParams, IdealGasParams};

pub use dissipative::{build_dissipative_piston, build_dissipative_piston_bath, dissipative_energy};
pub use piston::{adiabat_constant_for, build_piston_adiabatic, build_piston_isothermal};
pub use wagon::{build_wagon_adiabatic, build_wagon_bath};

type RhsFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;
type GuardFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// A predicate that must hold along the whole integration.
#[derive(Clone)]
pub struct Guard {
    pub name: String,
    predicate: GuardFn,
}

impl Guard {
    pub fn new<F>(name: impl Into<String>, predicate: F) -> Self
    where
        F: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            predicate: Arc::new(predicate),
        }
    }

    /// `state[index] > 0`.
    pub fn positive(name: impl Into<String>, index: usize) -> Self {
        Self::new(name, move |s| s[index] > 0.0)
    }

    pub fn holds(&self, state: &[f64]) -> bool {
        (self.predicate)(state)
    }
}

/// Explicit first-order system `s' = f(t, s)`.
#[derive(Clone)]
pub struct ReducedODE {
    pub dim: usize,
    rhs: RhsFn,
    pub state_names: Vec<String>,
    pub guards: Vec<Guard>,
    /// Components that flip sign under time reversal.
    pub velocity_indices: Vec<usize>,
}

impl fmt::Debug for ReducedODE {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReducedODE")
            .field("state_names", &self.state_names)
            .field("velocity_indices", &self.velocity_indices)
            .finish()
    }
}

impl ReducedODE {
    pub fn new<F>(state_names: &[&str], rhs: F) -> Self
    where
        F: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            dim: state_names.len(),
            rhs: Arc::new(rhs),
            state_names: state_names.iter().map(|s| s.to_string()).collect(),
            guards: Vec::new(),
            velocity_indices: Vec::new(),
        }
    }

    pub fn with_guard(mut self, guard: Guard) -> Self {
        self.guards.push(guard);
        self
    }

    pub fn with_velocities(mut self, indices: Vec<usize>) -> Self {
        self.velocity_indices = indices;
        self
    }

    pub fn eval_into(&self, t: f64, state: &[f64], out: &mut [f64]) {
        (self.rhs)(t, state, out)
    }

    pub fn eval(&self, t: f64, state: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, state, &mut out);
        out
    }

    /// First violated guard, if any.
    pub fn check_guards(&self, t: f64, state: &[f64]) -> Result<()> {
        if state.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: state.len(),
            });
        }
        for g in &self.guards {
            if !g.holds(state) {
                return Err(Error::GuardViolation {
                    guard: g.name.clone(),
                    t,
                    state: state.to_vec(),
                });
            }
        }
        Ok(())
    }
}

pub type Reconstruction = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;

/// The six named systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    WagonAdiabatic,
    WagonBath,
    PistonAdiabatic,
    PistonIsothermal,
    PistonDissipative,
    PistonDissipativeBath,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::WagonAdiabatic,
        ScenarioKind::WagonBath,
        ScenarioKind::PistonAdiabatic,
        ScenarioKind::PistonIsothermal,
        ScenarioKind::PistonDissipative,
        ScenarioKind::PistonDissipativeBath,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::WagonAdiabatic => "wagon-adiabatic",
            ScenarioKind::WagonBath => "wagon-bath",
            ScenarioKind::PistonAdiabatic => "piston-adiabatic",
            ScenarioKind::PistonIsothermal => "piston-isothermal",
            ScenarioKind::PistonDissipative => "piston-dissipative",
            ScenarioKind::PistonDissipativeBath => "piston-dissipative-bath",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scenario `{s}`")))
    }
}

/// A built system ready for integration and auditing.
#[derive(Clone)]
pub struct Scenario {
    pub kind: Option<ScenarioKind>,
    pub system: SOCSystem,
    pub ode: ReducedODE,
    pub reconstruction: Reconstruction,
    pub initial: Vec<f64>,
    /// Names of the configuration coordinates, in order.
    pub observable_names: Vec<String>,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("kind", &self.kind)
            .field("ode", &self.ode)
            .field("initial", &self.initial)
            .field("observable_names", &self.observable_names)
            .finish()
    }
}

impl Scenario {
    pub fn reconstruct(&self, state: &[f64]) -> Result<Vec<f64>> {
        (self.reconstruction)(state)
    }
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be positive, got {value}")))
    }
}

fn non_negative(name: &str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be non-negative, got {value}")))
    }
}

fn finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be finite, got {value}")))
    }
}

/// Wagon with internal friction carrying a body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WagonConfig {
    pub m: f64,
    pub mu: f64,
    pub body: BodyParams,
    pub x0: f64,
    pub v0: f64,
    pub t_init: f64,
}

impl Default for WagonConfig {
    fn default() -> Self {
        Self {
            m: 1.0,
            mu: 1.0,
            body: BodyParams::default(),
            x0: 0.0,
            v0: 1.0,
            t_init: 1.0,
        }
    }
}

impl WagonConfig {
    pub fn validate(&self) -> Result<()> {
        positive("m", self.m)?;
        positive("mu", self.mu)?;
        self.body.validate()?;
        finite("x0", self.x0)?;
        finite("v0", self.v0)?;
        positive("t_init", self.t_init)
    }
}

/// Wagon exchanging heat with a bath at `t_bath` (Newton cooling, `kappa`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WagonBathConfig {
    pub wagon: WagonConfig,
    pub kappa: f64,
    pub t_bath: f64,
}

impl WagonBathConfig {
    pub fn validate(&self) -> Result<()> {
        self.wagon.validate()?;
        non_negative("kappa", self.kappa)?;
        positive("t_bath", self.t_bath)
    }
}

/// Vertical piston closing an ideal gas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PistonConfig {
    pub m: f64,
    pub g: f64,
    pub area: f64,
    pub gas: IdealGasParams,
    pub x0: f64,
    pub v0: f64,
    /// Initial gas temperature (constant in the isothermal variant).
    pub t_init: f64,
}

impl Default for PistonConfig {
    /// Unit parameters: `k = 1` and equilibrium at `x = 1`.
    fn default() -> Self {
        Self {
            m: 1.0,
            g: 1.0,
            area: 1.0,
            gas: IdealGasParams::default(),
            x0: 1.0,
            v0: 0.0,
            t_init: 1.0,
        }
    }
}

impl PistonConfig {
    pub fn validate(&self) -> Result<()> {
        positive("m", self.m)?;
        positive("g", self.g)?;
        positive("area", self.area)?;
        self.gas.validate()?;
        positive("x0", self.x0)?;
        finite("v0", self.v0)?;
        positive("t_init", self.t_init)
    }
}

/// Thermodynamic potential entering the isothermal piston's Lagrangian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialChoice {
    #[default]
    InternalEnergy,
    Helmholtz,
}

/// Heat-exchange area `a0 + a1 x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaModel {
    pub a0: f64,
    pub a1: f64,
}

impl Default for AreaModel {
    fn default() -> Self {
        Self { a0: 1.0, a1: 0.0 }
    }
}

impl AreaModel {
    pub fn at(&self, x: f64) -> f64 {
        self.a0 + self.a1 * x
    }

    pub fn validate(&self) -> Result<()> {
        positive("a0", self.a0)?;
        non_negative("a1", self.a1)
    }
}

/// Piston with friction whose heat is absorbed by a container body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipativeConfig {
    pub m: f64,
    pub g: f64,
    pub area: f64,
    pub gas: IdealGasParams,
    pub body: BodyParams,
    pub mu: f64,
    /// Gas-container conduction coefficient.
    pub kappa: f64,
    /// Gas-container contact area model.
    pub area_model: AreaModel,
    pub x0: f64,
    pub v0: f64,
    pub t_gas0: f64,
    pub t_c0: f64,
}

impl Default for DissipativeConfig {
    /// Reference long-run parameters (`E = 182.5`).
    fn default() -> Self {
        Self {
            m: 1.0,
            g: 9.0,
            area: 1.0,
            gas: IdealGasParams::default(),
            body: BodyParams {
                nu: 0.5,
                ..BodyParams::default()
            },
            mu: 0.8,
            kappa: 0.2,
            area_model: AreaModel::default(),
            x0: 15.0,
            v0: 0.0,
            t_gas0: 25.0,
            t_c0: 20.0,
        }
    }
}

impl DissipativeConfig {
    pub fn validate(&self) -> Result<()> {
        positive("m", self.m)?;
        positive("g", self.g)?;
        positive("area", self.area)?;
        self.gas.validate()?;
        self.body.validate()?;
        positive("mu", self.mu)?;
        non_negative("kappa", self.kappa)?;
        self.area_model.validate()?;
        positive("x0", self.x0)?;
        finite("v0", self.v0)?;
        positive("t_gas0", self.t_gas0)?;
        positive("t_c0", self.t_c0)
    }
}

/// Dissipative piston whose container exchanges heat with a bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipativeBathConfig {
    pub piston: DissipativeConfig,
    pub kappa_e: f64,
    pub area_e: f64,
    pub t_bath: f64,
}

impl DissipativeBathConfig {
    pub fn validate(&self) -> Result<()> {
        self.piston.validate()?;
        non_negative("kappa_e", self.kappa_e)?;
        positive("area_e", self.area_e)?;
        positive("t_bath", self.t_bath)
    }
}

/// Configuration of any of the six systems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "kebab-case")]
pub enum ScenarioConfig {
    WagonAdiabatic(WagonConfig),
    WagonBath(WagonBathConfig),
    PistonAdiabatic(PistonConfig),
    PistonIsothermal { piston: PistonConfig, potential: PotentialChoice },
    PistonDissipative(DissipativeConfig),
    PistonDissipativeBath(DissipativeBathConfig),
}

impl ScenarioConfig {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            ScenarioConfig::WagonAdiabatic(_) => ScenarioKind::WagonAdiabatic,
            ScenarioConfig::WagonBath(_) => ScenarioKind::WagonBath,
            ScenarioConfig::PistonAdiabatic(_) => ScenarioKind::PistonAdiabatic,
            ScenarioConfig::PistonIsothermal { .. } => ScenarioKind::PistonIsothermal,
            ScenarioConfig::PistonDissipative(_) => ScenarioKind::PistonDissipative,
            ScenarioConfig::PistonDissipativeBath(_) => ScenarioKind::PistonDissipativeBath,
        }
    }

    pub fn build(&self) -> Result<Scenario> {
        match self {
            ScenarioConfig::WagonAdiabatic(c) => build_wagon_adiabatic(c),
            ScenarioConfig::WagonBath(c) => build_wagon_bath(c),
            ScenarioConfig::PistonAdiabatic(c) => build_piston_adiabatic(c),
            ScenarioConfig::PistonIsothermal { piston, potential } => build_piston_isothermal(piston, *potential),
            ScenarioConfig::PistonDissipative(c) => build_dissipative_piston(c),
            ScenarioConfig::PistonDissipativeBath(c) => build_dissipative_piston_bath(c),
        }
    }
}

/// Reduced ODE `(q, q')` for a system whose dynamics follow from
/// [`ideal_acceleration`]; failures surface as non-finite derivatives.
pub fn ideal_ode(system: Arc<SOCSystem>, names: &[&str]) -> ReducedODE {
    let n = system.n();
    let mut state_names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    state_names.extend(names.iter().map(|s| format!("{s}_dot")));
    let mut ode = ReducedODE::new(&[], move |_, s, out| {
        let (q, v) = s.split_at(n);
        out[..n].copy_from_slice(v);
        match ideal_acceleration(&system, q, v) {
            Ok(a) => out[n..].copy_from_slice(&a),
            Err(_) => out[n..].iter_mut().for_each(|x| *x = f64::NAN),
        }
    });
    ode.dim = 2 * n;
    ode.state_names = state_names;
    ode.velocity_indices = (n..2 * n).collect();
    ode
}
