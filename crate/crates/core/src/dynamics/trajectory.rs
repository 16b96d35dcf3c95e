use crate::error::{Error, Result};
use crate::exec::{map_slice, Execution};
use crate::numeric::grid_derivatives;
use crate::scenarios::{Reconstruction, Scenario};
use crate::socs::Jet2;

use super::integrate::{integrate, IntegratorConfig};

/// Time samples of a reduced state together with the reconstructed
/// configuration and its second-order jets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub full_states: Vec<Vec<f64>>,
    pub jets: Vec<Jet2>,
    pub state_names: Vec<String>,
    pub observable_names: Vec<String>,
}

impl Trajectory {
    pub fn from_states(times: Vec<f64>, states: Vec<Vec<f64>>, state_names: Vec<String>) -> Self {
        Self {
            times,
            states,
            state_names,
            ..Self::default()
        }
    }

    /// A trajectory given directly in configuration coordinates (oracle
    /// curves, files, synthetic data); jets are lifted by grid differences.
    pub fn from_configurations(times: Vec<f64>, full_states: Vec<Vec<f64>>, observable_names: Vec<String>) -> Result<Self> {
        if times.len() != full_states.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: full_states.len(),
            });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("sample times must be strictly increasing".into()));
        }
        let jets = lift_jets(&times, &full_states);
        Ok(Self {
            times,
            states: Vec::new(),
            full_states,
            jets,
            state_names: Vec::new(),
            observable_names,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map_or(&[], Vec::as_slice)
    }

    /// Samples of a named reduced-state or observable column.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        if let Some(i) = self.observable_names.iter().position(|n| n == name) {
            return Some(self.full_states.iter().map(|q| q[i]).collect());
        }
        let i = self.state_names.iter().position(|n| n == name)?;
        Some(self.states.iter().map(|s| s[i]).collect())
    }

    /// Same samples on the time grid `c t`.
    pub fn time_rescaled(&self, c: f64) -> Result<Self> {
        let times = self.times.iter().map(|t| c * t).collect();
        Self::from_configurations(times, self.full_states.clone(), self.observable_names.clone())
    }
}

/// Jets `(q, q', q'')` from five-node grid differences of the samples.
pub fn lift_jets(times: &[f64], full_states: &[Vec<f64>]) -> Vec<Jet2> {
    let (d1, d2) = grid_derivatives(times, full_states);
    full_states
        .iter()
        .zip(d1)
        .zip(d2)
        .map(|((q, v), a)| Jet2 {
            q: q.clone(),
            qdot: v,
            qddot: a,
        })
        .collect()
}

/// Fills `full_states` and `jets` through the reconstruction map.
pub fn reconstruct(mut traj: Trajectory, map: &Reconstruction) -> Result<Trajectory> {
    traj.full_states = traj.states.iter().map(|s| map(s)).collect::<Result<Vec<_>>>()?;
    traj.jets = lift_jets(&traj.times, &traj.full_states);
    Ok(traj)
}

/// Integrates a scenario and reconstructs its observables.
pub fn simulate(scenario: &Scenario, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let traj = integrate(&scenario.ode, &scenario.initial, cfg)?;
    let mut traj = reconstruct(traj, &scenario.reconstruction)?;
    traj.observable_names = scenario.observable_names.clone();
    Ok(traj)
}

/// Runs independent scenarios, concurrently under `Execution::Parallel`.
pub fn simulate_many(scenarios: &[Scenario], cfg: &IntegratorConfig, exec: Execution) -> Vec<Result<Trajectory>> {
    map_slice(exec, scenarios, |sc| simulate(sc, cfg))
}
