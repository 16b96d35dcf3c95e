//! Law monitors over reconstructed trajectories.
//!
//! All derivatives come from the stored jets (grid differences), never from
//! the integrator. Maxima and minima skip the two samples at each end whose
//! stencils are one-sided.

use serde::Serialize;

use super::trajectory::Trajectory;
use crate::exec::{map_range, Execution};
use crate::geometry::contact_form_parts;
use crate::numeric::{centered_indices, grid_derivatives};
use crate::socs::{dalembert_violation, kinematic_residual, SOCSystem};

/// Energy bookkeeping `E(t) - E(0) - int heat`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyAudit {
    pub energy: Vec<f64>,
    pub heat_integral: Vec<f64>,
    pub drift: Vec<f64>,
    pub max_relative_drift: f64,
}

pub fn energy_audit(traj: &Trajectory, sys: &SOCSystem) -> EnergyAudit {
    let energy: Vec<f64> = traj.jets.iter().map(|j| sys.energy(&j.q, &j.qdot)).collect();
    let rates: Vec<f64> = traj.jets.iter().map(|j| sys.heat_rate(&j.q, &j.qdot)).collect();
    let heat_integral = cumulative_integral(&traj.times, &rates);
    let e0 = energy.first().copied().unwrap_or(0.0);
    let drift: Vec<f64> = energy.iter().zip(&heat_integral).map(|(e, q)| e - e0 - q).collect();
    let scale = if e0 != 0.0 { e0.abs() } else { 1.0 };
    let max_relative_drift = centered_indices(drift.len()).map(|i| drift[i].abs() / scale).fold(0.0, f64::max);
    EnergyAudit {
        energy,
        heat_integral,
        drift,
        max_relative_drift,
    }
}

/// Running integral by the trapezoid rule with end corrections
/// `-h^2/12 (f'_{i+1} - f'_i)`, using grid derivatives of the samples.
pub fn cumulative_integral(times: &[f64], values: &[f64]) -> Vec<f64> {
    let series: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
    let (slopes, _) = grid_derivatives(times, &series);
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for i in 0..values.len() {
        if i > 0 {
            let h = times[i] - times[i - 1];
            acc += 0.5 * h * (values[i] + values[i - 1]) - h * h / 12.0 * (slopes[i][0] - slopes[i - 1][0]);
        }
        out.push(acc);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accepted,
    Rejected,
}

/// Second-Law margins `S_total' - heat / T` at interior samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondLawAudit {
    pub times: Vec<f64>,
    pub margins: Vec<f64>,
    pub min_margin: f64,
    pub verdict: Verdict,
}

/// Trajectories of systems without a Second-Law policy are accepted with an
/// empty margin series.
pub fn second_law_audit(traj: &Trajectory, sys: &SOCSystem) -> SecondLawAudit {
    let Some(policy) = sys.second_law() else {
        return SecondLawAudit {
            times: Vec::new(),
            margins: Vec::new(),
            min_margin: f64::INFINITY,
            verdict: Verdict::Accepted,
        };
    };
    let mut times = Vec::new();
    let mut margins = Vec::new();
    for i in centered_indices(traj.len()) {
        let jet = &traj.jets[i];
        let s_dot: f64 = policy.entropy_indices.iter().map(|&k| jet.qdot[k]).sum();
        let heat = sys.heat_rate(&jet.q, &jet.qdot);
        times.push(traj.times[i]);
        margins.push(s_dot - heat / jet.q[policy.temperature_index]);
    }
    let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let verdict = if min_margin < -policy.tolerance {
        Verdict::Rejected
    } else {
        Verdict::Accepted
    };
    SecondLawAudit {
        times,
        margins,
        min_margin,
        verdict,
    }
}

/// Largest kinematic residual and D'Alembert violation over interior samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocsAudit {
    pub kinematic_max: f64,
    pub dalembert_max: f64,
}

pub fn socs_audit(traj: &Trajectory, sys: &SOCSystem, exec: Execution) -> SocsAudit {
    let range = centered_indices(traj.len());
    let start = range.start;
    let per_sample = map_range(exec, range.len(), |k| {
        let jet = &traj.jets[start + k];
        let w = kinematic_residual(sys, jet)
            .map(|w| w.iter().map(|x| x.abs()).fold(0.0, f64::max))
            .unwrap_or(f64::INFINITY);
        let d = dalembert_violation(sys, jet).unwrap_or(f64::INFINITY);
        (w, d)
    });
    // NaN residuals count as failures.
    let worst = |a: f64, b: f64| if b.is_nan() || a.is_nan() { f64::INFINITY } else { a.max(b) };
    per_sample.into_iter().fold(
        SocsAudit {
            kinematic_max: 0.0,
            dalembert_max: 0.0,
        },
        |acc, (w, d)| SocsAudit {
            kinematic_max: worst(acc.kinematic_max, w),
            dalembert_max: worst(acc.dalembert_max, d),
        },
    )
}

/// Largest `|theta(gamma')|` of the thermodynamic part of the curve; zero
/// while the curve stays on a Legendre submanifold.
pub fn legendre_residual(traj: &Trajectory, sys: &SOCSystem) -> Option<f64> {
    let chart = sys.chart()?;
    let m = sys.mech_dim();
    let mut worst = 0.0_f64;
    for i in centered_indices(traj.len()) {
        let jet = &traj.jets[i];
        let value = contact_form_parts(chart, &jet.q[m..], &jet.qdot[m..]).ok()?;
        worst = worst.max(value.abs());
    }
    Some(worst)
}

/// Smallest sample-to-sample increment of `series` (positive when strictly
/// increasing).
pub fn min_increment(series: &[f64]) -> f64 {
    series.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Total entropy `sum_k S_k` at every sample.
pub fn total_entropy(traj: &Trajectory, sys: &SOCSystem) -> Vec<f64> {
    let Some(policy) = sys.second_law() else {
        return Vec::new();
    };
    traj.full_states
        .iter()
        .map(|q| policy.entropy_indices.iter().map(|&k| q[k]).sum())
        .collect()
}

/// Summary of all monitors for one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub energy_drift: f64,
    pub entropy_margin_min: f64,
    pub constraint_residual_max: f64,
    pub dalembert_violation_max: f64,
    pub legendre_residual_max: Option<f64>,
    pub second_law_verdict: Verdict,
    pub reversibility_error: Option<f64>,
}

pub fn audit(traj: &Trajectory, sys: &SOCSystem, exec: Execution) -> SimulationReport {
    let energy = energy_audit(traj, sys);
    let second = second_law_audit(traj, sys);
    let socs = socs_audit(traj, sys, exec);
    SimulationReport {
        energy_drift: energy.max_relative_drift,
        entropy_margin_min: second.min_margin,
        constraint_residual_max: socs.kinematic_max,
        dalembert_violation_max: socs.dalembert_max,
        legendre_residual_max: legendre_residual(traj, sys),
        second_law_verdict: second.verdict,
        reversibility_error: None,
    }
}
