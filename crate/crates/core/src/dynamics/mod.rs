//! Time integration of reduced ODEs, observable reconstruction and audits.

mod audit;
mod integrate;
mod trajectory;

pub use audit::{
    audit, cumulative_integral, energy_audit, legendre_residual, min_increment, second_law_audit, socs_audit, total_entropy, EnergyAudit,
    SecondLawAudit, SimulationReport, SocsAudit, Verdict,
};
pub use integrate::{integrate, reversibility_check, IntegratorConfig, Method};
pub use trajectory::{lift_jets, reconstruct, simulate, simulate_many, Trajectory};
