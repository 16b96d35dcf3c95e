//! The `simulate`, `verify` and `report` commands.

use std::io::Write;
use std::path::{Path, PathBuf};

use thermomech::dynamics::{audit, reversibility_check, simulate, total_entropy, IntegratorConfig, SimulationReport, Trajectory, Verdict};
use thermomech::exec::{map_slice, Execution};
use thermomech::oracles::{piston_equilibrium, piston_hamiltonian, piston_phase_grid, wagon_adiabatic_curve, wagon_bath_curve, BathWagon};
use thermomech::scenarios::{PistonConfig, Scenario, ScenarioConfig, ScenarioKind};

use crate::config::{load_optional, load_table, override_key, scenario_from_table};
use crate::csv_io::{fmt_f64, read_trajectory, write_report, write_table, write_trajectory};
use crate::error::{build_error, run_error, CliError, CliResult};

/// Default bound on audit residuals; `THERMOMECH_TOL` overrides it.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const TOLERANCE_ENV: &str = "THERMOMECH_TOL";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const REPORT_FILE: &str = "report.csv";

/// Which optional checks `verify` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditToggles {
    pub oracle: bool,
    pub reversibility: bool,
}

impl Default for AuditToggles {
    fn default() -> Self {
        Self {
            oracle: true,
            reversibility: true,
        }
    }
}

/// Everything a command needs besides its own flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub scenario: ScenarioKind,
    pub config_path: PathBuf,
    pub integrator: IntegratorConfig,
    pub out_dir: PathBuf,
    pub audits: AuditToggles,
    pub tolerance: f64,
    pub exec: Execution,
}

impl RunManifest {
    pub fn scenario_config(&self) -> CliResult<ScenarioConfig> {
        scenario_from_table(self.scenario, load_table(&self.config_path, self.scenario)?)
    }
}

/// Parses the audit tolerance from the environment value, if any.
pub fn tolerance_from(value: Option<&str>) -> CliResult<f64> {
    match value {
        None => Ok(DEFAULT_TOLERANCE),
        Some(raw) => match raw.trim().parse::<f64>() {
            Ok(t) if t > 0.0 && t.is_finite() => Ok(t),
            _ => Err(CliError::Config(format!("{TOLERANCE_ENV} must be a positive number, got `{raw}`"))),
        },
    }
}

/// `key=v1,v2,...`: one run per value of a numeric table entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<f64>,
}

impl std::str::FromStr for Sweep {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let bad = || CliError::Config(format!("sweep must look like key=v1,v2, got `{s}`"));
        let (key, list) = s.split_once('=').ok_or_else(bad)?;
        let key = key.trim();
        if key.is_empty() {
            return Err(bad());
        }
        let values = list
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<CliResult<Vec<_>>>()?;
        Ok(Sweep {
            key: key.to_owned(),
            values,
        })
    }
}

fn create_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(CliError::io(path))
}

fn run_scenario(cfg: &ScenarioConfig, integrator: &IntegratorConfig) -> CliResult<(Scenario, Trajectory)> {
    integrator.validate().map_err(run_error)?;
    let sc = cfg.build().map_err(build_error)?;
    let traj = simulate(&sc, integrator).map_err(run_error)?;
    Ok((sc, traj))
}

fn simulate_one(cfg: &ScenarioConfig, m: &RunManifest, out_dir: &Path) -> CliResult<SimulationReport> {
    let (sc, traj) = run_scenario(cfg, &m.integrator)?;
    let mut report = audit(&traj, &sc.system, m.exec);
    if cfg.kind() == ScenarioKind::PistonIsothermal {
        report.reversibility_error = Some(reversibility_check(&sc.ode, &sc.initial, m.integrator.t_end, &m.integrator).map_err(run_error)?);
    }
    create_dir(out_dir)?;
    write_trajectory(&out_dir.join(TRAJECTORY_FILE), &traj)?;
    write_report(&out_dir.join(REPORT_FILE), &report)?;
    Ok(report)
}

fn summary_line(label: &str, r: &SimulationReport) -> String {
    let verdict = match r.second_law_verdict {
        Verdict::Accepted => "accepted",
        Verdict::Rejected => "rejected",
    };
    format!(
        "{label}: energy_drift={} constraint_residual_max={} dalembert_violation_max={} entropy_margin_min={} second_law={verdict}",
        fmt_f64(r.energy_drift),
        fmt_f64(r.constraint_residual_max),
        fmt_f64(r.dalembert_violation_max),
        fmt_f64(r.entropy_margin_min),
    )
}

/// Integrates, audits, and writes `trajectory.csv` and `report.csv`. With a
/// sweep, each value gets its own subdirectory `key=value` and the runs are
/// executed under `m.exec`; the first failing run in sweep order decides the
/// error.
pub fn cmd_simulate(m: &RunManifest, sweep: Option<&Sweep>, out: &mut dyn Write) -> CliResult<()> {
    let table = load_table(&m.config_path, m.scenario)?;
    let runs: Vec<(String, PathBuf, ScenarioConfig)> = match sweep {
        None => vec![(
            m.scenario.name().to_owned(),
            m.out_dir.clone(),
            scenario_from_table(m.scenario, table)?,
        )],
        Some(s) => {
            if s.values.is_empty() {
                return Err(CliError::Config("sweep needs at least one value".into()));
            }
            s.values
                .iter()
                .map(|&v| {
                    let label = format!("{}={v}", s.key);
                    let cfg = scenario_from_table(m.scenario, override_key(&table, &s.key, v)?)?;
                    Ok((label.clone(), m.out_dir.join(label), cfg))
                })
                .collect::<CliResult<Vec<_>>>()?
        }
    };
    let results = map_slice(m.exec, &runs, |(_, dir, cfg)| simulate_one(cfg, m, dir));
    let write_err = |e: std::io::Error| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    let mut first_failure = None;
    for ((label, _, _), result) in runs.iter().zip(results) {
        match result {
            Ok(report) => {
                writeln!(out, "{}", summary_line(label, &report)).map_err(write_err)?;
                if report.second_law_verdict == Verdict::Rejected && first_failure.is_none() {
                    first_failure = Some(CliError::SecondLaw(report.entropy_margin_min));
                }
            }
            Err(e) => {
                writeln!(out, "{label}: {e}").map_err(write_err)?;
                first_failure.get_or_insert(e);
            }
        }
    }
    first_failure.map_or(Ok(()), Err)
}

/// One line of the verification table.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `value <= threshold` when true, `value >= threshold` otherwise.
    pub upper: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_owned(),
            value,
            threshold,
            upper: true,
        }
    }

    fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_owned(),
            value,
            threshold,
            upper: false,
        }
    }

    pub fn passed(&self) -> bool {
        if self.upper {
            self.value <= self.threshold
        } else {
            self.value >= self.threshold
        }
    }
}

/// Largest `|a - b| / max(1, |b|)` over paired samples.
fn max_scaled_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let e = (x - y).abs() / y.abs().max(1.0);
            if e.is_nan() {
                f64::INFINITY
            } else {
                e
            }
        })
        .fold(0.0, f64::max)
}

fn column(traj: &Trajectory, name: &str) -> CliResult<Vec<f64>> {
    traj.column(name)
        .ok_or_else(|| CliError::Config(format!("trajectory has no column `{name}`")))
}

fn oracle_checks(cfg: &ScenarioConfig, traj: &Trajectory, tol: f64) -> CliResult<Vec<Check>> {
    let curve = match cfg {
        ScenarioConfig::WagonAdiabatic(w) => Some(wagon_adiabatic_curve(w, *traj.times.last().unwrap_or(&0.0))),
        ScenarioConfig::WagonBath(w) if BathWagon::from(w).coefficients().is_ok() => {
            Some(wagon_bath_curve(w, *traj.times.last().unwrap_or(&0.0)).map_err(build_error)?)
        }
        ScenarioConfig::PistonAdiabatic(p) => return hamiltonian_check(p, traj, tol).map(|c| vec![c]),
        _ => None,
    };
    let Some(curve) = curve else {
        return Ok(Vec::new());
    };
    let mut reference = Vec::with_capacity(traj.len());
    for &t in &traj.times {
        reference.push(curve.eval(t).map_err(run_error)?);
    }
    let mut checks = Vec::new();
    for name in ["x", "T"] {
        let i = curve.observable_names.iter().position(|n| n == name).expect("wagon oracle names");
        let want: Vec<f64> = reference.iter().map(|r| r[i]).collect();
        let got = column(traj, name)?;
        checks.push(Check::at_most(&format!("oracle_{name}_error"), max_scaled_error(&got, &want), tol));
    }
    Ok(checks)
}

/// Relative drift of the adiabatic-piston Hamiltonian; momenta come from the
/// reduced state when present, otherwise from the lifted jets.
fn hamiltonian_check(p: &PistonConfig, traj: &Trajectory, tol: f64) -> CliResult<Check> {
    let x = column(traj, "x")?;
    let v = traj
        .column("x_dot")
        .unwrap_or_else(|| traj.jets.iter().map(|j| j.qdot[0]).collect());
    let h = x
        .iter()
        .zip(&v)
        .map(|(&q, &v)| piston_hamiltonian(p, q, p.m * v))
        .collect::<thermomech::Result<Vec<_>>>()
        .map_err(run_error)?;
    let h0 = h.first().copied().unwrap_or(0.0);
    let scale = h0.abs().max(1.0);
    let drift = h.iter().map(|e| (e - h0).abs() / scale).fold(0.0, f64::max);
    Ok(Check::at_most("hamiltonian_drift", drift, tol))
}

/// Runs every applicable check on a simulated or loaded trajectory.
pub fn verification_checks(m: &RunManifest, trajectory: Option<&Path>) -> CliResult<Vec<Check>> {
    let cfg = m.scenario_config()?;
    let (sc, traj) = match trajectory {
        Some(path) => {
            let sc = cfg.build().map_err(build_error)?;
            let traj = read_trajectory(path, &sc)?;
            (sc, traj)
        }
        None => run_scenario(&cfg, &m.integrator)?,
    };
    if traj.len() < 5 {
        return Err(CliError::Config("trajectory needs at least five samples".into()));
    }
    let tol = m.tolerance;
    let report = audit(&traj, &sc.system, m.exec);
    let mut checks = vec![
        Check::at_most("kinematic_residual_max", report.constraint_residual_max, tol),
        Check::at_most("dalembert_violation_max", report.dalembert_violation_max, tol),
        Check::at_most("energy_drift", report.energy_drift, tol),
    ];
    if let Some(policy) = sc.system.second_law() {
        checks.push(Check::at_least("entropy_margin_min", report.entropy_margin_min, -policy.tolerance));
    }
    if let Some(l) = report.legendre_residual_max {
        checks.push(Check::at_most("legendre_residual_max", l, tol));
    }
    if m.audits.oracle {
        checks.extend(oracle_checks(&cfg, &traj, tol)?);
    }
    if m.audits.reversibility && cfg.kind() == ScenarioKind::PistonIsothermal {
        let err = reversibility_check(&sc.ode, &sc.initial, m.integrator.t_end, &m.integrator).map_err(run_error)?;
        checks.push(Check::at_most("reversibility_error", err, tol));
    }
    Ok(checks)
}

/// Fixed-width PASS/FAIL table.
pub fn format_checks(checks: &[Check]) -> String {
    let mut s = format!("{:<26} {:<24} {:<10} {}\n", "check", "value", "bound", "status");
    for c in checks {
        let bound = format!("{}{:e}", if c.upper { "<=" } else { ">=" }, c.threshold);
        let status = if c.passed() { "PASS" } else { "FAIL" };
        s.push_str(&format!("{:<26} {:<24} {:<10} {status}\n", c.name, fmt_f64(c.value), bound));
    }
    s
}

/// Prints the verification table; any failed check is an error.
pub fn cmd_verify(m: &RunManifest, trajectory: Option<&Path>, out: &mut dyn Write) -> CliResult<()> {
    let checks = verification_checks(m, trajectory)?;
    out.write_all(format_checks(&checks).as_bytes()).map_err(CliError::io("<stdout>"))?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}

pub const TEMPERATURE_FILE: &str = "temperatures.csv";
pub const ENTROPY_FILE: &str = "entropy.csv";
pub const PHASE_FILE: &str = "phase.csv";

/// Writes temperature and entropy histories of a dissipative run and a
/// Hamiltonian phase grid of the adiabatic piston. The grid uses the
/// `[piston-adiabatic]` table of the same file when present and the unit
/// reference piston otherwise.
pub fn cmd_report(m: &RunManifest, grid: usize, out: &mut dyn Write) -> CliResult<Vec<PathBuf>> {
    if !matches!(m.scenario, ScenarioKind::PistonDissipative | ScenarioKind::PistonDissipativeBath) {
        return Err(CliError::Config(format!(
            "report needs a dissipative piston scenario, got `{}`",
            m.scenario
        )));
    }
    if grid < 2 {
        return Err(CliError::Config("phase grid needs at least two points per axis".into()));
    }
    let cfg = m.scenario_config()?;
    let (sc, traj) = run_scenario(&cfg, &m.integrator)?;
    create_dir(&m.out_dir)?;

    let t = &traj.times;
    let [temp, x, t_c, s, s_c] = ["T", "x", "T_c", "S", "S_c"].map(|n| column(&traj, n));
    let (temp, x, t_c, s, s_c) = (temp?, x?, t_c?, s?, s_c?);
    let total = total_entropy(&traj, &sc.system);

    let temperatures = m.out_dir.join(TEMPERATURE_FILE);
    write_table(
        &temperatures,
        &["t", "T", "x", "T_c"],
        (0..t.len()).map(|i| vec![t[i], temp[i], x[i], t_c[i]]),
    )?;
    let entropy = m.out_dir.join(ENTROPY_FILE);
    write_table(
        &entropy,
        &["t", "S", "S_c", "S+S_c"],
        (0..t.len()).map(|i| vec![t[i], s[i], s_c[i], total[i]]),
    )?;

    let piston = match load_optional(&m.config_path, ScenarioKind::PistonAdiabatic)? {
        Some(ScenarioConfig::PistonAdiabatic(p)) => p,
        _ => PistonConfig::default(),
    };
    let x_star = piston_equilibrium(&piston).map_err(build_error)?;
    let p_max = piston.m * (2.0 * piston.g * x_star).sqrt();
    let phase = piston_phase_grid(&piston, (0.25 * x_star, 3.0 * x_star), (-p_max, p_max), grid, grid, m.exec).map_err(build_error)?;
    let phase_path = m.out_dir.join(PHASE_FILE);
    let rows = phase
        .q
        .iter()
        .enumerate()
        .flat_map(|(i, &q)| phase.p.iter().enumerate().map(move |(j, &p)| (i, j, q, p)))
        .map(|(i, j, q, p)| vec![q, p, phase.h[i][j]]);
    write_table(&phase_path, &["q", "p", "H"], rows)?;

    let paths = vec![temperatures, entropy, phase_path];
    for p in &paths {
        writeln!(out, "wrote {}", p.display()).map_err(CliError::io("<stdout>"))?;
    }
    Ok(paths)
}
