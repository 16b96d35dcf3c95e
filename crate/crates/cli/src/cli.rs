use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thermomech::dynamics::IntegratorConfig;
use thermomech::exec::Execution;
use thermomech::scenarios::ScenarioKind;

use crate::commands::{cmd_report, cmd_simulate, cmd_verify, tolerance_from, AuditToggles, RunManifest, Sweep};
use crate::error::{build_error, CliResult};

#[derive(Debug, Parser)]
#[command(name = "thermomech", version, about = "Simulate and audit thermo-mechanical systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a scenario and write trajectory.csv and report.csv.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Repeat the run for each value of a table entry, e.g. `mu=0.5,1,2`.
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Audit a scenario run (or a trajectory file) and print a PASS/FAIL table.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// Audit this trajectory CSV instead of integrating.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Skip comparisons against closed-form references.
        #[arg(long)]
        no_oracle: bool,
        /// Skip the time-reversal check of the isothermal piston.
        #[arg(long)]
        no_reversibility: bool,
    },
    /// Write temperature, entropy and phase-grid tables of a dissipative run.
    Report {
        #[command(flatten)]
        run: RunArgs,
        /// Points per axis of the phase grid.
        #[arg(long, default_value_t = 101)]
        grid: usize,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario name, also the table name in the config file.
    #[arg(long)]
    pub scenario: String,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    pub t_end: f64,
    /// Fixed RK4 step (default 1e-3 when no tolerances are given).
    #[arg(long, conflicts_with_all = ["rtol", "atol"])]
    pub dt: Option<f64>,
    /// Relative tolerance of the adaptive integrator.
    #[arg(long, requires = "atol")]
    pub rtol: Option<f64>,
    /// Absolute tolerance of the adaptive integrator.
    #[arg(long, requires = "rtol")]
    pub atol: Option<f64>,
    /// Output spacing; every step is written when absent.
    #[arg(long)]
    pub sample_dt: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Run data-parallel loops on one thread.
    #[arg(long)]
    pub sequential: bool,
}

pub const DEFAULT_DT: f64 = 1e-3;

impl RunArgs {
    /// Builds the manifest; `tolerance_env` is the raw `THERMOMECH_TOL`.
    pub fn manifest(&self, audits: AuditToggles, tolerance_env: Option<&str>) -> CliResult<RunManifest> {
        let scenario: ScenarioKind = self.scenario.parse().map_err(build_error)?;
        let mut integrator = match (self.rtol, self.atol) {
            (Some(r), Some(a)) => IntegratorConfig::adaptive(r, a, self.t_end),
            _ => IntegratorConfig::rk4(self.dt.unwrap_or(DEFAULT_DT), self.t_end),
        };
        integrator.sample_dt = self.sample_dt;
        integrator.validate().map_err(build_error)?;
        Ok(RunManifest {
            scenario,
            config_path: self.config.clone(),
            integrator,
            out_dir: self.out.clone(),
            audits,
            tolerance: tolerance_from(tolerance_env)?,
            exec: if self.sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            },
        })
    }
}

/// Executes a parsed command line, writing human-readable output to `out`.
pub fn run(cli: &Cli, tolerance_env: Option<&str>, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Simulate { run, sweep } => {
            let m = run.manifest(AuditToggles::default(), tolerance_env)?;
            let sweep: Option<Sweep> = sweep.as_deref().map(str::parse).transpose()?;
            cmd_simulate(&m, sweep.as_ref(), out)
        }
        Command::Verify {
            run,
            trajectory,
            no_oracle,
            no_reversibility,
        } => {
            let audits = AuditToggles {
                oracle: !no_oracle,
                reversibility: !no_reversibility,
            };
            let m = run.manifest(audits, tolerance_env)?;
            cmd_verify(&m, trajectory.as_deref(), out)
        }
        Command::Report { run, grid } => {
            let m = run.manifest(AuditToggles::default(), tolerance_env)?;
            cmd_report(&m, *grid, out).map(|_| ())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("thermomech").chain(args.iter().copied()))
    }

    #[test]
    fn step_and_tolerances_are_exclusive() {
        let base = ["simulate", "--scenario", "wagon-adiabatic", "--config", "c.toml"];
        assert!(parse(&[&base[..], &["--dt", "1e-3", "--rtol", "1e-8", "--atol", "1e-10"]].concat()).is_err());
        assert!(parse(&[&base[..], &["--rtol", "1e-8"]].concat()).is_err());
        let cli = parse(&[&base[..], &["--rtol", "1e-8", "--atol", "1e-10"]].concat()).unwrap();
        let Command::Simulate { run, .. } = cli.command else { panic!() };
        let m = run.manifest(AuditToggles::default(), None).unwrap();
        assert!(matches!(m.integrator.method, thermomech::dynamics::Method::Dopri5 { .. }));
    }

    #[test]
    fn manifest_rejects_bad_inputs() {
        let cli = parse(&["verify", "--scenario", "pendulum", "--config", "c.toml"]).unwrap();
        let Command::Verify { run, .. } = cli.command else { panic!() };
        assert_eq!(run.manifest(AuditToggles::default(), None).unwrap_err().exit_code(), 1);

        let cli = parse(&["verify", "--scenario", "wagon-bath", "--config", "c.toml", "--t-end", "0"]).unwrap();
        let Command::Verify { run, .. } = cli.command else { panic!() };
        assert_eq!(run.manifest(AuditToggles::default(), None).unwrap_err().exit_code(), 1);
        assert_eq!(run.manifest(AuditToggles::default(), Some("-1")).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn tolerance_env_overrides_default() {
        let cli = parse(&["verify", "--scenario", "wagon-bath", "--config", "c.toml"]).unwrap();
        let Command::Verify { run, .. } = cli.command else { panic!() };
        assert_eq!(run.manifest(AuditToggles::default(), Some("1e-3")).unwrap().tolerance, 1e-3);
        assert_eq!(run.manifest(AuditToggles::default(), None).unwrap().tolerance, 1e-6);
    }
}
