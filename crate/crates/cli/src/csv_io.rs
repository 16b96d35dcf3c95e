//! CSV output with 17 significant digits and a header row.

use std::fs::File;
use std::path::Path;

use thermomech::dynamics::{SimulationReport, Trajectory};
use thermomech::scenarios::Scenario;

use crate::error::{CliError, CliResult};

/// Prefix of reduced-state columns, which share names with observables.
pub const STATE_PREFIX: &str = "ode_";

/// Scientific notation with 16 digits after the point.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer(path: &Path) -> CliResult<csv::Writer<File>> {
    let file = File::create(path).map_err(CliError::io(path))?;
    Ok(csv::Writer::from_writer(file))
}

/// Writes `header` followed by numeric rows.
pub fn write_table<I>(path: &Path, header: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = writer(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|&x| fmt_f64(x)))?;
    }
    w.flush().map_err(CliError::io(path))?;
    Ok(())
}

/// Columns `t`, the reduced state, then the observables.
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> CliResult<()> {
    let state_cols: Vec<String> = traj.state_names.iter().map(|n| format!("{STATE_PREFIX}{n}")).collect();
    let mut header: Vec<&str> = vec!["t"];
    header.extend(state_cols.iter().map(String::as_str));
    header.extend(traj.observable_names.iter().map(String::as_str));
    let rows = (0..traj.len()).map(|i| {
        let mut row = vec![traj.times[i]];
        if let Some(s) = traj.states.get(i) {
            row.extend_from_slice(s);
        }
        row.extend_from_slice(&traj.full_states[i]);
        row
    });
    write_table(path, &header, rows)
}

/// `metric,value` rows; absent values are left empty.
pub fn write_report(path: &Path, report: &SimulationReport) -> CliResult<()> {
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    let verdict = match report.second_law_verdict {
        thermomech::dynamics::Verdict::Accepted => "accepted",
        thermomech::dynamics::Verdict::Rejected => "rejected",
    };
    let rows = [
        ("energy_drift", fmt_f64(report.energy_drift)),
        ("entropy_margin_min", fmt_f64(report.entropy_margin_min)),
        ("constraint_residual_max", fmt_f64(report.constraint_residual_max)),
        ("dalembert_violation_max", fmt_f64(report.dalembert_violation_max)),
        ("legendre_residual_max", opt(report.legendre_residual_max)),
        ("second_law_verdict", verdict.to_owned()),
        ("reversibility_error", opt(report.reversibility_error)),
    ];
    let mut w = writer(path)?;
    w.write_record(["metric", "value"])?;
    for (k, v) in rows {
        w.write_record([k, v.as_str()])?;
    }
    w.flush().map_err(CliError::io(path))?;
    Ok(())
}

/// Reads a trajectory file written by [`write_trajectory`] for `scenario`.
/// Observable columns are required; reduced-state columns are optional.
pub fn read_trajectory(path: &Path, scenario: &Scenario) -> CliResult<Trajectory> {
    let file = File::open(path).map_err(CliError::io(path))?;
    let mut reader = csv::Reader::from_reader(file);
    let header = reader.headers()?.clone();
    let find = |name: &str| header.iter().position(|h| h == name);
    let bad = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let t_col = find("t").ok_or_else(|| bad("missing column `t`".into()))?;
    let obs_cols = scenario
        .observable_names
        .iter()
        .map(|n| find(n).ok_or_else(|| bad(format!("missing column `{n}`"))))
        .collect::<CliResult<Vec<_>>>()?;
    let state_cols: Option<Vec<usize>> = scenario
        .ode
        .state_names
        .iter()
        .map(|n| find(&format!("{STATE_PREFIX}{n}")))
        .collect();

    let mut times = Vec::new();
    let mut full = Vec::new();
    let mut states = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let field = |c: usize| -> CliResult<f64> {
            let raw = record.get(c).unwrap_or("");
            raw.trim()
                .parse()
                .map_err(|_| bad(format!("row {}: `{raw}` is not a number", line + 2)))
        };
        times.push(field(t_col)?);
        full.push(obs_cols.iter().map(|&c| field(c)).collect::<CliResult<Vec<_>>>()?);
        if let Some(cols) = &state_cols {
            states.push(cols.iter().map(|&c| field(c)).collect::<CliResult<Vec<_>>>()?);
        }
    }
    let mut traj = Trajectory::from_configurations(times, full, scenario.observable_names.clone()).map_err(|e| bad(e.to_string()))?;
    if state_cols.is_some() {
        traj.states = states;
        traj.state_names = scenario.ode.state_names.clone();
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use thermomech::dynamics::{simulate, IntegratorConfig};
    use thermomech::scenarios::{build_wagon_adiabatic, WagonConfig};

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn trajectory_file_round_trips() {
        let sc = build_wagon_adiabatic(&WagonConfig::default()).unwrap();
        let traj = simulate(&sc, &IntegratorConfig::rk4(1e-2, 0.5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        write_trajectory(&path, &traj).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,ode_x,ode_x_dot,ode_T,x,T,S,U\n"), "{text}");
        let back = read_trajectory(&path, &sc).unwrap();
        assert_eq!(back.times, traj.times);
        assert_eq!(back.states, traj.states);
        assert_eq!(back.full_states, traj.full_states);
    }

    #[test]
    fn missing_column_is_a_config_error() {
        let sc = build_wagon_adiabatic(&WagonConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "t,x\n0,1\n").unwrap();
        let err = read_trajectory(&path, &sc).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
