//! Flat TOML configuration: one table per scenario, named after it.
//!
//! ```toml
//! [wagon-adiabatic]
//! m = 1.0
//! mu = 1.0
//! nu = 1.0
//! x0 = 0.0
//! v0 = 1.0
//! t_init = 1.0
//! ```
//!
//! Every physical parameter is required. Only the reference constants of the
//! entropy and energy scales are optional: `gas_s0 = 0`, `gas_t0 = 1`,
//! `gas_v0 = 1`, `body_s0 = 0`, `body_t0 = 1`.

use std::path::Path;

use serde::Deserialize;
use thermomech::scenarios::{
    AreaModel, DissipativeBathConfig, DissipativeConfig, PistonConfig, PotentialChoice, ScenarioConfig, ScenarioKind, WagonBathConfig,
    WagonConfig,
};
use thermomech::thermo::{BodyParams, IdealGasParams};

use crate::error::{CliError, CliResult};

fn zero() -> f64 {
    0.0
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WagonTable {
    m: f64,
    mu: f64,
    nu: f64,
    x0: f64,
    v0: f64,
    t_init: f64,
    #[serde(default = "one")]
    body_t0: f64,
    #[serde(default = "zero")]
    body_s0: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WagonBathTable {
    m: f64,
    mu: f64,
    nu: f64,
    x0: f64,
    v0: f64,
    t_init: f64,
    kappa: f64,
    t_bath: f64,
    #[serde(default = "one")]
    body_t0: f64,
    #[serde(default = "zero")]
    body_s0: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PistonTable {
    m: f64,
    g: f64,
    area: f64,
    n0r: f64,
    alpha: f64,
    x0: f64,
    v0: f64,
    t_init: f64,
    potential: Option<PotentialChoice>,
    #[serde(default = "zero")]
    gas_s0: f64,
    #[serde(default = "one")]
    gas_t0: f64,
    #[serde(default = "one")]
    gas_v0: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DissipativeTable {
    m: f64,
    g: f64,
    area: f64,
    n0r: f64,
    alpha: f64,
    nu: f64,
    mu: f64,
    kappa: f64,
    a0: f64,
    a1: f64,
    x0: f64,
    v0: f64,
    t_gas0: f64,
    t_c0: f64,
    kappa_e: Option<f64>,
    area_e: Option<f64>,
    t_bath: Option<f64>,
    #[serde(default = "zero")]
    gas_s0: f64,
    #[serde(default = "one")]
    gas_t0: f64,
    #[serde(default = "one")]
    gas_v0: f64,
    #[serde(default = "one")]
    body_t0: f64,
    #[serde(default = "zero")]
    body_s0: f64,
}

fn body(nu: f64, t0: f64, s0: f64) -> BodyParams {
    BodyParams { nu, t0, s0 }
}

fn gas(n0r: f64, alpha: f64, s0: f64, t0: f64, v0: f64) -> IdealGasParams {
    IdealGasParams { n0r, alpha, s0, t0, v0 }
}

impl From<WagonTable> for WagonConfig {
    fn from(t: WagonTable) -> Self {
        WagonConfig {
            m: t.m,
            mu: t.mu,
            body: body(t.nu, t.body_t0, t.body_s0),
            x0: t.x0,
            v0: t.v0,
            t_init: t.t_init,
        }
    }
}

impl PistonTable {
    fn piston(&self) -> PistonConfig {
        PistonConfig {
            m: self.m,
            g: self.g,
            area: self.area,
            gas: gas(self.n0r, self.alpha, self.gas_s0, self.gas_t0, self.gas_v0),
            x0: self.x0,
            v0: self.v0,
            t_init: self.t_init,
        }
    }
}

impl DissipativeTable {
    fn piston(&self) -> DissipativeConfig {
        DissipativeConfig {
            m: self.m,
            g: self.g,
            area: self.area,
            gas: gas(self.n0r, self.alpha, self.gas_s0, self.gas_t0, self.gas_v0),
            body: body(self.nu, self.body_t0, self.body_s0),
            mu: self.mu,
            kappa: self.kappa,
            area_model: AreaModel { a0: self.a0, a1: self.a1 },
            x0: self.x0,
            v0: self.v0,
            t_gas0: self.t_gas0,
            t_c0: self.t_c0,
        }
    }
}

fn decode<'de, T: Deserialize<'de>>(kind: ScenarioKind, table: toml::Table) -> CliResult<T> {
    toml::Value::Table(table)
        .try_into()
        .map_err(|e| CliError::Config(format!("[{kind}]: {e}")))
}

/// Parses the table of `kind` into a validated scenario configuration.
pub fn scenario_from_table(kind: ScenarioKind, table: toml::Table) -> CliResult<ScenarioConfig> {
    let missing = |key: &str| CliError::Config(format!("[{kind}]: missing field `{key}`"));
    let unexpected = |key: &str| CliError::Config(format!("[{kind}]: unknown field `{key}`"));
    let cfg = match kind {
        ScenarioKind::WagonAdiabatic => ScenarioConfig::WagonAdiabatic(decode::<WagonTable>(kind, table)?.into()),
        ScenarioKind::WagonBath => {
            let t: WagonBathTable = decode(kind, table)?;
            ScenarioConfig::WagonBath(WagonBathConfig {
                wagon: WagonConfig {
                    m: t.m,
                    mu: t.mu,
                    body: body(t.nu, t.body_t0, t.body_s0),
                    x0: t.x0,
                    v0: t.v0,
                    t_init: t.t_init,
                },
                kappa: t.kappa,
                t_bath: t.t_bath,
            })
        }
        ScenarioKind::PistonAdiabatic => {
            let t: PistonTable = decode(kind, table)?;
            if t.potential.is_some() {
                return Err(unexpected("potential"));
            }
            ScenarioConfig::PistonAdiabatic(t.piston())
        }
        ScenarioKind::PistonIsothermal => {
            let t: PistonTable = decode(kind, table)?;
            let potential = t.potential.ok_or_else(|| missing("potential"))?;
            ScenarioConfig::PistonIsothermal {
                piston: t.piston(),
                potential,
            }
        }
        ScenarioKind::PistonDissipative => {
            let t: DissipativeTable = decode(kind, table)?;
            for (key, value) in [("kappa_e", t.kappa_e), ("area_e", t.area_e), ("t_bath", t.t_bath)] {
                if value.is_some() {
                    return Err(unexpected(key));
                }
            }
            ScenarioConfig::PistonDissipative(t.piston())
        }
        ScenarioKind::PistonDissipativeBath => {
            let t: DissipativeTable = decode(kind, table)?;
            ScenarioConfig::PistonDissipativeBath(DissipativeBathConfig {
                piston: t.piston(),
                kappa_e: t.kappa_e.ok_or_else(|| missing("kappa_e"))?,
                area_e: t.area_e.ok_or_else(|| missing("area_e"))?,
                t_bath: t.t_bath.ok_or_else(|| missing("t_bath"))?,
            })
        }
    };
    Ok(cfg)
}

/// Reads `path` and returns the raw table for `kind`.
pub fn load_table(path: &Path, kind: ScenarioKind) -> CliResult<toml::Table> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    let mut doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(format!("{}: {e}", path.display())))?;
    match doc.remove(kind.name()) {
        Some(toml::Value::Table(t)) => Ok(t),
        Some(_) => Err(CliError::Config(format!("{}: `{kind}` must be a table", path.display()))),
        None => Err(CliError::Config(format!("{}: no [{kind}] table", path.display()))),
    }
}

/// Optional table of `kind`; absent tables give `None`.
pub fn load_optional(path: &Path, kind: ScenarioKind) -> CliResult<Option<ScenarioConfig>> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    let mut doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(format!("{}: {e}", path.display())))?;
    match doc.remove(kind.name()) {
        Some(toml::Value::Table(t)) => scenario_from_table(kind, t).map(Some),
        Some(_) => Err(CliError::Config(format!("{}: `{kind}` must be a table", path.display()))),
        None => Ok(None),
    }
}

/// Replaces the numeric entry `key` of `table`; the key must already exist.
pub fn override_key(table: &toml::Table, key: &str, value: f64) -> CliResult<toml::Table> {
    if !table.contains_key(key) {
        return Err(CliError::Config(format!("sweep key `{key}` is not set in the scenario table")));
    }
    let mut out = table.clone();
    out.insert(key.to_owned(), toml::Value::Float(value));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> toml::Table {
        text.parse().unwrap()
    }

    const WAGON: &str = "m = 1.0\nmu = 2.0\nnu = 3.0\nx0 = 0.0\nv0 = 1.0\nt_init = 1.0\n";

    #[test]
    fn wagon_table_parses() {
        let cfg = scenario_from_table(ScenarioKind::WagonAdiabatic, table(WAGON)).unwrap();
        match cfg {
            ScenarioConfig::WagonAdiabatic(w) => {
                assert_eq!(w.mu, 2.0);
                assert_eq!(w.body.nu, 3.0);
                assert_eq!(w.body.t0, 1.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_and_missing_fields_rejected() {
        let extra = format!("{WAGON}colour = 1.0\n");
        assert!(scenario_from_table(ScenarioKind::WagonAdiabatic, table(&extra)).is_err());
        assert!(scenario_from_table(ScenarioKind::WagonAdiabatic, table("m = 1.0")).is_err());
    }

    #[test]
    fn isothermal_requires_potential() {
        let piston = "m = 1.0\ng = 1.0\narea = 1.0\nn0r = 1.0\nalpha = 1.5\nx0 = 1.0\nv0 = 0.0\nt_init = 1.0\n";
        assert!(scenario_from_table(ScenarioKind::PistonIsothermal, table(piston)).is_err());
        let with = format!("{piston}potential = \"helmholtz\"\n");
        assert!(matches!(
            scenario_from_table(ScenarioKind::PistonIsothermal, table(&with)).unwrap(),
            ScenarioConfig::PistonIsothermal {
                potential: PotentialChoice::Helmholtz,
                ..
            }
        ));
        assert!(scenario_from_table(ScenarioKind::PistonAdiabatic, table(&with)).is_err());
    }

    #[test]
    fn sweep_override_requires_existing_key() {
        let t = table(WAGON);
        assert_eq!(override_key(&t, "mu", 5.0).unwrap()["mu"].as_float(), Some(5.0));
        assert!(override_key(&t, "kappa", 5.0).is_err());
    }
}
