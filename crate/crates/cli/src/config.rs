use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use abqp::generator::ConstraintKind;
use abqp::sim::{AsynchronyModel, DelayDistribution};
use abqp::QuadraticProgram;

use crate::{Failure, OutputArgs};

/// Reads a JSON config, or the default when no path is given.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Failure> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))
        }
    }
}

pub fn read_qp(path: &Path) -> Result<QuadraticProgram, Failure> {
    QuadraticProgram::read_json(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

pub fn sidecar_path(trace: &Path) -> PathBuf {
    trace.with_extension("json")
}

/// Writes the report file if requested, then prints either JSON or the table.
pub fn emit<T: Serialize>(report: &T, table: &str, output: &OutputArgs) -> Result<(), Failure> {
    let json = serde_json::to_string_pretty(report)?;
    if let Some(path) = &output.report {
        write(path, &(json.clone() + "\n"))?;
    }
    if output.json {
        println!("{json}");
    } else {
        print!("{table}");
    }
    Ok(())
}

/// Simulation settings beyond the QP file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub model: AsynchronyModel,
    pub record_every: u64,
    pub q_star: Option<f64>,
    /// Per-block regularization.
    pub alphas: Option<Vec<f64>>,
    /// Per-block stepsizes; optimal for the regularization when absent.
    pub gammas: Option<Vec<f64>>,
    /// Initial state; the projection of the origin when absent.
    pub x0: Option<Vec<f64>>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { model: AsynchronyModel::default(), record_every: 1, q_star: None, alphas: None, gammas: None, x0: None }
    }
}

fn split(s: &str) -> (&str, Option<&str>) {
    match s.split_once(':') {
        Some((k, v)) => (k, Some(v)),
        None => (s, None),
    }
}

fn number<T: std::str::FromStr>(v: Option<&str>, what: &str) -> Result<T, String> {
    v.ok_or_else(|| format!("{what} needs a value after ':'"))?.parse().map_err(|_| format!("invalid {what} value"))
}

pub fn parse_delay(s: &str) -> Result<DelayDistribution, String> {
    match split(s) {
        ("zero", None) => Ok(DelayDistribution::Zero),
        ("fixed", v) => Ok(DelayDistribution::Fixed { ticks: number(v, "fixed")? }),
        ("geometric", v) => Ok(DelayDistribution::Geometric { p: number(v, "geometric")? }),
        ("uniform", v) => Ok(DelayDistribution::Uniform { max: number(v, "uniform")? }),
        _ => Err(format!("unknown delay `{s}`; expected zero, fixed:T, geometric:P or uniform:M")),
    }
}

pub fn parse_constraints(s: &str) -> Result<ConstraintKind, String> {
    match split(s) {
        ("unconstrained", None) => Ok(ConstraintKind::Unconstrained),
        ("box", v) => Ok(ConstraintKind::Box { half_width: number(v, "box")? }),
        ("containing", v) => Ok(ConstraintKind::ContainingBox { margin: number(v, "containing")? }),
        _ => Err(format!("unknown constraints `{s}`; expected unconstrained, box:W or containing:M")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delay_strings() {
        assert_eq!(parse_delay("zero").unwrap(), DelayDistribution::Zero);
        assert_eq!(parse_delay("fixed:3").unwrap(), DelayDistribution::Fixed { ticks: 3 });
        assert_eq!(parse_delay("geometric:0.5").unwrap(), DelayDistribution::Geometric { p: 0.5 });
        assert_eq!(parse_delay("uniform:4").unwrap(), DelayDistribution::Uniform { max: 4 });
        for bad in ["", "fixed", "fixed:x", "zero:1", "poisson:2"] {
            assert!(parse_delay(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn constraint_strings() {
        assert_eq!(parse_constraints("unconstrained").unwrap(), ConstraintKind::Unconstrained);
        assert_eq!(parse_constraints("box:0.5").unwrap(), ConstraintKind::Box { half_width: 0.5 });
        assert_eq!(parse_constraints("containing:1").unwrap(), ConstraintKind::ContainingBox { margin: 1.0 });
        assert!(parse_constraints("ball:1").is_err());
    }

    #[test]
    fn simulate_config_defaults_and_rejects_unknown() {
        let c: SimulateConfig = serde_json::from_str(r#"{"record_every": 5, "model": {"p_update": 0.5}}"#).unwrap();
        assert_eq!(c.record_every, 5);
        assert_eq!(c.model.p_update, 0.5);
        assert_eq!(c.model.p_transmit, AsynchronyModel::default().p_transmit);
        assert!(serde_json::from_str::<SimulateConfig>(r#"{"ticks": 5}"#).is_err());
    }
}
