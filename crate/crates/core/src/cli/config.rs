use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::comparison::{BFunction, ExplosionConfig, ExplosionVerdict};
use crate::error::{Error, Result};
use crate::harness::ExperimentConfig;
use crate::models::ModelSpec;

/// A config file that could not be turned into a valid configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigDiagnostic {
    pub path: String,
    /// 1-based line and column of a parse error.
    pub location: Option<(usize, usize)>,
    /// Offending field for validation errors.
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.path)?;
        if let Some((line, col)) = self.location {
            write!(f, ":{line}:{col}")?;
        }
        if let Some(field) = &self.field {
            write!(f, ": field `{field}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl ConfigDiagnostic {
    pub fn from_error(path: &Path, e: Error) -> Self {
        let (field, message) = match e {
            Error::InvalidSpec { field, message } => (Some(field), message),
            other => (None, other.to_string()),
        };
        Self {
            path: path.display().to_string(),
            location: None,
            field,
            message,
        }
    }
}

/// Configuration accepted by one CLI subcommand.
pub trait CommandConfig: Serialize + DeserializeOwned {
    fn seed(&self) -> u64;
    fn set_seed(&mut self, seed: u64);
    fn set_workers(&mut self, _workers: Option<usize>) {}
    fn validate(&self) -> Result<()>;
}

/// Read and parse `path`; parse errors carry the line and column.
pub fn load<C: CommandConfig>(path: &Path) -> std::result::Result<C, ConfigDiagnostic> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigDiagnostic {
        path: path.display().to_string(),
        location: None,
        field: None,
        message: format!("cannot read config: {e}"),
    })?;
    serde_json::from_str(&text).map_err(|e| {
        let full = e.to_string();
        // serde_json appends " at line L column C"; the location is reported separately
        let message = match full.rfind(" at line ") {
            Some(i) if e.line() > 0 => full[..i].to_string(),
            _ => full,
        };
        ConfigDiagnostic {
            path: path.display().to_string(),
            location: (e.line() > 0).then(|| (e.line(), e.column())),
            field: None,
            message,
        }
    })
}

impl CommandConfig for ExperimentConfig {
    fn seed(&self) -> u64 {
        self.seed
    }

    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    fn set_workers(&mut self, workers: Option<usize>) {
        self.workers = workers;
    }

    fn validate(&self) -> Result<()> {
        ExperimentConfig::validate(self)
    }
}

fn default_probes() -> usize {
    100
}

fn default_condition_samples() -> usize {
    200
}

fn default_kappa_points() -> usize {
    32
}

fn default_kappa_times() -> usize {
    9
}

/// Config of `geometry-check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryCheckConfig {
    pub model: ModelSpec,
    /// `k` in the curvature condition to verify.
    #[serde(default)]
    pub k: f64,
    #[serde(default)]
    pub seed: u64,
    /// Random probes of the closed-form vs numeric comparison.
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default = "default_condition_samples")]
    pub condition_samples: usize,
    /// Sample points for `κ`.
    #[serde(default = "default_kappa_points")]
    pub kappa_points: usize,
    /// Evenly spaced times (including both ends of the horizon) for `κ`.
    #[serde(default = "default_kappa_times")]
    pub kappa_times: usize,
}

impl GeometryCheckConfig {
    pub fn new(model: ModelSpec) -> Self {
        Self {
            model,
            k: 0.0,
            seed: 0,
            probes: default_probes(),
            condition_samples: default_condition_samples(),
            kappa_points: default_kappa_points(),
            kappa_times: default_kappa_times(),
        }
    }
}

impl CommandConfig for GeometryCheckConfig {
    fn seed(&self) -> u64 {
        self.seed
    }

    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !self.k.is_finite() {
            return Err(Error::invalid("k", "must be finite"));
        }
        for (name, n, min) in [
            ("probes", self.probes, 1),
            ("condition_samples", self.condition_samples, 1),
            ("kappa_points", self.kappa_points, 1),
            ("kappa_times", self.kappa_times, 2),
        ] {
            if n < min {
                return Err(Error::invalid(name, format!("need at least {min}, got {n}")));
            }
        }
        Ok(())
    }
}

/// One `(b, C)` pair for `explosion`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplosionCase {
    #[serde(default)]
    pub name: Option<String>,
    pub b: BFunction,
    /// Constant `C ≥ 0` in `𝐛(y) = C + ∫₀^y b`.
    #[serde(default)]
    pub c: f64,
    /// Verdict the case must produce, if given.
    #[serde(default)]
    pub expect: Option<ExplosionVerdict>,
}

impl ExplosionCase {
    pub fn label(&self, index: usize) -> String {
        self.name.clone().unwrap_or_else(|| format!("case{index}"))
    }
}

/// Config of `explosion`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplosionRunConfig {
    /// Recorded in the manifest; the criterion itself is deterministic.
    #[serde(default)]
    pub seed: u64,
    pub cases: Vec<ExplosionCase>,
    #[serde(default)]
    pub settings: ExplosionConfig,
    /// Require every verdict to be decisive and stable.
    #[serde(default)]
    pub strict: bool,
}

impl CommandConfig for ExplosionRunConfig {
    fn seed(&self) -> u64 {
        self.seed
    }

    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    fn validate(&self) -> Result<()> {
        if self.cases.is_empty() {
            return Err(Error::invalid("cases", "need at least one case"));
        }
        for (i, case) in self.cases.iter().enumerate() {
            case.b.validate().map_err(|e| prefix(&format!("cases[{i}]"), e))?;
            if !(case.c >= 0.0 && case.c.is_finite()) {
                return Err(Error::invalid(format!("cases[{i}].c"), "must be finite and nonnegative"));
            }
        }
        self.settings.validate().map_err(|e| prefix("settings", e))
    }
}

fn prefix(path: &str, e: Error) -> Error {
    match e {
        Error::InvalidSpec { field, message } => Error::invalid(format!("{path}.{field}"), message),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parse_error_has_location() {
        let f = file("{\n  \"cases\": [],\n  \"bogus\": 1\n}\n");
        let d = load::<ExplosionRunConfig>(f.path()).unwrap_err();
        assert_eq!(d.location.map(|l| l.0), Some(3));
        assert!(d.message.contains("bogus"), "{}", d.message);
        assert!(!d.message.contains("at line"));
    }

    #[test]
    fn validation_names_the_field() {
        let f = file(r#"{"cases": [{"b": {"kind": "constant", "value": 1.0}, "c": -1.0}]}"#);
        let cfg = load::<ExplosionRunConfig>(f.path()).unwrap();
        let d = ConfigDiagnostic::from_error(f.path(), cfg.validate().unwrap_err());
        assert_eq!(d.field.as_deref(), Some("cases[0].c"));
        let f = file(r#"{"cases": [{"b": {"kind": "zero"}}], "settings": {"ladder": [10.0, 100.0]}}"#);
        let cfg = load::<ExplosionRunConfig>(f.path()).unwrap();
        let d = ConfigDiagnostic::from_error(f.path(), cfg.validate().unwrap_err());
        assert_eq!(d.field.as_deref(), Some("settings.ladder"));
    }

    #[test]
    fn geometry_defaults() {
        let f = file(r#"{"model": {"kind": "euclidean", "dim": 2, "horizon": [0.0, 1.0]}}"#);
        let cfg = load::<GeometryCheckConfig>(f.path()).unwrap();
        assert_eq!(cfg.probes, 100);
        cfg.validate().unwrap();
    }
}
