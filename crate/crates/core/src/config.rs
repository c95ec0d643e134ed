//! Run configuration, read from JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exchange::DiagnosticSetup;
use crate::integrate::IntegratorConfig;
use crate::pathint::SliceGrid;

/// Version stamped into every CSV/JSON document the tools write.
pub const FORMAT_VERSION: u32 = 1;

/// Environment variable naming a config file.
pub const CONFIG_ENV: &str = "HKPATH_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathintSection {
    pub mass: f64,
    pub grid: SliceGrid,
}

impl Default for PathintSection {
    fn default() -> Self {
        Self { mass: 1.0, grid: SliceGrid::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from(".") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    pub integrator: IntegratorConfig,
    pub pathint: PathintSection,
    pub lab: DiagnosticSetup,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            format_version: FORMAT_VERSION,
            integrator: IntegratorConfig::default(),
            pathint: PathintSection::default(),
            lab: DiagnosticSetup::default(),
            output: OutputSection::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(invalid(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        if !(self.pathint.mass > 0.0 && self.pathint.mass.is_finite()) {
            return Err(invalid("pathint.mass must be positive"));
        }
        self.integrator.validate()?;
        self.pathint.grid.validate()?;
        self.lab.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Self::from_json(&text)
    }

    /// An explicit path wins, then `HKPATH_CONFIG`, then the defaults.
    pub fn load(explicit: Option<&Path>) -> Result<Self> {
        match explicit {
            Some(p) => Self::from_file(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::from_file(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(RunConfig::from_json(&c.to_json().unwrap()).unwrap(), c);
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let c = RunConfig::from_json(r#"{"lab": {"seed": 42}, "pathint": {"mass": 2.0}}"#).unwrap();
        assert_eq!(c.lab.seed, 42);
        assert_eq!(c.pathint.mass, 2.0);
        assert_eq!(c.integrator, IntegratorConfig::default());
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(RunConfig::from_json(r#"{"format_version": 7}"#).is_err());
        assert!(RunConfig::from_json(r#"{"lab": {"eps": -1.0}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"integrator": {"tol_1d": 0.0}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"unknown": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"lab": {"seed": -3}}"#).is_err());
    }

    #[test]
    fn explicit_path_is_read() {
        let dir = std::env::temp_dir().join(format!("hkpath-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("run.json");
        std::fs::write(&p, r#"{"lab": {"samples": 5}}"#).unwrap();
        assert_eq!(RunConfig::load(Some(&p)).unwrap().lab.samples, 5);
        assert!(RunConfig::load(Some(&dir.join("missing.json"))).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
