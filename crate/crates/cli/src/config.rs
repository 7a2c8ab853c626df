use std::fs;
use std::path::{Path, PathBuf};

use raformer_core::{RaformerConfig, WireSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_MASK_LEN: usize = 80;

/// JSON run configuration. The top-level `seed` is authoritative: the
/// resolved form copies it into the model and wire sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: RaformerConfig,
    pub wire: WireSpec,
    /// Frames per generated mask sequence.
    pub len: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub weights: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: RaformerConfig::default(),
            wire: WireSpec::default(),
            len: DEFAULT_MASK_LEN,
            seed: 0,
            out: None,
            manifest: None,
            weights: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::config(format!("config: {e}")))
    }

    /// Reads `path`, or returns the defaults when no path is given.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                RunConfig::from_json(&text)
                    .map_err(|e| CliError::config(format!("{}: {}", p.display(), e.message)))
            }
        }
    }

    /// Propagates the seed, materializes derived defaults and validates.
    pub fn resolve(mut self) -> CliResult<Self> {
        self.model.seed = self.seed;
        self.wire.seed = self.seed;
        self.model = self.model.resolved();
        self.model.validate()?;
        self.wire.validate(self.canvas())?;
        if self.len == 0 {
            return Err(CliError::config("len must be at least 1"));
        }
        Ok(self)
    }

    pub fn canvas(&self) -> (usize, usize) {
        (self.model.height, self.model.width)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config always serializes")
    }

    /// Echo stored next to outputs: the output path is left out so the
    /// same run written to two places produces identical directories.
    pub fn to_replay_json(&self) -> String {
        RunConfig { out: None, ..self.clone() }.to_json() + "\n"
    }
}

/// Prints the effective configuration to standard error before any work.
pub fn echo(label: &str, json: &str) {
    eprintln!("effective {label} configuration:\n{json}");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_fields_are_config_errors() {
        let err = RunConfig::from_json(r#"{"modle": {}}"#).unwrap_err();
        assert_eq!(err.code, crate::error::ExitCode::Config);
        let err = RunConfig::from_json(r#"{"model": {"layer": 3}}"#).unwrap_err();
        assert_eq!(err.code, crate::error::ExitCode::Config);
    }

    #[test]
    fn resolve_propagates_seed_and_keep() {
        let cfg = RunConfig { seed: 9, ..Default::default() }.resolve().unwrap();
        assert_eq!((cfg.model.seed, cfg.wire.seed), (9, 9));
        assert_eq!(cfg.model.keep, Some(27));
        let again = RunConfig::from_json(&cfg.to_json()).unwrap().resolve().unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn invalid_model_is_rejected() {
        let mut cfg = RunConfig::default();
        cfg.model.window_h = 7;
        assert_eq!(cfg.resolve().unwrap_err().code, crate::error::ExitCode::Config);
    }
}
