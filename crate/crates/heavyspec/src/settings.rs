//! TOML configuration files. Missing keys take their defaults.

use std::fs;
use std::path::Path;

use heavyspec_core::Config;

use crate::formats::{FormatError, Result};

pub fn config_from_toml(text: &str) -> Result<Config> {
    Ok(toml::from_str(text)?)
}

pub fn config_to_toml(c: &Config) -> Result<String> {
    Ok(toml::to_string_pretty(c)?)
}

pub fn load_config(path: &Path) -> Result<Config> {
    fs::read_to_string(path)
        .map_err(FormatError::from)
        .and_then(|s| config_from_toml(&s))
        .map_err(|e| FormatError::File { path: path.display().to_string(), source: Box::new(e) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = Config::default();
        let text = config_to_toml(&c).unwrap();
        assert_eq!(config_from_toml(&text).unwrap(), c);
        for key in ["[guards]", "[wiring]", "[prescribe]", "[eigen]", "reduction = 0.2"] {
            assert!(text.contains(key), "{key} missing from\n{text}");
        }
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = config_from_toml("seed = 7\n[guards]\nreduction = 0.3\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.guards.reduction, 0.3);
        assert_eq!(c.guards.corridor_mass, Config::default().guards.corridor_mass);
        assert_eq!(c.wiring, Config::default().wiring);
    }

    #[test]
    fn unknown_types_are_rejected() {
        assert!(config_from_toml("seed = \"x\"\n").is_err());
    }
}
