//! Scenario presets shipped with the crate.

use super::config::RunConfig;
use crate::{Error, Result};

pub const PRESETS: [(&str, &str); 4] = [
    ("fig2", include_str!("../../presets/fig2.toml")),
    ("fig3", include_str!("../../presets/fig3.toml")),
    ("fig4", include_str!("../../presets/fig4.toml")),
    ("hermitian", include_str!("../../presets/hermitian.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset_toml(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn preset(name: &str) -> Result<RunConfig> {
    let text = preset_toml(name).ok_or_else(|| {
        let known: Vec<&str> = preset_names().collect();
        Error::Config(format!("unknown preset {name:?}; available: {}", known.join(", ")))
    })?;
    RunConfig::from_toml(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_parse() {
        for name in preset_names() {
            let cfg = preset(name).unwrap();
            assert_eq!(cfg.name, name);
        }
        assert!(preset("fig9").is_err());
    }

    #[test]
    fn hermitian_preset_has_no_asymmetry() {
        let cfg = preset("hermitian").unwrap();
        assert!(cfg.regions.iter().all(|r| r.g == 0.0));
        assert!(cfg.gains.is_empty());
        assert_eq!(cfg.evolution.n_steps(), 1000);
    }
}
