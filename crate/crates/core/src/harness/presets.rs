use super::experiment::ExperimentConfig;
use crate::error::{Error, Result};

const PRESETS: [(&str, &str); 6] = [
    ("rotation-measnoise", include_str!("../../presets/rotation-measnoise.json")),
    ("rotation-hankel", include_str!("../../presets/rotation-hankel.json")),
    ("linear-measnoise", include_str!("../../presets/linear-measnoise.json")),
    ("linear-hankel", include_str!("../../presets/linear-hankel.json")),
    ("sl-measnoise", include_str!("../../presets/sl-measnoise.json")),
    ("sl-hankel", include_str!("../../presets/sl-hankel.json")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// Bundled config by name.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let text = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::invalid(format!("unknown preset '{name}'; known: {}", preset_names().collect::<Vec<_>>().join(", "))))?;
    ExperimentConfig::from_json(text)
}

/// `(name, description)` of every bundled preset.
pub fn list_presets() -> Result<Vec<(String, String)>> {
    preset_names().map(|n| preset(n).map(|c| (c.name, c.description))).collect()
}

/// Loads `spec` as a file if one exists, otherwise as a preset name.
/// `presets/<name>.json` resolves to the bundled preset when no such file exists.
pub fn resolve_config(spec: &str) -> Result<ExperimentConfig> {
    let path = std::path::Path::new(spec);
    if path.is_file() {
        return ExperimentConfig::from_json(&std::fs::read_to_string(path)?);
    }
    let name = spec.strip_prefix("presets/").unwrap_or(spec);
    let name = name.strip_suffix(".json").unwrap_or(name);
    preset(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        let all = list_presets().unwrap();
        assert_eq!(all.len(), 6);
        for (name, desc) in all {
            let cfg = preset(&name).unwrap();
            assert_eq!(cfg.name, name);
            assert!(!desc.is_empty());
            assert_eq!(cfg.base_seed, 2024);
        }
    }

    #[test]
    fn resolution_by_name_and_path() {
        assert_eq!(resolve_config("presets/sl-hankel.json").unwrap(), preset("sl-hankel").unwrap());
        assert_eq!(resolve_config("linear-hankel").unwrap().name, "linear-hankel");
        assert!(resolve_config("no-such-thing").is_err());
    }

    #[test]
    fn config_json_roundtrip() {
        let cfg = preset("rotation-hankel").unwrap();
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.digest(), cfg.digest());
    }

    #[test]
    fn unknown_fields_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&preset("linear-hankel").unwrap().to_json().unwrap()).unwrap();
        v["colour"] = serde_json::json!(1);
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
    }
}
