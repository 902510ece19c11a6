use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use omtopo_core::LatticeSpec;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::catalog::{self, ScenarioSettings};
use crate::overrides;
use crate::sweep::SweepSpec;
use crate::{CliError, Result};

/// A fully resolved scenario: everything the pipeline needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub spec: LatticeSpec,
    pub settings: ScenarioSettings,
}

/// Scenario entry of a config file. `spec` replaces the built-in spec,
/// `settings` is merged key by key into the built-in settings, and
/// `overrides` are applied last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<LatticeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<Value>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ConfigFile {
    Scenario(ScenarioConfig),
    Sweep(SweepSpec),
}

impl ScenarioConfig {
    /// Config that reproduces a built-in scenario with every value spelled out.
    pub fn builtin(name: &str) -> Result<ScenarioConfig> {
        let sc = catalog::scenario(name)?;
        Ok(ScenarioConfig {
            name: sc.name,
            spec: Some(sc.spec),
            settings: Some(serde_json::to_value(sc.settings).expect("settings serialize")),
            overrides: BTreeMap::new(),
        })
    }

    pub fn resolve(&self) -> Result<Scenario> {
        let mut sc = catalog::scenario(&self.name)?;
        if let Some(spec) = &self.spec {
            sc.spec = spec.clone();
        }
        if let Some(patch) = &self.settings {
            let mut base = serde_json::to_value(&sc.settings).expect("settings serialize");
            merge(&mut base, patch);
            sc.settings = serde_path_to_error::deserialize(base)
                .map_err(|e| CliError::Config(format!("settings.{}: {}", e.path(), e.inner())))?;
        }
        for (k, v) in &self.overrides {
            overrides::apply(&mut sc, k, v.clone())?;
        }
        sc.spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(sc)
    }
}

fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(if path == "." { e.inner().to_string() } else { format!("at `{path}`: {}", e.inner()) })
    })
}

pub fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    parse_config(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn save_config(config: &ConfigFile, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(config).expect("config serializes");
    text.push('\n');
    fs::write(path, text).map_err(CliError::io(path))
}
