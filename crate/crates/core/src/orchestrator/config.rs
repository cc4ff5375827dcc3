//! Configuration documents: named sets of entities, their channels and monitors.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::monitor::{Band, MonitorKind, MonitorSpec};

/// What to execute for an entity. The runner decides how.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ProcessDescriptor {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default)]
    pub env: BTreeMap<String, String>,
}

impl ProcessDescriptor {
    pub fn new(program: impl Into<String>) -> Self {
        Self {
            program: program.into(),
            ..Self::default()
        }
    }

    pub fn arg(mut self, arg: impl Into<String>) -> Self {
        self.args.push(arg.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub name: String,
    pub nominal_hz: f64,
}

fn default_true() -> bool {
    true
}

fn default_grace() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntitySpec {
    pub id: String,
    pub command: ProcessDescriptor,
    /// Defaults to `<id>/heartbeat`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heartbeat: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<ChannelSpec>,
    /// Purge the scratch directory before every start.
    #[serde(default = "default_true")]
    pub clean_state: bool,
    #[serde(default = "default_grace")]
    pub startup_grace_s: f64,
}

impl EntitySpec {
    pub fn new(id: impl Into<String>, command: ProcessDescriptor) -> Self {
        Self {
            id: id.into(),
            command,
            heartbeat: None,
            outputs: Vec::new(),
            clean_state: true,
            startup_grace_s: default_grace(),
        }
    }

    pub fn with_output(mut self, name: impl Into<String>, nominal_hz: f64) -> Self {
        self.outputs.push(ChannelSpec {
            name: name.into(),
            nominal_hz,
        });
        self
    }

    pub fn heartbeat_channel(&self) -> String {
        self.heartbeat
            .clone()
            .unwrap_or_else(|| format!("{}/heartbeat", self.id))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub name: String,
    #[serde(default, rename = "entity")]
    pub entities: Vec<EntitySpec>,
    /// Arbiter tree: `builtin:normal`, `builtin:charging` or a file path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<String>,
    /// Monitors beyond the per-entity liveness and per-channel rate monitors.
    #[serde(default, rename = "monitor", skip_serializing_if = "Vec::is_empty")]
    pub monitors: Vec<MonitorSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub on_enter: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub on_exit: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("configuration `{config}` declares entity `{entity}` twice")]
    DuplicateEntity { config: String, entity: String },
    #[error("configuration `{config}`: heartbeat channel `{channel}` is not unique")]
    DuplicateHeartbeat { config: String, channel: String },
    #[error("entity `{0}` needs a positive startup grace")]
    Grace(String),
    #[error("channel `{0}` needs a positive nominal rate")]
    Rate(String),
    #[error("duplicate configuration `{0}`")]
    DuplicateConfiguration(String),
    #[error("unknown configuration `{0}`")]
    UnknownConfiguration(String),
    #[error("no configurations declared")]
    Empty,
    #[error("monitor `{0}` declared twice")]
    DuplicateMonitor(String),
}

impl Configuration {
    pub fn new(name: impl Into<String>, entities: Vec<EntitySpec>) -> Self {
        Self {
            name: name.into(),
            entities,
            tree: None,
            monitors: Vec::new(),
            on_enter: Vec::new(),
            on_exit: Vec::new(),
        }
    }

    pub fn entity(&self, id: &str) -> Option<&EntitySpec> {
        self.entities.iter().find(|e| e.id == id)
    }

    pub fn entity_ids(&self) -> BTreeSet<&str> {
        self.entities.iter().map(|e| e.id.as_str()).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut ids = BTreeSet::new();
        let mut beats = BTreeSet::new();
        for e in &self.entities {
            if !ids.insert(e.id.as_str()) {
                return Err(ConfigError::DuplicateEntity {
                    config: self.name.clone(),
                    entity: e.id.clone(),
                });
            }
            if !beats.insert(e.heartbeat_channel()) {
                return Err(ConfigError::DuplicateHeartbeat {
                    config: self.name.clone(),
                    channel: e.heartbeat_channel(),
                });
            }
            if !(e.startup_grace_s > 0.0) {
                return Err(ConfigError::Grace(e.id.clone()));
            }
            if let Some(c) = e.outputs.iter().find(|c| !(c.nominal_hz > 0.0)) {
                return Err(ConfigError::Rate(c.name.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for m in self.monitor_specs() {
            if !seen.insert(m.id.clone()) {
                return Err(ConfigError::DuplicateMonitor(m.id));
            }
        }
        Ok(())
    }

    /// Every monitor this configuration declares: liveness per entity, a rate
    /// monitor per output channel, then the explicit ones.
    pub fn monitor_specs(&self) -> Vec<MonitorSpec> {
        let mut out = Vec::new();
        for e in &self.entities {
            out.push(MonitorSpec::new(
                MonitorSpec::liveness_id(&e.id),
                e.id.clone(),
                MonitorKind::Liveness { timeout_s: 3.0 },
            ));
            for c in &e.outputs {
                out.push(MonitorSpec::new(
                    MonitorSpec::rate_id(&c.name),
                    e.id.clone(),
                    MonitorKind::Rate {
                        channel: c.name.clone(),
                        nominal_hz: c.nominal_hz,
                        window_s: 5.0,
                        band: Band::around(c.nominal_hz, 0.2, 0.6).expect("positive nominal rate"),
                    },
                ));
            }
        }
        out.extend(self.monitors.iter().cloned());
        out
    }
}

/// A configuration document: every configuration the system may switch between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationSet {
    pub initial: String,
    #[serde(rename = "configuration")]
    pub configurations: Vec<Configuration>,
}

impl ConfigurationSet {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration set serializes")
    }

    pub fn get(&self, name: &str) -> Option<&Configuration> {
        self.configurations.iter().find(|c| c.name == name)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.configurations.is_empty() {
            return Err(ConfigError::Empty);
        }
        let mut names = BTreeSet::new();
        for c in &self.configurations {
            if !names.insert(c.name.as_str()) {
                return Err(ConfigError::DuplicateConfiguration(c.name.clone()));
            }
            c.validate()?;
        }
        if self.get(&self.initial).is_none() {
            return Err(ConfigError::UnknownConfiguration(self.initial.clone()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ConfigurationSet {
        ConfigurationSet::from_toml(
            r#"
initial = "normal"

[[configuration]]
name = "normal"
tree = "builtin:normal"

[[configuration.entity]]
id = "localization"
command = { program = "/usr/bin/true" }
outputs = [{ name = "pose", nominal_hz = 10.0 }]

[[configuration.entity]]
id = "base"
command = { program = "/usr/bin/true", args = ["--port", "1"] }
startup_grace_s = 2.0

[[configuration.monitor]]
id = "cpu"
entity = "host"
kind = "cpu"
band = { direction = "high_is_bad", warn = 80.0, error = 95.0 }

[[configuration]]
name = "charging"
tree = "builtin:charging"

[[configuration.entity]]
id = "base"
command = { program = "/usr/bin/true", args = ["--port", "1"] }
"#,
        )
        .unwrap()
    }

    #[test]
    fn parses_and_declares_monitors() {
        let set = sample();
        set.validate().unwrap();
        let normal = set.get("normal").unwrap();
        let ids: Vec<_> = normal.monitor_specs().into_iter().map(|m| m.id).collect();
        assert_eq!(
            ids,
            ["liveness:localization", "rate:pose", "liveness:base", "cpu"]
        );
        assert_eq!(normal.entity("base").unwrap().startup_grace_s, 2.0);
        assert_eq!(ConfigurationSet::from_toml(&set.to_toml()).unwrap(), set);
    }

    #[test]
    fn duplicate_entity_rejected() {
        let mut set = sample();
        let dup = set.configurations[1].entities[0].clone();
        set.configurations[1].entities.push(dup);
        assert!(matches!(
            set.validate(),
            Err(ConfigError::DuplicateEntity { .. })
        ));
    }

    #[test]
    fn zero_grace_rejected() {
        let mut set = sample();
        set.configurations[0].entities[0].startup_grace_s = 0.0;
        assert_eq!(
            set.validate(),
            Err(ConfigError::Grace("localization".into()))
        );
    }
}
