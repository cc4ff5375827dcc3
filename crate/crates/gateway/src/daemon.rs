//! The supervision daemon: a simulated robot driven against the wall clock,
//! escalating to people through the gateway.

use std::future::Future;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use lta_core::metrics::FileStore;
use lta_core::session::Supervisor;
use lta_core::sim::{Scenario, SimError, Simulator};
use lta_core::time::secs;
use serde::Deserialize;
use tokio::time::{Instant, MissedTickBehavior};

use crate::backend::SimBackend;
use crate::routes::Gateway;

/// Most simulation steps taken per wall tick, so the lock is never held long.
pub const MAX_STEPS_PER_TICK: u64 = 20_000;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DaemonConfig {
    #[serde(default = "default_listen")]
    pub listen: SocketAddr,
    /// Base of session URLs in notifications. Defaults to `http://<listen>`.
    #[serde(default)]
    pub public_url: Option<String>,
    #[serde(default)]
    pub token: Option<String>,
    /// Relative paths resolve against the config file's directory.
    pub scenario: PathBuf,
    /// Simulated seconds per wall second.
    #[serde(default = "default_accel")]
    pub accel: f64,
    #[serde(default)]
    pub store: Option<PathBuf>,
    /// Let simulated supervisors answer escalations instead of people.
    #[serde(default)]
    pub simulated_supervisors: bool,
    /// Replaces the scenario's roster.
    #[serde(default)]
    pub roster: Option<Vec<Supervisor>>,
    #[serde(default = "default_tick_ms")]
    pub tick_ms: u64,
}

fn default_listen() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}

fn default_accel() -> f64 {
    1.0
}

fn default_tick_ms() -> u64 {
    100
}

impl DaemonConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let mut config = Self::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            if config.scenario.is_relative() {
                config.scenario = dir.join(&config.scenario);
            }
            if let Some(store) = config.store.as_mut().filter(|s| s.is_relative()) {
                *store = dir.join(&*store);
            }
        }
        Ok(config)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.accel.is_finite() && self.accel > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "accel must be positive, got {}",
                self.accel
            )));
        }
        if self.tick_ms == 0 {
            return Err(ConfigError::Invalid("tick_ms must be positive".into()));
        }
        Ok(())
    }

    pub fn public_url(&self) -> String {
        self.public_url
            .clone()
            .unwrap_or_else(|| format!("http://{}", self.listen))
    }

    /// Apply the daemon's settings to a scenario and build the backend.
    pub fn backend(&self, mut scenario: Scenario) -> Result<SimBackend, DaemonError> {
        scenario.supervisors.base_url = self.public_url();
        if let Some(roster) = &self.roster {
            scenario.supervisors.roster = roster.clone();
        }
        let mut sim = Simulator::new(scenario)?;
        if !self.simulated_supervisors {
            sim = sim.with_remote_supervisors();
        }
        let store = match &self.store {
            Some(path) => Some(FileStore::open(path)?),
            None => None,
        };
        Ok(SimBackend::new(sim, store))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DaemonError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Store(#[from] lta_core::metrics::StoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Advance the simulation `accel` times faster than the wall clock until the
/// scenario ends or `shutdown` resolves. Events and status go out every tick.
pub async fn drive(
    gateway: Gateway<SimBackend>,
    accel: f64,
    tick: Duration,
    shutdown: impl Future<Output = ()>,
) -> Result<(), DaemonError> {
    let start = Instant::now();
    let (t0, dt) = {
        let b = gateway.lock();
        (b.sim().now(), secs(b.sim().scenario().dt_s).max(1))
    };
    let mut interval = tokio::time::interval(tick);
    interval.set_missed_tick_behavior(MissedTickBehavior::Skip);
    tokio::pin!(shutdown);
    loop {
        tokio::select! {
            _ = &mut shutdown => break,
            _ = interval.tick() => {}
        }
        let finished = {
            let mut b = gateway.lock();
            let sim = b.sim_mut();
            let wall = t0 + secs(start.elapsed().as_secs_f64() * accel);
            let target = wall.min(sim.now() + MAX_STEPS_PER_TICK * dt);
            sim.run_until(target)?;
            sim.is_finished()
        };
        gateway.pump();
        gateway.publish_status();
        if finished {
            tracing::info!("scenario finished");
            break;
        }
    }
    gateway.lock().sim_mut().flush();
    gateway.pump();
    gateway.lock().flush_store()?;
    Ok(())
}
