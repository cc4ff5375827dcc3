//! Runner backed by real OS processes.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};

use super::config::EntitySpec;
use super::runner::{Probe, Runner, RunnerError};

/// Launches entities as child processes. Standard output and error of each entity
/// go to `<log_dir>/<id>.log`, truncated on every start. The scratch directory is
/// passed as `LTA_SCRATCH`. A process that creates `$LTA_SCRATCH/ready` is
/// reported ready before its startup grace elapses.
#[derive(Debug)]
pub struct SubprocessRunner {
    log_dir: PathBuf,
    children: BTreeMap<String, Child>,
    scratch: BTreeMap<String, PathBuf>,
}

impl SubprocessRunner {
    pub fn new(log_dir: impl Into<PathBuf>) -> Self {
        Self {
            log_dir: log_dir.into(),
            children: BTreeMap::new(),
            scratch: BTreeMap::new(),
        }
    }

    pub fn log_path(&self, id: &str) -> PathBuf {
        self.log_dir.join(format!("{id}.log"))
    }

    pub fn pid(&self, id: &str) -> Option<u32> {
        self.children.get(id).map(Child::id)
    }
}

impl Runner for SubprocessRunner {
    fn start(&mut self, spec: &EntitySpec, scratch: Option<&Path>) -> Result<(), RunnerError> {
        let spawn_err = |source| RunnerError::Spawn {
            entity: spec.id.clone(),
            source,
        };
        std::fs::create_dir_all(&self.log_dir).map_err(spawn_err)?;
        let log = File::create(self.log_path(&spec.id)).map_err(spawn_err)?;
        let err = log.try_clone().map_err(spawn_err)?;
        let mut cmd = Command::new(&spec.command.program);
        cmd.args(&spec.command.args)
            .envs(&spec.command.env)
            .env("LTA_ENTITY", &spec.id)
            .stdin(Stdio::null())
            .stdout(log)
            .stderr(err);
        if let Some(dir) = scratch {
            cmd.env("LTA_SCRATCH", dir).current_dir(dir);
            self.scratch.insert(spec.id.clone(), dir.to_path_buf());
        }
        let child = cmd.spawn().map_err(spawn_err)?;
        if let Some(mut old) = self.children.insert(spec.id.clone(), child) {
            let _ = old.kill();
            let _ = old.wait();
        }
        Ok(())
    }

    fn request_stop(&mut self, id: &str) -> Result<(), RunnerError> {
        let Some(child) = self.children.get_mut(id) else {
            return Ok(());
        };
        if child.try_wait().ok().flatten().is_some() {
            return Ok(());
        }
        let pid = child.id() as libc::pid_t;
        // SAFETY: signalling a child we spawned and have not yet reaped.
        let rc = unsafe { libc::kill(pid, libc::SIGTERM) };
        if rc != 0 {
            return Err(RunnerError::Signal {
                entity: id.to_string(),
                source: std::io::Error::last_os_error(),
            });
        }
        Ok(())
    }

    fn kill(&mut self, id: &str) -> Result<(), RunnerError> {
        if let Some(child) = self.children.get_mut(id) {
            match child.kill() {
                Ok(()) => {
                    let _ = child.wait();
                }
                Err(e) if e.kind() == std::io::ErrorKind::InvalidInput => {}
                Err(source) => {
                    return Err(RunnerError::Signal {
                        entity: id.to_string(),
                        source,
                    })
                }
            }
        }
        Ok(())
    }

    fn probe(&mut self, id: &str) -> Probe {
        let Some(child) = self.children.get_mut(id) else {
            return Probe::Exited;
        };
        match child.try_wait() {
            Ok(None) => {
                if self
                    .scratch
                    .get(id)
                    .is_some_and(|d| d.join("ready").exists())
                {
                    Probe::Ready
                } else {
                    Probe::Alive
                }
            }
            _ => Probe::Exited,
        }
    }
}

impl Drop for SubprocessRunner {
    fn drop(&mut self) {
        for child in self.children.values_mut() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}
