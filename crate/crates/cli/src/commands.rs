use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use lta_core::docking::{
    simulate_docking, ApproachCone, DockingOutcome, DockingParams, Pose, TriangleLandmark,
};
use lta_core::metrics::{report, DutySchedule, EventLog, LogError};
use lta_core::scalar::wrap_angle;
use lta_core::sim::{Scenario, ScenarioError, SimError, Simulator};
use lta_core::time::to_secs;
use lta_gateway::daemon::{drive, ConfigError, DaemonConfig, DaemonError};
use lta_gateway::{serve, Dispatcher, Gateway};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::format::{event_line, DockDemo, DockRun, SimSummary};
use crate::{Cli, Command, DaemonArgs, DockDemoArgs, Format, ReplayArgs, ReportArgs, SimArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Scenario {
        path: String,
        #[source]
        source: ScenarioError,
    },
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Log {
        path: String,
        #[source]
        source: LogError,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Daemon(#[from] DaemonError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for bad input, 1 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Scenario { .. }
            | CliError::Input { .. }
            | CliError::Config(_)
            | CliError::Usage(_) => 2,
            CliError::Log { .. } | CliError::Sim(_) | CliError::Daemon(_) | CliError::Io { .. } => {
                1
            }
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_scenario(path: &Path, seed: Option<u64>) -> Result<Scenario, CliError> {
    let mut scenario =
        Scenario::from_toml(&read_text(path)?).map_err(|source| CliError::Scenario {
            path: path.display().to_string(),
            source,
        })?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

fn load_log(path: &Path) -> Result<EventLog, CliError> {
    if !path.exists() {
        return Err(CliError::Input {
            path: path.display().to_string(),
            message: "no such file".into(),
        });
    }
    EventLog::read_file(path).map_err(|source| CliError::Log {
        path: path.display().to_string(),
        source,
    })
}

fn stdout_write(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(io_err(Path::new("<stdout>")))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Daemon(args) => daemon(args),
        Command::Sim(args) => sim(args, cli.format),
        Command::Report(args) => run_report(args, cli.format),
        Command::Replay(args) => replay(args, cli.format),
        Command::DockDemo(args) => dock_demo(args, cli.format),
    }
}

fn sim(args: SimArgs, format: Format) -> Result<(), CliError> {
    let scenario = load_scenario(&args.scenario, args.seed)?;
    let summary_base = (scenario.name.clone(), scenario.seed, scenario.days);
    let log = Simulator::new(scenario).and_then(|mut sim| {
        sim.run_until(sim.horizon())?;
        Ok(sim.finish())
    })?;
    write_log(&log, &args.out)?;
    let summary = SimSummary {
        scenario: summary_base.0,
        seed: summary_base.1,
        days: summary_base.2,
        events: log.len(),
        out: args.out.display().to_string(),
    };
    match format {
        Format::Human => stdout_write(&summary.human()),
        Format::Machine => {
            stdout_write(&(serde_json::to_string(&summary).expect("summary serializes") + "\n"))
        }
    }
}

fn write_log(log: &EventLog, path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut w = std::io::BufWriter::new(file);
    log.write_to(&mut w)
        .and_then(|_| w.flush())
        .map_err(io_err(path))
}

fn schedule_for(args: &ReportArgs) -> Result<DutySchedule, CliError> {
    if let Some(path) = &args.schedule {
        return DutySchedule::from_toml(&read_text(path)?).map_err(|e| CliError::Input {
            path: path.display().to_string(),
            message: e.to_string(),
        });
    }
    if let Some(path) = &args.scenario {
        return Ok(load_scenario(path, None)?.schedule);
    }
    Ok(DutySchedule::office_hours())
}

fn run_report(args: ReportArgs, format: Format) -> Result<(), CliError> {
    let schedule = schedule_for(&args)?;
    let log = load_log(&args.log)?;
    let r = report(&log, &schedule);
    match format {
        Format::Human => stdout_write(&r.render_human()),
        Format::Machine => stdout_write(&r.render_machine()),
    }
}

fn replay(args: ReplayArgs, format: Format) -> Result<(), CliError> {
    if let Some(a) = args.accel {
        if !(a.is_finite() && a > 0.0) {
            return Err(CliError::Usage(format!(
                "--accel must be positive, got {a}"
            )));
        }
    }
    let log = load_log(&args.log)?;
    let mut out = std::io::stdout().lock();
    let mut previous = log.start();
    for e in log.events() {
        if !args.kinds.is_empty() && !args.kinds.iter().any(|k| k == e.kind.name()) {
            continue;
        }
        if let (Some(accel), Some(prev)) = (args.accel, previous) {
            let wait = to_secs(e.t.saturating_sub(prev)) / accel;
            if wait > 0.0 {
                out.flush().map_err(io_err(Path::new("<stdout>")))?;
                std::thread::sleep(Duration::from_secs_f64(wait));
            }
        }
        previous = Some(e.t);
        let line = match format {
            Format::Human => event_line(e) + "\n",
            Format::Machine => e.to_line(),
        };
        if let Err(err) = out.write_all(line.as_bytes()) {
            // A closed pipe (e.g. `| head`) ends the replay quietly.
            if err.kind() == std::io::ErrorKind::BrokenPipe {
                return Ok(());
            }
            return Err(io_err(Path::new("<stdout>"))(err));
        }
    }
    out.flush().map_err(io_err(Path::new("<stdout>")))
}

fn dock_demo(args: DockDemoArgs, format: Format) -> Result<(), CliError> {
    if !(args.sigma.is_finite() && args.sigma >= 0.0) {
        return Err(CliError::Usage(format!(
            "--sigma must be non-negative, got {}",
            args.sigma
        )));
    }
    let landmark = TriangleLandmark::<f64>::default();
    let mut params = DockingParams::<f64>::default();
    params.scan = params.scan.with_sigma(args.sigma);
    let cone = ApproachCone::default();
    let station = Pose::origin();
    let dock = landmark.dock_pose(station);
    let mut demo = DockDemo {
        seed: args.seed,
        sigma_m: args.sigma,
        docked: 0,
        total: args.runs,
        worst_position_error_m: 0.0,
        worst_heading_error_deg: 0.0,
        runs: Vec::with_capacity(args.runs as usize),
    };
    for run in 0..args.runs {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        rng.set_stream(run as u64);
        let start = cone.sample(&landmark, station, &mut rng);
        // Bearing of the start seen from the dock, relative to straight out in front.
        let out_axis = dock.theta + std::f64::consts::PI;
        let bearing = wrap_angle((start.y - dock.y).atan2(start.x - dock.x) - out_axis);
        let facing = (dock.y - start.y).atan2(dock.x - start.x);
        let outcome = simulate_docking(start, station, &landmark, &params, None, &mut rng);
        let mut row = DockRun {
            run,
            range_m: start.distance(dock),
            bearing_deg: bearing.to_degrees(),
            yaw_deg: wrap_angle(start.theta - facing).to_degrees(),
            docked: outcome.is_docked(),
            position_error_m: None,
            heading_error_deg: None,
            failure: None,
            time_s: outcome.time_s(),
        };
        match outcome {
            DockingOutcome::Docked {
                position_error,
                heading_error,
                ..
            } => {
                demo.docked += 1;
                demo.worst_position_error_m = demo.worst_position_error_m.max(position_error);
                demo.worst_heading_error_deg =
                    demo.worst_heading_error_deg.max(heading_error.to_degrees());
                row.position_error_m = Some(position_error);
                row.heading_error_deg = Some(heading_error.to_degrees());
            }
            DockingOutcome::Failed { reason, .. } => row.failure = Some(reason.to_string()),
        }
        demo.runs.push(row);
    }
    match format {
        Format::Human => stdout_write(&demo.human()),
        Format::Machine => {
            stdout_write(&(serde_json::to_string_pretty(&demo).expect("demo serializes") + "\n"))
        }
    }
}

fn daemon(args: DaemonArgs) -> Result<(), CliError> {
    let mut config = DaemonConfig::read(&args.config)?;
    if let Some(path) = args.scenario {
        config.scenario = path;
    }
    if let Some(accel) = args.accel {
        if !(accel.is_finite() && accel > 0.0) {
            return Err(CliError::Usage(format!(
                "--accel must be positive, got {accel}"
            )));
        }
        config.accel = accel;
    }
    if let Some(store) = args.store {
        config.store = Some(store);
    }
    let scenario = load_scenario(&config.scenario, args.seed)?;
    let runtime = tokio::runtime::Runtime::new().map_err(io_err(Path::new("<runtime>")))?;
    runtime.block_on(run_daemon(config, scenario))
}

async fn run_daemon(config: DaemonConfig, scenario: Scenario) -> Result<(), CliError> {
    let backend = config.backend(scenario)?;
    let dispatcher = Dispatcher::webhooks();
    let gateway = match &config.token {
        Some(token) => Gateway::with_token(backend, dispatcher, token.clone()),
        None => Gateway::new(backend, dispatcher),
    };
    let listener = tokio::net::TcpListener::bind(config.listen)
        .await
        .map_err(io_err(&PathBuf::from(config.listen.to_string())))?;
    tracing::info!(
        listen = %config.listen,
        accel = config.accel,
        store = ?config.store,
        "daemon up; sessions at {}/sessions",
        config.public_url()
    );
    let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(serve(listener, gateway.clone(), async move {
        let _ = stop_rx.await;
    }));
    let result = drive(
        gateway,
        config.accel,
        Duration::from_millis(config.tick_ms),
        stop_signal(),
    )
    .await;
    let _ = stop_tx.send(());
    if let Ok(Err(e)) = server.await {
        tracing::warn!(error = %e, "gateway stopped with an error");
    }
    result.map_err(CliError::from)
}

async fn stop_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        match signal(SignalKind::terminate()) {
            Ok(mut term) => {
                tokio::select! {
                    _ = tokio::signal::ctrl_c() => {}
                    _ = term.recv() => {}
                }
            }
            Err(_) => {
                let _ = tokio::signal::ctrl_c().await;
            }
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
    tracing::info!("stopping");
}
