//! Event log persistence and long-term-autonomy metrics.

mod compute;
mod event;
mod report;
mod schedule;
mod store;

pub use compute::{
    classify_recoveries, compute_autonomy_percentage, compute_distance_and_motion, compute_tsl,
    time_in_mode_s, DistanceMotion, ModeTimeline, RecoveryVerdict, NAVIGATION_RADIUS_M,
    RECOVERY_WINDOW_S,
};
pub use event::{
    round6, round_pose, ActionOutcome, Event, EventKind, EventLog, LogError, RobotMode,
};
pub use report::{report, DockingStats, MetricsReport, RecoveryStats, TslSummary};
pub use schedule::{DutySchedule, ScheduleError, Weekday};
pub use store::{
    read_log, EventStore, FileStore, MemoryStore, StoreError, DEFAULT_PENDING_CAPACITY,
    DEFAULT_SYNC_EVERY,
};
