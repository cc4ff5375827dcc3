//! Health monitors, threshold classification and the status bus.

mod aggregate;
mod band;
mod bus;
mod clock;
mod level;
mod liveness;
mod rate;
mod report;
mod spec;

pub use aggregate::{aggregate, AggregateError, AggregatedStatus, Aggregator, STALENESS_PERIODS};
pub use band::{classify, Band, BandError};
pub use bus::StatusBus;
pub use clock::{estimate_clock_offset, round_trip_delay, ClockError};
pub use level::MonitorLevel;
pub use liveness::check_liveness;
pub use rate::{measure_rate, RateError, RateWindow};
pub use report::{decode_report_line, encode_report_line, MonitorReport, Unit};
pub use spec::{MonitorKind, MonitorSpec};
