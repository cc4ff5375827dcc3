use super::{MonitorLevel, MonitorReport, MonitorSpec, Unit};
use crate::time::{to_secs, Nanos};

/// Liveness of an entity from its last heartbeat. There is no warning tier.
pub fn check_liveness(
    entity_id: &str,
    last_heartbeat: Option<Nanos>,
    now: Nanos,
    timeout: Nanos,
) -> MonitorReport {
    assert!(timeout > 0, "liveness timeout must be positive");
    let id = MonitorSpec::liveness_id(entity_id);
    match last_heartbeat {
        None => MonitorReport::with_level(
            id,
            entity_id,
            f64::INFINITY,
            Unit::Seconds,
            MonitorLevel::Error,
            now,
            "never responded",
        ),
        Some(last) => {
            let delta = now.saturating_sub(last);
            let (level, message) = if delta <= timeout {
                (MonitorLevel::Ok, String::new())
            } else {
                (
                    MonitorLevel::Error,
                    format!("no heartbeat for {:.1}s", to_secs(delta)),
                )
            };
            MonitorReport::with_level(
                id,
                entity_id,
                to_secs(delta),
                Unit::Seconds,
                level,
                now,
                message,
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::secs;

    #[test]
    fn examples() {
        let timeout = secs(3.0);
        let now = secs(100.0);
        assert_eq!(
            check_liveness("nav", Some(now - timeout / 2), now, timeout).level,
            MonitorLevel::Ok
        );
        assert_eq!(
            check_liveness("nav", Some(now - timeout), now, timeout).level,
            MonitorLevel::Ok
        );
        assert_eq!(
            check_liveness("nav", Some(now - 2 * timeout), now, timeout).level,
            MonitorLevel::Error
        );
        let never = check_liveness("nav", None, now, timeout);
        assert_eq!(never.level, MonitorLevel::Error);
        assert_eq!(never.message, "never responded");
        assert_eq!(&*never.monitor_id, "liveness:nav");
    }
}
