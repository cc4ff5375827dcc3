//! Host clock offset from a four-timestamp request/response exchange.

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClockError {
    #[error("non-causal timestamps")]
    NonCausal,
}

/// Offset of the responder's clock relative to the requester's, in ns.
///
/// `t0`/`t3` are the request send and response receive times on the requester's
/// clock, `t1`/`t2` the request receive and response send times on the responder's.
/// Positive means the responder is ahead.
pub fn estimate_clock_offset(t0: i64, t1: i64, t2: i64, t3: i64) -> Result<i64, ClockError> {
    if t0 > t3 || t1 > t2 {
        return Err(ClockError::NonCausal);
    }
    let sum = (t1 as i128 - t0 as i128) + (t2 as i128 - t3 as i128);
    Ok((sum / 2) as i64)
}

/// Round-trip network delay of the same exchange, in ns.
pub fn round_trip_delay(t0: i64, t1: i64, t2: i64, t3: i64) -> Result<i64, ClockError> {
    if t0 > t3 || t1 > t2 {
        return Err(ClockError::NonCausal);
    }
    Ok(((t3 as i128 - t0 as i128) - (t2 as i128 - t1 as i128)) as i64)
}
