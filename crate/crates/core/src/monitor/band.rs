use serde::{Deserialize, Serialize};

use super::MonitorLevel;
use crate::scalar::Real;

/// Warning and error thresholds for one monitored value.
///
/// Values sitting exactly on a threshold resolve to the less severe level, so the
/// good region is closed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "direction", rename_all = "snake_case")]
pub enum Band<T> {
    HighIsBad {
        warn: T,
        error: T,
    },
    LowIsBad {
        warn: T,
        error: T,
    },
    BandIsGood {
        warn_low: T,
        warn_high: T,
        error_low: T,
        error_high: T,
    },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BandError {
    #[error("band bounds must be finite")]
    NonFinite,
    #[error("error bound must be strictly more extreme than the warning bound")]
    Ordering,
}

impl<T: Real> Band<T> {
    pub fn high_is_bad(warn: T, error: T) -> Result<Self, BandError> {
        Self::HighIsBad { warn, error }.validated()
    }

    pub fn low_is_bad(warn: T, error: T) -> Result<Self, BandError> {
        Self::LowIsBad { warn, error }.validated()
    }

    pub fn band_is_good(
        warn_low: T,
        warn_high: T,
        error_low: T,
        error_high: T,
    ) -> Result<Self, BandError> {
        Self::BandIsGood {
            warn_low,
            warn_high,
            error_low,
            error_high,
        }
        .validated()
    }

    /// Symmetric tolerance band around a nominal value, e.g. a publish rate.
    pub fn around(nominal: T, warn_frac: T, error_frac: T) -> Result<Self, BandError> {
        let one = T::one();
        Self::band_is_good(
            nominal * (one - warn_frac),
            nominal * (one + warn_frac),
            nominal * (one - error_frac),
            nominal * (one + error_frac),
        )
    }

    pub fn validated(self) -> Result<Self, BandError> {
        self.validate().map(|_| self)
    }

    pub fn validate(&self) -> Result<(), BandError> {
        let finite = |xs: &[T]| xs.iter().all(|x| x.is_finite());
        match *self {
            Band::HighIsBad { warn, error } => {
                if !finite(&[warn, error]) {
                    return Err(BandError::NonFinite);
                }
                if error <= warn {
                    return Err(BandError::Ordering);
                }
            }
            Band::LowIsBad { warn, error } => {
                if !finite(&[warn, error]) {
                    return Err(BandError::NonFinite);
                }
                if error >= warn {
                    return Err(BandError::Ordering);
                }
            }
            Band::BandIsGood {
                warn_low,
                warn_high,
                error_low,
                error_high,
            } => {
                if !finite(&[warn_low, warn_high, error_low, error_high]) {
                    return Err(BandError::NonFinite);
                }
                if !(error_low < warn_low && warn_low <= warn_high && warn_high < error_high) {
                    return Err(BandError::Ordering);
                }
            }
        }
        Ok(())
    }

    /// Level of `value` against this band. Non-finite samples are always `Error`.
    pub fn classify(&self, value: T) -> MonitorLevel {
        if !value.is_finite() {
            return MonitorLevel::Error;
        }
        match *self {
            Band::HighIsBad { warn, error } => {
                if value <= warn {
                    MonitorLevel::Ok
                } else if value <= error {
                    MonitorLevel::Warn
                } else {
                    MonitorLevel::Error
                }
            }
            Band::LowIsBad { warn, error } => {
                if value >= warn {
                    MonitorLevel::Ok
                } else if value >= error {
                    MonitorLevel::Warn
                } else {
                    MonitorLevel::Error
                }
            }
            Band::BandIsGood {
                warn_low,
                warn_high,
                error_low,
                error_high,
            } => {
                if value >= warn_low && value <= warn_high {
                    MonitorLevel::Ok
                } else if value >= error_low && value <= error_high {
                    MonitorLevel::Warn
                } else {
                    MonitorLevel::Error
                }
            }
        }
    }
}

/// Free-function form of [`Band::classify`].
pub fn classify<T: Real>(value: T, band: &Band<T>) -> MonitorLevel {
    band.classify(value)
}
