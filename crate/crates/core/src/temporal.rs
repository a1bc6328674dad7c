//! Time indices and sliding active-time windows.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Timestamp format used for every serialized timestamp.
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeUnit {
    #[serde(rename = "s")]
    Seconds,
    #[serde(rename = "mins")]
    Minutes,
    #[serde(rename = "h")]
    Hours,
    #[serde(rename = "days")]
    Days,
}

impl TimeUnit {
    pub fn millis(self) -> i64 {
        match self {
            TimeUnit::Seconds => 1_000,
            TimeUnit::Minutes => 60_000,
            TimeUnit::Hours => 3_600_000,
            TimeUnit::Days => 86_400_000,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            TimeUnit::Seconds => "s",
            TimeUnit::Minutes => "mins",
            TimeUnit::Hours => "h",
            TimeUnit::Days => "days",
        }
    }

    /// Length of the duration `to - from` expressed in this unit.
    pub fn span(self, from: NaiveDateTime, to: NaiveDateTime) -> f64 {
        millis_between(from, to) as f64 / self.millis() as f64
    }
}

impl fmt::Display for TimeUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for TimeUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s" | "sec" | "secs" | "second" | "seconds" => Ok(TimeUnit::Seconds),
            "m" | "min" | "mins" | "minute" | "minutes" => Ok(TimeUnit::Minutes),
            "h" | "hour" | "hours" => Ok(TimeUnit::Hours),
            "d" | "day" | "days" => Ok(TimeUnit::Days),
            other => Err(Error::Config(format!(
                "unknown time unit `{other}` (expected s, mins, h or days)"
            ))),
        }
    }
}

/// Conversion from observation timestamps to integer time indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeConfig {
    #[serde(rename = "timeUnit")]
    pub unit: TimeUnit,
    #[serde(rename = "timeStep")]
    pub step: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            unit: TimeUnit::Hours,
            step: 1.0,
        }
    }
}

impl TimeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::Config(format!(
                "timeStep must be a positive number, got {}",
                self.step
            )));
        }
        Ok(())
    }

    /// Width of one index in milliseconds.
    fn interval_millis(&self) -> f64 {
        self.step * self.unit.millis() as f64
    }
}

fn millis_between(from: NaiveDateTime, to: NaiveDateTime) -> i64 {
    (to - from).num_milliseconds()
}

/// 1-based index of the left-closed, right-open interval containing
/// `obs_time`, counting from `origin`.
pub fn assign_time_index(
    obs_time: NaiveDateTime,
    origin: NaiveDateTime,
    cfg: &TimeConfig,
) -> Result<u32> {
    cfg.validate()?;
    if obs_time < origin {
        return Err(Error::Domain(format!(
            "observation {obs_time} precedes the origin {origin}"
        )));
    }
    let elapsed = millis_between(origin, obs_time);
    let width = cfg.interval_millis();
    let rounded = width.round();
    let bucket = if (width - rounded).abs() < 1e-6 && rounded >= 1.0 {
        elapsed / rounded as i64
    } else {
        (elapsed as f64 / width).floor() as i64
    };
    u32::try_from(bucket + 1)
        .map_err(|_| Error::Domain(format!("time index overflow for {obs_time}")))
}

/// The inclusive index range `[max(1, t - active_time), t]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeWindow {
    pub t: u32,
    pub lo: u32,
    pub hi: u32,
}

impl TimeWindow {
    #[inline]
    pub fn contains(&self, index: u32) -> bool {
        (self.lo..=self.hi).contains(&index)
    }
}

pub fn window_for(t: u32, active_time: u32) -> Result<TimeWindow> {
    if t < 1 {
        return Err(Error::Domain("time index must be at least 1".into()));
    }
    Ok(TimeWindow {
        t,
        lo: t.saturating_sub(active_time).max(1),
        hi: t,
    })
}

/// Parses a timezone-naive ISO 8601 timestamp.
///
/// Accepts `YYYY-MM-DD HH:MM:SS` (optionally with fractional seconds or a
/// `T` separator), `YYYY-MM-DD HH:MM` and a bare `YYYY-MM-DD`.
pub fn parse_timestamp(s: &str) -> Result<NaiveDateTime> {
    const FORMATS: [&str; 4] = [
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M",
        "%Y-%m-%dT%H:%M",
    ];
    let s = s.trim();
    for fmt in FORMATS {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(t);
        }
    }
    if let Ok(d) = chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).expect("midnight is valid"));
    }
    Err(Error::Domain(format!("unparseable timestamp `{s}`")))
}

pub fn format_timestamp(t: &NaiveDateTime) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}
