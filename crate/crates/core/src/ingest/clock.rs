use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::DayIndex;

pub const SECONDS_PER_DAY: i64 = 86_400;

/// Maps epoch seconds to day buckets with a fixed local-midnight offset.
///
/// Day 0 starts at local midnight of `epoch_date`, where local time is UTC
/// shifted by `utc_offset_s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DayClock {
    epoch_date: NaiveDate,
    utc_offset_s: i32,
    epoch_ts: i64,
}

impl DayClock {
    pub fn new(epoch_date: NaiveDate, utc_offset_s: i32) -> Self {
        let unix = NaiveDate::from_ymd_opt(1970, 1, 1).unwrap();
        let days = (epoch_date - unix).num_days();
        Self { epoch_date, utc_offset_s, epoch_ts: days * SECONDS_PER_DAY - utc_offset_s as i64 }
    }

    pub fn epoch_date(&self) -> NaiveDate {
        self.epoch_date
    }

    pub fn utc_offset_s(&self) -> i32 {
        self.utc_offset_s
    }

    pub fn day_of(&self, ts: i64) -> DayIndex {
        (ts - self.epoch_ts).div_euclid(SECONDS_PER_DAY)
    }

    /// Epoch seconds of local midnight opening `day`.
    pub fn day_start(&self, day: DayIndex) -> i64 {
        self.epoch_ts + day * SECONDS_PER_DAY
    }

    pub fn day_of_date(&self, date: NaiveDate) -> DayIndex {
        (date - self.epoch_date).num_days()
    }

    pub fn date_of_day(&self, day: DayIndex) -> NaiveDate {
        self.epoch_date + chrono::Duration::days(day)
    }
}

impl Default for DayClock {
    /// 2020-01-01 at UTC+08:00.
    fn default() -> Self {
        Self::new(NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), 8 * 3600)
    }
}

/// Parses `+08:00`, `-05:30`, `+8` or a plain number of seconds.
pub fn parse_utc_offset(text: &str) -> Result<i32> {
    let t = text.trim();
    let bad = || Error::InvalidParameter(format!("utc offset `{text}`"));
    if let Some(rest) = t.strip_prefix(['+', '-']) {
        let sign = if t.starts_with('-') { -1 } else { 1 };
        let (h, m) = match rest.split_once(':') {
            Some((h, m)) => (h, m),
            None => (rest, "0"),
        };
        let h: i32 = h.parse().map_err(|_| bad())?;
        let m: i32 = m.parse().map_err(|_| bad())?;
        if !(0..=14).contains(&h) || !(0..60).contains(&m) {
            return Err(bad());
        }
        return Ok(sign * (h * 3600 + m * 60));
    }
    let s: i32 = t.parse().map_err(|_| bad())?;
    if s.abs() > 14 * 3600 {
        return Err(bad());
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_midnight_boundaries() {
        let clock = DayClock::default();
        // 2020-01-01T00:00+08:00 == 2019-12-31T16:00Z == 1577808000
        assert_eq!(clock.day_start(0), 1_577_808_000);
        assert_eq!(clock.day_of(1_577_808_000), 0);
        assert_eq!(clock.day_of(1_577_808_000 - 1), -1);
        assert_eq!(clock.day_of(1_577_808_000 + SECONDS_PER_DAY), 1);
    }

    #[test]
    fn dates_round_trip() {
        let clock = DayClock::default();
        let d = NaiveDate::from_ymd_opt(2020, 1, 15).unwrap();
        assert_eq!(clock.day_of_date(d), 14);
        assert_eq!(clock.date_of_day(14), d);
    }

    #[test]
    fn offsets() {
        assert_eq!(parse_utc_offset("+08:00").unwrap(), 28_800);
        assert_eq!(parse_utc_offset("-05:30").unwrap(), -19_800);
        assert_eq!(parse_utc_offset("+8").unwrap(), 28_800);
        assert_eq!(parse_utc_offset("3600").unwrap(), 3600);
        assert!(parse_utc_offset("+25:00").is_err());
        assert!(parse_utc_offset("noon").is_err());
    }
}
