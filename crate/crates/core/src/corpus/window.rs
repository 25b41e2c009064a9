use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, TimeZone, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month {
    pub year: i32,
    pub month: u32,
}

impl Month {
    pub fn of(date: NaiveDate) -> Month {
        Month {
            year: date.year(),
            month: date.month(),
        }
    }

    pub fn first_day(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid month")
    }

    pub fn next(&self) -> Month {
        if self.month == 12 {
            Month {
                year: self.year + 1,
                month: 1,
            }
        } else {
            Month {
                year: self.year,
                month: self.month + 1,
            }
        }
    }

    pub fn days(&self) -> u32 {
        (self.next().first_day() - self.first_day()).num_days() as u32
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl std::str::FromStr for Month {
    type Err = Error;

    fn from_str(s: &str) -> Result<Month> {
        let bad = || Error::Config(format!("invalid month {s:?}, expected YYYY-MM"));
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        let year = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        if !(1..=12).contains(&month) {
            return Err(bad());
        }
        Ok(Month { year, month })
    }
}

/// Which half of the study window a month belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Half {
    H1,
    H2,
}

impl fmt::Display for Half {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Half::H1 => "H1",
            Half::H2 => "H2",
        })
    }
}

/// Whether calendar rules (distinct days, month membership, weekday hours)
/// use each city's local clock or UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalendarMode {
    #[default]
    CityLocal,
    Utc,
}

/// Serializable form of [`StudyWindow`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub start: NaiveDate,
    /// Exclusive.
    pub end: NaiveDate,
    #[serde(default)]
    pub timezone_by_city: BTreeMap<String, String>,
    #[serde(default)]
    pub calendar: CalendarMode,
}

/// The study period `[start, end)` in UTC with per-city time zones.
#[derive(Debug, Clone)]
pub struct StudyWindow {
    start: NaiveDate,
    end: NaiveDate,
    months: Vec<Month>,
    timezone_by_city: BTreeMap<String, Tz>,
    calendar: CalendarMode,
}

impl StudyWindow {
    pub fn new(cfg: &WindowConfig) -> Result<StudyWindow> {
        if cfg.end <= cfg.start {
            return Err(Error::InvalidWindow(format!(
                "end {} must be after start {}",
                cfg.end, cfg.start
            )));
        }
        let mut months = Vec::new();
        let mut m = Month::of(cfg.start);
        while m.first_day() < cfg.end {
            months.push(m);
            m = m.next();
        }
        let mut timezone_by_city = BTreeMap::new();
        for (city, name) in &cfg.timezone_by_city {
            let tz: Tz = name.parse().map_err(|_| Error::UnknownTimezone {
                city: city.clone(),
                tz: name.clone(),
            })?;
            timezone_by_city.insert(city.clone(), tz);
        }
        Ok(StudyWindow {
            start: cfg.start,
            end: cfg.end,
            months,
            timezone_by_city,
            calendar: cfg.calendar,
        })
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.end
    }

    pub fn start_ts(&self) -> i64 {
        midnight_utc(self.start)
    }

    pub fn end_ts(&self) -> i64 {
        midnight_utc(self.end)
    }

    pub fn contains_ts(&self, ts: i64) -> bool {
        ts >= self.start_ts() && ts < self.end_ts()
    }

    /// Calendar months intersecting the window, in order.
    pub fn months(&self) -> &[Month] {
        &self.months
    }

    pub fn calendar(&self) -> CalendarMode {
        self.calendar
    }

    /// First `ceil(n/2)` months form H1, the rest H2 (5 + 5 for a
    /// ten-month window).
    pub fn half_of(&self, month: Month) -> Option<Half> {
        let idx = self.months.iter().position(|&m| m == month)?;
        let split = self.months.len().div_ceil(2);
        Some(if idx < split { Half::H1 } else { Half::H2 })
    }

    /// Time zone used for a city's calendar rules. Cities without a
    /// configured zone, and every city in UTC mode, use UTC.
    pub fn tz_for(&self, city_id: &str) -> Tz {
        match self.calendar {
            CalendarMode::Utc => Tz::UTC,
            CalendarMode::CityLocal => self.timezone_by_city.get(city_id).copied().unwrap_or(Tz::UTC),
        }
    }

    /// The city's configured zone regardless of calendar mode (UTC when
    /// unconfigured).
    pub fn city_tz(&self, city_id: &str) -> Tz {
        self.timezone_by_city.get(city_id).copied().unwrap_or(Tz::UTC)
    }

    pub fn has_timezone(&self, city_id: &str) -> bool {
        self.timezone_by_city.contains_key(city_id)
    }

    pub fn local_datetime(&self, ts: i64, city_id: &str) -> NaiveDateTime {
        local_datetime(ts, self.tz_for(city_id))
    }

    pub fn local_date(&self, ts: i64, city_id: &str) -> NaiveDate {
        self.local_datetime(ts, city_id).date()
    }
}

pub(crate) fn midnight_utc(d: NaiveDate) -> i64 {
    d.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp()
}

pub fn local_datetime(ts: i64, tz: Tz) -> NaiveDateTime {
    let utc: DateTime<Utc> = DateTime::from_timestamp(ts, 0).unwrap_or_default();
    tz.from_utc_datetime(&utc.naive_utc()).naive_local()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(start: &str, end: &str) -> StudyWindow {
        StudyWindow::new(&WindowConfig {
            start: start.parse().unwrap(),
            end: end.parse().unwrap(),
            timezone_by_city: [("chi".to_string(), "America/Chicago".to_string())].into(),
            calendar: CalendarMode::CityLocal,
        })
        .unwrap()
    }

    #[test]
    fn ten_month_window_splits_five_five() {
        let w = window("2017-02-01", "2017-12-01");
        assert_eq!(w.months().len(), 10);
        assert_eq!(w.half_of(Month { year: 2017, month: 6 }), Some(Half::H1));
        assert_eq!(w.half_of(Month { year: 2017, month: 7 }), Some(Half::H2));
        assert_eq!(w.half_of(Month { year: 2017, month: 12 }), None);
    }

    #[test]
    fn end_must_follow_start() {
        let cfg = WindowConfig {
            start: "2017-02-01".parse().unwrap(),
            end: "2017-02-01".parse().unwrap(),
            timezone_by_city: BTreeMap::new(),
            calendar: CalendarMode::Utc,
        };
        assert!(StudyWindow::new(&cfg).is_err());
    }

    #[test]
    fn unknown_timezone_rejected() {
        let cfg = WindowConfig {
            start: "2017-02-01".parse().unwrap(),
            end: "2017-03-01".parse().unwrap(),
            timezone_by_city: [("x".to_string(), "Mars/Olympus".to_string())].into(),
            calendar: CalendarMode::CityLocal,
        };
        assert!(matches!(StudyWindow::new(&cfg), Err(Error::UnknownTimezone { .. })));
    }

    #[test]
    fn local_dates_follow_city_clock() {
        let w = window("2017-06-01", "2017-07-01");
        // 2017-06-02 03:00 UTC is still June 1 in Chicago (UTC-5)
        let ts = midnight_utc("2017-06-02".parse().unwrap()) + 3 * 3600;
        assert_eq!(w.local_date(ts, "chi"), "2017-06-01".parse::<NaiveDate>().unwrap());
        assert_eq!(w.local_date(ts, "elsewhere"), "2017-06-02".parse::<NaiveDate>().unwrap());
        assert_eq!(Month { year: 2017, month: 2 }.days(), 28);
    }
}
