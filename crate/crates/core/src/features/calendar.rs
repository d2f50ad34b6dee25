//! Local-time resolution and two-part partitions of the week.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, TimeZone, Timelike};
use chrono_tz::Tz;

pub const HOURS_PER_WEEK: usize = 168;

/// Maps timestamps to local hour-of-week (Monday 00:00 is hour 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Calendar {
    tz: Tz,
}

impl Default for Calendar {
    fn default() -> Self {
        Self::utc()
    }
}

impl Calendar {
    pub fn utc() -> Self {
        Self { tz: Tz::UTC }
    }

    pub fn new(tz: Tz) -> Self {
        Self { tz }
    }

    pub fn hour_of_week(&self, timestamp: i64) -> usize {
        if self.tz == Tz::UTC {
            // 1970-01-01 was a Thursday, three days after Monday.
            return (timestamp.div_euclid(3600) + 72).rem_euclid(HOURS_PER_WEEK as i64) as usize;
        }
        let local = self
            .tz
            .timestamp_opt(timestamp, 0)
            .single()
            .expect("a UTC instant maps to exactly one local time");
        local.weekday().num_days_from_monday() as usize * 24 + local.hour() as usize
    }
}

impl FromStr for Calendar {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<Tz>()
            .map(Calendar::new)
            .map_err(|e| format!("unknown time zone `{s}`: {e}"))
    }
}

impl fmt::Display for Calendar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tz.name())
    }
}

/// The three built-in week partitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BuiltinPartition {
    /// Monday to Friday vs. Saturday and Sunday.
    Weekdays,
    /// 08:00 to 18:00 vs. 18:00 to 08:00.
    OfficeHours,
    /// 00:00 to 18:00 vs. 18:00 to 24:00.
    BeforeEvening,
}

impl BuiltinPartition {
    pub const ALL: [BuiltinPartition; 3] = [
        BuiltinPartition::Weekdays,
        BuiltinPartition::OfficeHours,
        BuiltinPartition::BeforeEvening,
    ];

    pub fn number(self) -> u8 {
        match self {
            BuiltinPartition::Weekdays => 1,
            BuiltinPartition::OfficeHours => 2,
            BuiltinPartition::BeforeEvening => 3,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.number() == n)
    }

    fn in_a(self, hour_of_week: usize) -> bool {
        let (day, hour) = (hour_of_week / 24, hour_of_week % 24);
        match self {
            BuiltinPartition::Weekdays => day < 5,
            BuiltinPartition::OfficeHours => (8..18).contains(&hour),
            BuiltinPartition::BeforeEvening => hour < 18,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// Splits the timeline into `T_A` and `T_B` by local hour of the week.
///
/// Boundaries are half-open: an event at 18:00 sharp belongs to the side
/// starting at 18:00.
#[derive(Clone, PartialEq, Eq)]
pub struct TimelinePartition {
    name: String,
    in_a: [bool; HOURS_PER_WEEK],
}

impl fmt::Debug for TimelinePartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hours_a = self.in_a.iter().filter(|&&a| a).count();
        f.debug_struct("TimelinePartition")
            .field("name", &self.name)
            .field("hours_in_a", &hours_a)
            .finish()
    }
}

impl TimelinePartition {
    pub fn builtin(which: BuiltinPartition) -> Self {
        let mut in_a = [false; HOURS_PER_WEEK];
        for (h, slot) in in_a.iter_mut().enumerate() {
            *slot = which.in_a(h);
        }
        Self {
            name: format!("pr-{}", which.number()),
            in_a,
        }
    }

    /// Partition from an explicit hour-of-week mask (`true` means `T_A`).
    pub fn custom(name: impl Into<String>, in_a: [bool; HOURS_PER_WEEK]) -> Self {
        Self {
            name: name.into(),
            in_a,
        }
    }

    /// `T_A` is the whole timeline and `T_B` is empty.
    pub fn whole_timeline() -> Self {
        Self::custom("whole", [true; HOURS_PER_WEEK])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn side_of_hour(&self, hour_of_week: usize) -> Side {
        if self.in_a[hour_of_week] {
            Side::A
        } else {
            Side::B
        }
    }

    pub fn side(&self, calendar: &Calendar, timestamp: i64) -> Side {
        self.side_of_hour(calendar.hour_of_week(timestamp))
    }
}

/// The three built-in partitions, in order pr-1, pr-2, pr-3.
pub fn builtin_partitions() -> [TimelinePartition; 3] {
    BuiltinPartition::ALL.map(TimelinePartition::builtin)
}

#[cfg(test)]
mod tests {
    use super::*;

    // 2024-01-01 was a Monday.
    const MONDAY: i64 = 1_704_067_200;
    const HOUR: i64 = 3600;

    fn sides(t: i64) -> [Side; 3] {
        let cal = Calendar::utc();
        builtin_partitions().map(|p| p.side(&cal, t))
    }

    #[test]
    fn saturday_morning() {
        assert_eq!(sides(MONDAY + 5 * 24 * HOUR + 10 * HOUR), [Side::B, Side::A, Side::A]);
    }

    #[test]
    fn monday_evening() {
        assert_eq!(sides(MONDAY + 19 * HOUR), [Side::A, Side::B, Side::B]);
    }

    #[test]
    fn boundaries_are_half_open() {
        assert_eq!(sides(MONDAY + 18 * HOUR), [Side::A, Side::B, Side::B]);
        assert_eq!(sides(MONDAY + 18 * HOUR - 1), [Side::A, Side::A, Side::A]);
        assert_eq!(sides(MONDAY + 8 * HOUR)[1], Side::A);
        assert_eq!(sides(MONDAY + 8 * HOUR - 1)[1], Side::B);
        // Friday 23:59:59 is a weekday, Saturday 00:00 is not.
        assert_eq!(sides(MONDAY + 5 * 24 * HOUR - 1)[0], Side::A);
        assert_eq!(sides(MONDAY + 5 * 24 * HOUR)[0], Side::B);
    }

    #[test]
    fn utc_fast_path_matches_chrono() {
        let fast = Calendar::utc();
        let slow: Calendar = "Etc/GMT".parse().unwrap();
        for t in (-5 * 86_400..30 * 86_400).step_by(1777) {
            assert_eq!(fast.hour_of_week(t), slow.hour_of_week(t), "t={t}");
        }
    }

    #[test]
    fn time_zone_shifts_local_hour() {
        let paris: Calendar = "Europe/Paris".parse().unwrap();
        // 17:30 UTC on a winter Monday is 18:30 in Paris.
        let t = MONDAY + 17 * HOUR + 1800;
        assert_eq!(Calendar::utc().hour_of_week(t), 17);
        assert_eq!(paris.hour_of_week(t), 18);
        assert!("Mars/Olympus".parse::<Calendar>().is_err());
    }

    #[test]
    fn whole_timeline_has_empty_b() {
        let p = TimelinePartition::whole_timeline();
        assert!((0..HOURS_PER_WEEK).all(|h| p.side_of_hour(h) == Side::A));
    }
}
