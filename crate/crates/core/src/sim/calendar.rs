use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::types::EventImportance;

/// One dated holiday or special event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalendarEvent {
    pub date: NaiveDate,
    pub importance: EventImportance,
    /// Gazetted public holiday (as opposed to a non-holiday occasion such
    /// as a cricket final).
    #[serde(default)]
    pub public_holiday: bool,
    #[serde(default)]
    pub name: String,
}

const FIXED: &[(u32, u32, EventImportance, bool, &str)] = &[
    (1, 1, EventImportance::Medium, false, "New Year's Day"),
    (1, 26, EventImportance::Medium, true, "Republic Day"),
    (2, 14, EventImportance::Low, false, "Valentine's Day"),
    (8, 15, EventImportance::Medium, true, "Independence Day"),
    (10, 2, EventImportance::Low, true, "Gandhi Jayanti"),
    (12, 25, EventImportance::Medium, true, "Christmas"),
    (12, 31, EventImportance::High, false, "New Year's Eve"),
];

// Lunar-calendar festivals and one-off events, by Gregorian date.
const MOVABLE: &[(i32, u32, u32, EventImportance, bool, &str)] = &[
    (2023, 3, 8, EventImportance::High, true, "Holi"),
    (2023, 4, 22, EventImportance::Medium, true, "Eid al-Fitr"),
    (2023, 8, 30, EventImportance::Low, false, "Raksha Bandhan"),
    (2023, 9, 19, EventImportance::Medium, true, "Ganesh Chaturthi"),
    (2023, 10, 24, EventImportance::High, true, "Dussehra"),
    (2023, 11, 11, EventImportance::Medium, false, "Diwali eve"),
    (2023, 11, 12, EventImportance::High, true, "Diwali"),
    (2023, 11, 13, EventImportance::Medium, false, "Govardhan Puja"),
    (2023, 11, 19, EventImportance::High, false, "Cricket World Cup final"),
    (2024, 3, 25, EventImportance::High, true, "Holi"),
    (2024, 4, 11, EventImportance::Medium, true, "Eid al-Fitr"),
    (2024, 5, 26, EventImportance::Medium, false, "IPL final"),
    (2024, 8, 19, EventImportance::Low, false, "Raksha Bandhan"),
    (2024, 9, 7, EventImportance::Medium, true, "Ganesh Chaturthi"),
    (2024, 10, 12, EventImportance::High, true, "Dussehra"),
    (2024, 10, 31, EventImportance::High, true, "Diwali"),
    (2024, 11, 1, EventImportance::Medium, false, "Govardhan Puja"),
    (2025, 3, 14, EventImportance::High, true, "Holi"),
    (2025, 3, 31, EventImportance::Medium, true, "Eid al-Fitr"),
    (2025, 10, 2, EventImportance::High, true, "Dussehra"),
    (2025, 10, 20, EventImportance::High, true, "Diwali"),
];

/// Built-in holiday calendar restricted to `[start, end]`, sorted by date.
pub fn default_holidays(start: NaiveDate, end: NaiveDate) -> Vec<CalendarEvent> {
    let mut out = Vec::new();
    for year in start.year()..=end.year() {
        for &(m, d, importance, public_holiday, name) in FIXED {
            if let Some(date) = NaiveDate::from_ymd_opt(year, m, d) {
                out.push(CalendarEvent {
                    date,
                    importance,
                    public_holiday,
                    name: name.to_string(),
                });
            }
        }
    }
    for &(y, m, d, importance, public_holiday, name) in MOVABLE {
        out.push(CalendarEvent {
            date: NaiveDate::from_ymd_opt(y, m, d).unwrap(),
            importance,
            public_holiday,
            name: name.to_string(),
        });
    }
    out.retain(|e| e.date >= start && e.date <= end);
    out.sort_by_key(|e| e.date);
    out.dedup_by_key(|e| e.date);
    out
}
