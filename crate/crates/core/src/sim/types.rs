use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

macro_rules! labelled_enum {
    ($(#[$meta:meta])* $name:ident, $field:literal { $($variant:ident => $label:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn label(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }

            pub fn index(self) -> usize {
                Self::ALL.iter().position(|v| *v == self).unwrap()
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.label())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                Self::ALL
                    .iter()
                    .copied()
                    .find(|v| v.label().eq_ignore_ascii_case(s.trim()))
                    .ok_or_else(|| Error::UnknownCategory { field: $field, value: s.to_string() })
            }
        }
    };
}

labelled_enum!(
    Platform, "platform" {
        Zomato => "Zomato",
        Swiggy => "Swiggy",
    }
);

impl Platform {
    pub fn rival(self) -> Platform {
        match self {
            Platform::Zomato => Platform::Swiggy,
            Platform::Swiggy => Platform::Zomato,
        }
    }
}

labelled_enum!(
    /// The five daily demand slots, in simulation order.
    TimeSlot, "time_slot" {
        Morning => "Morning",
        Noon => "Noon",
        Evening => "Evening",
        Night => "Night",
        Midnight => "Midnight",
    }
);

labelled_enum!(
    /// Demand intensity class of a slot; selects the time-of-day multiplier
    /// range and the order arrival-rate range.
    DemandPeriod, "demand_period" {
        Peak => "Peak",
        OffPeak => "OffPeak",
        LateNight => "LateNight",
    }
);

impl TimeSlot {
    pub fn period(self) -> DemandPeriod {
        match self {
            TimeSlot::Noon | TimeSlot::Evening => DemandPeriod::Peak,
            TimeSlot::Morning | TimeSlot::Night => DemandPeriod::OffPeak,
            TimeSlot::Midnight => DemandPeriod::LateNight,
        }
    }
}

labelled_enum!(
    Weather, "weather_condition" {
        Clear => "Clear",
        Mild => "Mild",
        Extreme => "Extreme",
    }
);

labelled_enum!(
    EventImportance, "event_importance" {
        None => "None",
        Low => "Low",
        Medium => "Medium",
        High => "High",
    }
);

labelled_enum!(
    CustomerSegment, "customer_segment" {
        Mismatched => "Mismatched",
        General => "General",
        Loyal => "Loyal",
    }
);

labelled_enum!(
    /// Indian climate seasons used to pick the weather distribution.
    Season, "season" {
        Winter => "Winter",
        Summer => "Summer",
        Monsoon => "Monsoon",
        PostMonsoon => "PostMonsoon",
    }
);

impl Season {
    pub fn of(date: NaiveDate) -> Season {
        match date.month() {
            12 | 1 | 2 => Season::Winter,
            3..=5 => Season::Summer,
            6..=9 => Season::Monsoon,
            _ => Season::PostMonsoon,
        }
    }
}

/// Everything outside the platforms' control that shapes one slot's demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExternalContext {
    pub time_slot: TimeSlot,
    pub weather: Weather,
    pub holiday: bool,
    pub event_importance: EventImportance,
    pub customer_segment: CustomerSegment,
}

impl ExternalContext {
    pub fn regular(time_slot: TimeSlot) -> Self {
        ExternalContext {
            time_slot,
            weather: Weather::Clear,
            holiday: false,
            event_importance: EventImportance::None,
            customer_segment: CustomerSegment::General,
        }
    }

    pub fn is_event_day(&self) -> bool {
        self.holiday || self.event_importance != EventImportance::None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        for slot in TimeSlot::ALL {
            assert_eq!(slot.label().parse::<TimeSlot>().unwrap(), *slot);
        }
        assert_eq!("extreme".parse::<Weather>().unwrap(), Weather::Extreme);
        assert!("Rainy".parse::<Weather>().is_err());
    }

    #[test]
    fn slot_order_and_periods() {
        assert_eq!(TimeSlot::ALL.len(), 5);
        assert_eq!(TimeSlot::Evening.index(), 2);
        assert_eq!(TimeSlot::Midnight.period(), DemandPeriod::LateNight);
    }

    #[test]
    fn seasons_cover_year() {
        let d = |m| NaiveDate::from_ymd_opt(2024, m, 1).unwrap();
        assert_eq!(Season::of(d(1)), Season::Winter);
        assert_eq!(Season::of(d(4)), Season::Summer);
        assert_eq!(Season::of(d(7)), Season::Monsoon);
        assert_eq!(Season::of(d(11)), Season::PostMonsoon);
    }
}
