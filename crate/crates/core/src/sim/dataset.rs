use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize, Serializer};

use super::config::SLOTS_PER_DAY;
use super::types::{CustomerSegment, EventImportance, Platform, TimeSlot, Weather};
use crate::{Error, Result};

pub const COLUMNS: [&str; 19] = [
    "week_index",
    "date",
    "day_of_week",
    "time_slot",
    "food_category",
    "price_zomato",
    "price_swiggy",
    "demand_zomato",
    "demand_swiggy",
    "lead_time_zomato",
    "lead_time_swiggy",
    "distance_zomato",
    "distance_swiggy",
    "supplier_inventory",
    "public_holiday",
    "event_importance",
    "weather_condition",
    "customer_segment",
    "order_arrival_rate",
];

/// Rounds to the 6 fractional digits the CSV carries, so in-memory records
/// and re-read records are identical.
pub fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn ser_f64<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(&round6(*x))
}

/// One (day, slot) observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandRecord {
    pub week_index: u32,
    pub date: NaiveDate,
    pub day_of_week: String,
    pub time_slot: TimeSlot,
    pub food_category: String,
    #[serde(serialize_with = "ser_f64")]
    pub price_zomato: f64,
    #[serde(serialize_with = "ser_f64")]
    pub price_swiggy: f64,
    #[serde(serialize_with = "ser_f64")]
    pub demand_zomato: f64,
    #[serde(serialize_with = "ser_f64")]
    pub demand_swiggy: f64,
    #[serde(serialize_with = "ser_f64")]
    pub lead_time_zomato: f64,
    #[serde(serialize_with = "ser_f64")]
    pub lead_time_swiggy: f64,
    #[serde(serialize_with = "ser_f64")]
    pub distance_zomato: f64,
    #[serde(serialize_with = "ser_f64")]
    pub distance_swiggy: f64,
    #[serde(serialize_with = "ser_f64")]
    pub supplier_inventory: f64,
    pub public_holiday: bool,
    pub event_importance: EventImportance,
    pub weather_condition: Weather,
    pub customer_segment: CustomerSegment,
    #[serde(serialize_with = "ser_f64")]
    pub order_arrival_rate: f64,
}

impl DemandRecord {
    pub fn demand(&self, platform: Platform) -> f64 {
        match platform {
            Platform::Zomato => self.demand_zomato,
            Platform::Swiggy => self.demand_swiggy,
        }
    }

    pub fn price(&self, platform: Platform) -> f64 {
        match platform {
            Platform::Zomato => self.price_zomato,
            Platform::Swiggy => self.price_swiggy,
        }
    }

    pub fn lead_time(&self, platform: Platform) -> f64 {
        match platform {
            Platform::Zomato => self.lead_time_zomato,
            Platform::Swiggy => self.lead_time_swiggy,
        }
    }

    pub fn distance(&self, platform: Platform) -> f64 {
        match platform {
            Platform::Zomato => self.distance_zomato,
            Platform::Swiggy => self.distance_swiggy,
        }
    }

    pub fn total_demand(&self) -> f64 {
        self.demand_zomato + self.demand_swiggy
    }

    /// Rounds every float field to CSV precision.
    pub(crate) fn rounded(mut self) -> Self {
        for x in [
            &mut self.price_zomato,
            &mut self.price_swiggy,
            &mut self.demand_zomato,
            &mut self.demand_swiggy,
            &mut self.lead_time_zomato,
            &mut self.lead_time_swiggy,
            &mut self.distance_zomato,
            &mut self.distance_swiggy,
            &mut self.supplier_inventory,
            &mut self.order_arrival_rate,
        ] {
            *x = round6(*x);
        }
        self
    }
}

/// Slot-level records ordered by (date, slot), five per day.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub records: Vec<DemandRecord>,
}

impl Dataset {
    pub fn new(records: Vec<DemandRecord>) -> Result<Self> {
        let ds = Dataset { records };
        ds.check_layout()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_days(&self) -> usize {
        self.records.len() / SLOTS_PER_DAY
    }

    /// Records grouped by day.
    pub fn days(&self) -> impl Iterator<Item = &[DemandRecord]> {
        self.records.chunks_exact(SLOTS_PER_DAY)
    }

    pub fn day(&self, d: usize) -> &[DemandRecord] {
        &self.records[d * SLOTS_PER_DAY..(d + 1) * SLOTS_PER_DAY]
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.days().map(|d| d[0].date).collect()
    }

    pub fn demand_series(&self, platform: Platform) -> Vec<f64> {
        self.records.iter().map(|r| r.demand(platform)).collect()
    }

    pub fn total_demand_series(&self) -> Vec<f64> {
        self.records.iter().map(DemandRecord::total_demand).collect()
    }

    /// Demand per day as `[slot0, .., slot4]`.
    pub fn slot_matrix(&self, platform: Platform) -> Vec<[f64; SLOTS_PER_DAY]> {
        self.days()
            .map(|day| std::array::from_fn(|s| day[s].demand(platform)))
            .collect()
    }

    /// Contiguous sub-range of days.
    pub fn slice_days(&self, start: usize, end: usize) -> Dataset {
        Dataset {
            records: self.records[start * SLOTS_PER_DAY..end * SLOTS_PER_DAY].to_vec(),
        }
    }

    fn check_layout(&self) -> Result<()> {
        if self.records.len() % SLOTS_PER_DAY != 0 {
            return Err(Error::InvalidInput(format!(
                "{} records is not a whole number of {SLOTS_PER_DAY}-slot days",
                self.records.len()
            )));
        }
        for (d, day) in self.days().enumerate() {
            for (s, rec) in day.iter().enumerate() {
                if rec.time_slot != TimeSlot::ALL[s] || rec.date != day[0].date {
                    return Err(Error::InvalidInput(format!(
                        "day {d}: slot {s} is {} on {}, expected {} on {}",
                        rec.time_slot,
                        rec.date,
                        TimeSlot::ALL[s],
                        day[0].date
                    )));
                }
            }
            if d > 0 && day[0].date <= self.day(d - 1)[0].date {
                return Err(Error::InvalidInput(format!(
                    "day {d}: {} does not follow {}",
                    day[0].date,
                    self.day(d - 1)[0].date
                )));
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        for rec in &self.records {
            w.serialize(rec)?;
        }
        if self.records.is_empty() {
            w.write_record(COLUMNS)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(buf)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Parses a dataset CSV; `origin` names the source in error messages.
    pub fn read_csv<R: Read>(reader: R, origin: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.iter().ne(COLUMNS.iter().copied()) {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: 1,
                message: format!("header must be exactly: {}", COLUMNS.join(",")),
            });
        }
        let mut records = Vec::new();
        for row in rdr.deserialize::<DemandRecord>() {
            let rec = row.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                Error::Parse {
                    path: origin.to_path_buf(),
                    line,
                    message: e.to_string(),
                }
            })?;
            records.push(rec);
        }
        Dataset::new(records).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file), path)
    }
}
