use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::encode::{one_hot_encode, ordinal_encode_event};
use crate::sim::{Dataset, DemandRecord, Platform, Weather, SLOTS_PER_DAY};
use crate::{Error, Result};

const WEEKDAYS: [&str; 7] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];

/// Column layout of the model inputs for one platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub platform: Platform,
    /// Standardized numeric columns. The first is the platform's own demand.
    pub numeric: Vec<String>,
    /// Categorical columns with their category lists, in encoding order.
    pub one_hot: Vec<(String, Vec<String>)>,
    pub ordinal: Vec<String>,
    /// 0/1 indicator columns.
    pub flags: Vec<String>,
    /// Calendar columns taken from the following day, which is known in
    /// advance. Zero on the last day of the dataset.
    #[serde(default)]
    pub lead: Vec<String>,
    pub target: String,
}

impl FeatureSchema {
    /// Default layout: own demand history, prices, lead times and distances
    /// of both platforms; weather, food category and weekday one-hot; event
    /// importance ordinal; holiday flag; next day's holiday flag and event
    /// importance.
    pub fn for_platform(platform: Platform, categories: Vec<String>) -> Self {
        let num = |c: &str| c.to_string();
        FeatureSchema {
            platform,
            numeric: vec![
                format!("demand_{}", platform.label().to_lowercase()),
                num("price_zomato"),
                num("price_swiggy"),
                num("lead_time_zomato"),
                num("lead_time_swiggy"),
                num("distance_zomato"),
                num("distance_swiggy"),
            ],
            one_hot: vec![
                (
                    "weather_condition".into(),
                    Weather::ALL.iter().map(|w| w.label().to_string()).collect(),
                ),
                ("food_category".into(), categories),
                (
                    "day_of_week".into(),
                    WEEKDAYS.iter().map(|d| d.to_string()).collect(),
                ),
            ],
            ordinal: vec!["event_importance".into()],
            flags: vec!["public_holiday".into()],
            lead: vec!["public_holiday".into(), "event_importance".into()],
            target: format!("demand_{}", platform.label().to_lowercase()),
        }
    }

    /// Layout for daily forecasting: own demand, weather and weekday one-hot,
    /// event importance, holiday flag and the next day's calendar. Price,
    /// lead time, distance and food category are drawn per slot afresh each
    /// day, so their daily means carry no signal about the next day and only
    /// give the network noise to fit.
    pub fn compact(platform: Platform) -> Self {
        let mut s = Self::for_platform(platform, Vec::new());
        s.numeric.truncate(1);
        s.one_hot.retain(|(name, _)| name != "food_category");
        s
    }

    /// Schema whose category list is taken from the dataset itself.
    pub fn from_dataset(platform: Platform, dataset: &Dataset) -> Self {
        let mut cats: Vec<String> = dataset
            .records
            .iter()
            .map(|r| r.food_category.clone())
            .collect();
        cats.sort();
        cats.dedup();
        Self::for_platform(platform, cats)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        let groups = self
            .numeric
            .iter()
            .chain(self.one_hot.iter().map(|(n, _)| n))
            .chain(&self.ordinal)
            .chain(&self.flags);
        for name in groups {
            if !seen.insert(name) {
                return Err(Error::config("schema", format!("`{name}` appears twice")));
            }
        }
        if self.numeric.first() != Some(&self.target) {
            return Err(Error::config(
                "schema",
                "the first numeric column must be the target's history",
            ));
        }
        Ok(())
    }

    /// Expanded column names, in row order.
    pub fn column_names(&self) -> Vec<String> {
        let mut out = self.numeric.clone();
        for (name, cats) in &self.one_hot {
            out.extend(cats.iter().map(|c| format!("{name}={c}")));
        }
        out.extend(self.ordinal.iter().cloned());
        out.extend(self.flags.iter().cloned());
        out.extend(self.lead.iter().map(|c| format!("next_day:{c}")));
        out
    }

    /// Which expanded columns get standardized.
    pub fn scaled_mask(&self) -> Vec<bool> {
        let total = self.column_names().len();
        (0..total).map(|i| i < self.numeric.len()).collect()
    }

    pub fn width(&self) -> usize {
        self.column_names().len()
    }

    fn numeric_value(&self, name: &str, r: &DemandRecord) -> Result<f64> {
        Ok(match name {
            "demand_zomato" => r.demand_zomato,
            "demand_swiggy" => r.demand_swiggy,
            "price_zomato" => r.price_zomato,
            "price_swiggy" => r.price_swiggy,
            "lead_time_zomato" => r.lead_time_zomato,
            "lead_time_swiggy" => r.lead_time_swiggy,
            "distance_zomato" => r.distance_zomato,
            "distance_swiggy" => r.distance_swiggy,
            "order_arrival_rate" => r.order_arrival_rate,
            "supplier_inventory" => r.supplier_inventory,
            other => {
                return Err(Error::UnknownCategory {
                    field: "numeric feature",
                    value: other.to_string(),
                })
            }
        })
    }

    fn categorical_value(name: &str, r: &DemandRecord) -> Result<String> {
        Ok(match name {
            "weather_condition" => r.weather_condition.label().to_string(),
            "food_category" => r.food_category.clone(),
            "day_of_week" => r.day_of_week.clone(),
            "time_slot" => r.time_slot.label().to_string(),
            "customer_segment" => r.customer_segment.label().to_string(),
            other => {
                return Err(Error::UnknownCategory {
                    field: "categorical feature",
                    value: other.to_string(),
                })
            }
        })
    }

    /// Encoded row of one record, without the lead columns.
    pub fn encode(&self, r: &DemandRecord) -> Result<Vec<f64>> {
        let mut row = Vec::with_capacity(self.width());
        for name in &self.numeric {
            row.push(self.numeric_value(name, r)?);
        }
        for (name, cats) in &self.one_hot {
            row.extend(one_hot_encode(&Self::categorical_value(name, r)?, cats)?);
        }
        for name in &self.ordinal {
            match name.as_str() {
                "event_importance" => row.push(ordinal_encode_event(r.event_importance) as f64),
                other => {
                    return Err(Error::UnknownCategory {
                        field: "ordinal feature",
                        value: other.to_string(),
                    })
                }
            }
        }
        for name in &self.flags {
            row.push(Self::calendar_value(name, r, "flag feature")?);
        }
        Ok(row)
    }

    fn calendar_value(name: &str, r: &DemandRecord, field: &'static str) -> Result<f64> {
        match name {
            "public_holiday" => Ok(f64::from(u8::from(r.public_holiday))),
            "event_importance" => Ok(ordinal_encode_event(r.event_importance) as f64),
            other => Err(Error::UnknownCategory {
                field,
                value: other.to_string(),
            }),
        }
    }

    /// Encoded row of one record given the same slot on the following day.
    pub fn encode_with_next(&self, r: &DemandRecord, next: Option<&DemandRecord>) -> Result<Vec<f64>> {
        let mut row = self.encode(r)?;
        for name in &self.lead {
            row.push(match next {
                Some(n) => Self::calendar_value(name, n, "lead feature")?,
                None => {
                    Self::calendar_value(name, r, "lead feature")?;
                    0.0
                }
            });
        }
        Ok(row)
    }

    /// One encoded row per record: `[records × width]`.
    pub fn slot_matrix(&self, dataset: &Dataset) -> Result<Array2<f64>> {
        self.validate()?;
        let w = self.width();
        let mut m = Array2::zeros((dataset.len(), w));
        for (i, r) in dataset.records.iter().enumerate() {
            let row = self.encode_with_next(r, dataset.records.get(i + SLOTS_PER_DAY))?;
            m.row_mut(i).assign(&ndarray::ArrayView1::from(&row));
        }
        Ok(m)
    }

    /// One row per day: the mean of the day's five encoded slot rows. The
    /// first column is therefore the daily average demand.
    pub fn daily_matrix(&self, dataset: &Dataset) -> Result<Array2<f64>> {
        let slots = self.slot_matrix(dataset)?;
        let days = dataset.num_days();
        let mut m = Array2::zeros((days, slots.ncols()));
        for d in 0..days {
            let block = slots.slice(ndarray::s![d * SLOTS_PER_DAY..(d + 1) * SLOTS_PER_DAY, ..]);
            m.row_mut(d).assign(&block.mean_axis(ndarray::Axis(0)).unwrap());
        }
        Ok(m)
    }
}

/// Mean of one day's five slot demands.
pub fn daily_average(day_slots: &[f64]) -> Result<f64> {
    if day_slots.len() != SLOTS_PER_DAY {
        return Err(Error::shape("daily_average", SLOTS_PER_DAY, day_slots.len()));
    }
    Ok(day_slots.iter().sum::<f64>() / SLOTS_PER_DAY as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_simulation, SimConfig};
    use rand::{Rng, SeedableRng};

    fn small() -> Dataset {
        let mut cfg = SimConfig::default();
        cfg.end_date = chrono::NaiveDate::from_ymd_opt(2023, 1, 20).unwrap();
        run_simulation(&cfg).unwrap()
    }

    #[test]
    fn daily_average_examples() {
        assert_eq!(daily_average(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(), 3.0);
        assert_eq!(daily_average(&[7.5; 5]).unwrap(), 7.5);
        assert!(daily_average(&[1.0; 4]).is_err());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let v: Vec<f64> = (0..5).map(|_| rng.random_range(-100.0..100.0)).collect();
            let oracle = (v[0] + v[1] + v[2] + v[3] + v[4]) / 5.0;
            assert!((daily_average(&v).unwrap() - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn schema_layout() {
        let ds = small();
        let schema = FeatureSchema::from_dataset(Platform::Swiggy, &ds);
        schema.validate().unwrap();
        let names = schema.column_names();
        assert_eq!(names[0], "demand_swiggy");
        assert_eq!(names.len(), schema.width());
        let m = schema.slot_matrix(&ds).unwrap();
        assert_eq!(m.dim(), (ds.len(), names.len()));
        assert_eq!(m[[7, 0]], ds.records[7].demand_swiggy);
        // Exactly one weather indicator per row.
        for row in m.rows() {
            assert_eq!(row[7] + row[8] + row[9], 1.0);
        }
        let daily = schema.daily_matrix(&ds).unwrap();
        let oracle = ds.day(3).iter().map(|r| r.demand_swiggy).sum::<f64>() / 5.0;
        assert!((daily[[3, 0]] - oracle).abs() < 1e-9);

        let mut dup = schema.clone();
        dup.flags.push("price_zomato".into());
        assert!(dup.validate().is_err());
    }

    #[test]
    fn lead_columns_carry_the_next_days_calendar() {
        let mut ds = small();
        ds.records[SLOTS_PER_DAY + 2].public_holiday = true;
        let schema = FeatureSchema::from_dataset(Platform::Zomato, &ds);
        let names = schema.column_names();
        let col = names.iter().position(|n| n == "next_day:public_holiday").unwrap();
        let m = schema.slot_matrix(&ds).unwrap();
        assert_eq!(m[[2, col]], 1.0);
        assert_eq!(m[[SLOTS_PER_DAY + 2, col]], 0.0);
        assert!(m.column(col).iter().filter(|&&v| v == 1.0).count() >= 1);
        let last = m.nrows() - 1;
        assert_eq!(m[[last, col]], 0.0);
        assert_eq!(m.ncols(), schema.width());
    }

    #[test]
    fn compact_layout_drops_per_order_columns() {
        let ds = small();
        let schema = FeatureSchema::compact(Platform::Swiggy);
        schema.validate().unwrap();
        let names = schema.column_names();
        assert_eq!(names[0], "demand_swiggy");
        assert!(names.iter().all(|n| !n.starts_with("price") && !n.starts_with("food_category")));
        assert!(names.iter().any(|n| n == "day_of_week=Sat"));
        assert_eq!(schema.daily_matrix(&ds).unwrap().ncols(), names.len());
    }
}
