use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::inventory::{Granularity, InventoryPlan, PlanPoint};
use crate::sim::{Dataset, Platform, SLOTS_PER_DAY};
use crate::stats::{mean, variance};
use crate::{Error, Result};

/// Ratio of population variances, inventory over demand.
pub fn bullwhip(inventory: &[f64], demand: &[f64]) -> Result<f64> {
    if inventory.len() < 2 || demand.len() < 2 {
        return Err(Error::InsufficientData {
            what: "bullwhip series".into(),
            needed: 2,
            available: inventory.len().min(demand.len()),
        });
    }
    let vd = variance(demand);
    if vd == 0.0 {
        return Err(Error::Degenerate("bullwhip demand series".into()));
    }
    Ok(variance(inventory) / vd)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Segment {
    Training,
    Testing,
    Predicted,
}

impl Segment {
    pub const ALL: [Segment; 3] = [Segment::Training, Segment::Testing, Segment::Predicted];
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Segment::Training => "training",
            Segment::Testing => "testing",
            Segment::Predicted => "predicted",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scope {
    Zomato,
    Swiggy,
    Overall,
}

impl Scope {
    pub const ALL: [Scope; 3] = [Scope::Zomato, Scope::Swiggy, Scope::Overall];

    fn platform(self) -> Option<Platform> {
        match self {
            Scope::Zomato => Some(Platform::Zomato),
            Scope::Swiggy => Some(Platform::Swiggy),
            Scope::Overall => None,
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Zomato => "Zomato",
            Scope::Swiggy => "Swiggy",
            Scope::Overall => "Overall",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BullwhipEntry {
    pub phase: u8,
    pub segment: Segment,
    pub scope: Scope,
    pub points: usize,
    pub inventory_variance: f64,
    pub demand_variance: f64,
    /// `None` when demand variance is zero.
    pub ratio: Option<f64>,
}

/// Demand of one platform at a plan point: the slot value, or the mean over
/// the day's slots for daily points.
fn point_demand(dataset: &Dataset, p: &PlanPoint, platform: Platform) -> f64 {
    let day = dataset.day(p.day);
    match p.slot {
        Some(slot) => day[slot.index()].demand(platform),
        None => day.iter().map(|r| r.demand(platform)).sum::<f64>() / SLOTS_PER_DAY as f64,
    }
}

/// Share of `platform` in total demand over the `window_days` days before
/// the point (same slot for slot points).
fn trailing_share(dataset: &Dataset, p: &PlanPoint, platform: Platform, window_days: usize) -> f64 {
    let start = p.day.saturating_sub(window_days);
    let (mut own, mut total) = (0.0, 0.0);
    for d in start..p.day {
        let q = PlanPoint { day: d, ..p.clone() };
        own += point_demand(dataset, &q, platform);
        total += point_demand(dataset, &q, Platform::Zomato) + point_demand(dataset, &q, Platform::Swiggy);
    }
    if total > 0.0 {
        own / total
    } else {
        0.5
    }
}

/// Bullwhip ratios of one plan segment for both platforms and overall.
/// Platform inventory is the plan's Q* scaled by that platform's trailing
/// share of demand.
pub fn bullwhip_segment(
    dataset: &Dataset,
    plan: &InventoryPlan,
    phase: u8,
    segment: Segment,
    window_days: usize,
) -> Result<Vec<BullwhipEntry>> {
    if let Some(p) = plan.points.iter().find(|p| p.day >= dataset.num_days()) {
        return Err(Error::InvalidInput(format!("plan point {} lies outside the dataset", p.date)));
    }
    if let Some(p) = plan
        .points
        .iter()
        .find(|p| p.slot.is_some() != (plan.variant.granularity() == Granularity::Slot))
    {
        return Err(Error::InvalidInput(format!("plan point {} has the wrong granularity", p.date)));
    }
    let mut out = Vec::with_capacity(3);
    for scope in Scope::ALL {
        let (inv, dem): (Vec<f64>, Vec<f64>) = plan
            .points
            .iter()
            .map(|p| match scope.platform() {
                Some(pl) => (
                    p.q_star * trailing_share(dataset, p, pl, window_days),
                    point_demand(dataset, p, pl),
                ),
                None => (
                    p.q_star,
                    point_demand(dataset, p, Platform::Zomato) + point_demand(dataset, p, Platform::Swiggy),
                ),
            })
            .unzip();
        let ratio = match bullwhip(&inv, &dem) {
            Ok(b) => Some(b),
            Err(Error::Degenerate(_)) => None,
            Err(e) => return Err(e),
        };
        out.push(BullwhipEntry {
            phase,
            segment,
            scope,
            points: inv.len(),
            inventory_variance: variance(&inv),
            demand_variance: variance(&dem),
            ratio,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BullwhipReport {
    pub entries: Vec<BullwhipEntry>,
}

impl BullwhipReport {
    pub fn get(&self, phase: u8, segment: Segment, scope: Scope) -> Option<&BullwhipEntry> {
        self.entries
            .iter()
            .find(|e| e.phase == phase && e.segment == segment && e.scope == scope)
    }

    pub fn ratio(&self, phase: u8, segment: Segment, scope: Scope) -> Option<f64> {
        self.get(phase, segment, scope).and_then(|e| e.ratio)
    }

    pub fn is_degenerate(&self) -> bool {
        self.entries.iter().any(|e| e.ratio.is_none())
    }

    /// Whether all 3 segments × 3 scopes are present for each listed phase.
    pub fn is_complete(&self, phases: &[u8]) -> bool {
        phases.iter().all(|&ph| {
            Segment::ALL
                .iter()
                .all(|&s| Scope::ALL.iter().all(|&sc| self.get(ph, s, sc).is_some()))
        })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record([
            "phase",
            "segment",
            "scope",
            "points",
            "inventory_variance",
            "demand_variance",
            "bullwhip",
        ])?;
        for e in &self.entries {
            out.write_record([
                e.phase.to_string(),
                e.segment.to_string(),
                e.scope.to_string(),
                e.points.to_string(),
                e.inventory_variance.to_string(),
                e.demand_variance.to_string(),
                e.ratio.map_or("degenerate".to_string(), |b| b.to_string()),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Plain-text table, one row per phase and segment.
    pub fn summary(&self) -> String {
        let mut s = format!("{:<6} {:<10} {:>9} {:>9} {:>9}\n", "phase", "segment", "Zomato", "Swiggy", "Overall");
        let mut phases: Vec<u8> = self.entries.iter().map(|e| e.phase).collect();
        phases.dedup();
        for ph in phases {
            for seg in Segment::ALL {
                let cell = |sc| match self.ratio(ph, seg, sc) {
                    Some(b) => format!("{b:>9.3}"),
                    None => format!("{:>9}", "-"),
                };
                s += &format!(
                    "{:<6} {:<10} {} {} {}\n",
                    ph,
                    seg.to_string(),
                    cell(Scope::Zomato),
                    cell(Scope::Swiggy),
                    cell(Scope::Overall)
                );
            }
        }
        s
    }
}

/// Mean of a plan's Q* values, handy for sanity checks.
pub fn mean_order_level(plan: &InventoryPlan) -> f64 {
    mean(&plan.q_series())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inventory::PlanVariant;
    use crate::sim::{run_simulation, SimConfig};
    use proptest::prelude::*;

    #[test]
    fn hand_examples() {
        let d = [1.0, 5.0, 2.0, 8.0];
        assert_eq!(bullwhip(&d, &d).unwrap(), 1.0);
        assert_eq!(bullwhip(&[3.0; 4], &d).unwrap(), 0.0);
        assert_eq!(bullwhip(&[1.0, 3.0], &[1.0, 2.0]).unwrap(), 4.0);
        assert!(matches!(bullwhip(&d, &[2.0; 4]), Err(Error::Degenerate(_))));
        assert!(bullwhip(&[1.0], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn scale_invariant(pairs in prop::collection::vec((-1e3..1e3f64, -1e3..1e3f64), 3..40), k in 0.1..50.0f64, neg in any::<bool>()) {
            let (inv, dem): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            prop_assume!(variance(&dem) > 1e-6);
            let k = if neg { -k } else { k };
            let b = bullwhip(&inv, &dem).unwrap();
            let ki: Vec<f64> = inv.iter().map(|x| k * x).collect();
            let kd: Vec<f64> = dem.iter().map(|x| k * x).collect();
            let kb = bullwhip(&ki, &kd).unwrap();
            prop_assert!((b - kb).abs() <= 1e-9 * (1.0 + b));
        }
    }

    fn small_world() -> Dataset {
        let mut cfg = SimConfig::default();
        cfg.end_date = cfg.start_date + chrono::Duration::days(40);
        cfg.seed = 3;
        run_simulation(&cfg).unwrap()
    }

    #[test]
    fn overall_entry_matches_direct_ratio() {
        let ds = small_world();
        let plan = InventoryPlan {
            variant: PlanVariant::Daily,
            points: (10..40)
                .map(|d| PlanPoint {
                    day: d,
                    date: ds.day(d)[0].date,
                    slot: None,
                    mu: 0.0,
                    sigma: 0.0,
                    q_star: (d % 4) as f64,
                })
                .collect(),
        };
        let entries = bullwhip_segment(&ds, &plan, 2, Segment::Testing, 7).unwrap();
        assert_eq!(entries.len(), 3);
        let dem: Vec<f64> = (10..40).map(|d| ds.day(d).iter().map(|r| r.total_demand()).sum::<f64>() / 5.0).collect();
        let direct = bullwhip(&plan.q_series(), &dem).unwrap();
        let overall = &entries[2];
        assert_eq!(overall.scope, Scope::Overall);
        assert!((overall.ratio.unwrap() - direct).abs() < 1e-12);
        assert_eq!(overall.ratio.unwrap(), overall.inventory_variance / overall.demand_variance);
    }

    #[test]
    fn perfect_inventory_matches_demand() {
        // Q* equal to realized total demand gives an overall ratio of one.
        let ds = small_world();
        let plan = InventoryPlan {
            variant: PlanVariant::FiveTimeLstm,
            points: (7..40)
                .flat_map(|d| {
                    let day = ds.day(d);
                    day.iter().map(move |r| PlanPoint {
                        day: d,
                        date: r.date,
                        slot: Some(r.time_slot),
                        mu: r.total_demand(),
                        sigma: 0.0,
                        q_star: r.total_demand(),
                    })
                })
                .collect(),
        };
        let entries = bullwhip_segment(&ds, &plan, 1, Segment::Predicted, 7).unwrap();
        assert!((entries[2].ratio.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_mixed_granularity_and_flags_degenerate() {
        let ds = small_world();
        let point = |d: usize| PlanPoint { day: d, date: ds.day(d)[0].date, slot: None, mu: 1.0, sigma: 0.0, q_star: 1.0 };
        let bad = InventoryPlan { variant: PlanVariant::FiveTime, points: vec![point(8), point(9)] };
        assert!(bullwhip_segment(&ds, &bad, 1, Segment::Training, 7).is_err());
        let outside = InventoryPlan { variant: PlanVariant::Daily, points: vec![PlanPoint { day: 999, ..point(8) }] };
        assert!(bullwhip_segment(&ds, &outside, 1, Segment::Training, 7).is_err());

        let report = BullwhipReport {
            entries: vec![BullwhipEntry {
                phase: 1,
                segment: Segment::Training,
                scope: Scope::Overall,
                points: 2,
                inventory_variance: 0.0,
                demand_variance: 0.0,
                ratio: None,
            }],
        };
        assert!(report.is_degenerate());
        assert!(!report.is_complete(&[1]));
        assert!(report.summary().contains('-'));
    }
}
