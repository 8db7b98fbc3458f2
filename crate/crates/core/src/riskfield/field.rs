use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::sync::Arc;

use crate::corpus::CellTable;
use crate::DayIndex;

use super::cases::CaseSet;
use super::decay::DecayParams;
use super::fractions::StayFractionTable;
use super::map::RiskMap;

/// Base field on `day`: every contributing case adds its incubation decay
/// times its stay fraction to each cell it visited.
///
/// Cases are accumulated in ascending user-id order, which fixes the
/// floating-point summation order.
pub fn base_field(
    fractions: &StayFractionTable,
    cases: &CaseSet,
    params: &DecayParams,
    day: DayIndex,
    n_cells: usize,
) -> Vec<f64> {
    let mut field = vec![0.0; n_cells];
    let Some(day_fractions) = fractions.day(day) else {
        return field;
    };
    for (case, delta) in cases.contributing(day, params) {
        let Some(cells) = case.user.and_then(|u| day_fractions.get(u)) else {
            continue;
        };
        for &(cell, f) in cells {
            field[cell.0 as usize] += delta * f;
        }
    }
    field
}

/// Blends base fields with outdoor weights. `base_by_lag[i]` is the field
/// `i` days before the target day; `None` counts as all-zero.
pub fn aggregate_field(base_by_lag: &[Option<&[f64]>], outdoor_weights: &[f64], n_cells: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_cells];
    for (base, &w) in base_by_lag.iter().zip(outdoor_weights) {
        if let Some(base) = base {
            for (o, &b) in out.iter_mut().zip(base.iter()) {
                *o += w * b;
            }
        }
    }
    out
}

/// Base fields and risk maps for a contiguous day range.
#[derive(Debug, Clone)]
pub struct RiskSeries {
    pub cells: Arc<CellTable>,
    /// Covers the map range extended back by the outdoor window. Empty for
    /// series loaded from map files.
    pub base: BTreeMap<DayIndex, Vec<f64>>,
    pub maps: BTreeMap<DayIndex, RiskMap>,
    /// Days whose base fields went into the maps.
    pub base_span: RangeInclusive<DayIndex>,
}

impl RiskSeries {
    pub fn map(&self, day: DayIndex) -> Option<&RiskMap> {
        self.maps.get(&day)
    }

    pub fn risk(&self, day: DayIndex) -> Option<&[f64]> {
        self.maps.get(&day).map(|m| m.risk.as_slice())
    }

    pub fn days(&self) -> Option<RangeInclusive<DayIndex>> {
        Some(*self.maps.keys().next()?..=*self.maps.keys().next_back()?)
    }

    /// Wraps maps read back from disk, re-indexed onto `cells`.
    pub fn from_maps(cells: &Arc<CellTable>, maps: Vec<RiskMap>, params: &DecayParams) -> Self {
        let window = params.outdoor_weights.len() as i64;
        let maps: BTreeMap<DayIndex, RiskMap> = maps.into_iter().map(|m| (m.day, m.reindex(cells))).collect();
        let base_span = match (maps.keys().next(), maps.keys().next_back()) {
            (Some(&a), Some(&b)) => a - (window - 1)..=b,
            _ => RangeInclusive::new(1, 0),
        };
        Self { cells: Arc::clone(cells), base: BTreeMap::new(), maps, base_span }
    }
}

/// Computes risk maps for every day in `days`.
///
/// Days are independent, so they run in parallel when the `parallel`
/// feature is on; results do not depend on the thread count.
pub fn compute_risk_series(
    fractions: &StayFractionTable,
    cases: &CaseSet,
    params: &DecayParams,
    cells: &Arc<CellTable>,
    days: RangeInclusive<DayIndex>,
) -> RiskSeries {
    let n = cells.len();
    let window = params.outdoor_weights.len() as i64;
    let base_days: Vec<DayIndex> = (*days.start() - (window - 1)..=*days.end()).collect();
    let base: BTreeMap<DayIndex, Vec<f64>> =
        par_map(&base_days, |&d| (d, base_field(fractions, cases, params, d, n))).into_iter().collect();

    let map_days: Vec<DayIndex> = days.collect();
    let maps = par_map(&map_days, |&d| {
        let lagged: Vec<Option<&[f64]>> = (0..window).map(|i| base.get(&(d - i)).map(Vec::as_slice)).collect();
        let risk = aggregate_field(&lagged, &params.outdoor_weights, n);
        (d, RiskMap { day: d, cells: Arc::clone(cells), risk })
    })
    .into_iter()
    .collect();
    let base_span =
        RangeInclusive::new(base_days.first().copied().unwrap_or(1), base_days.last().copied().unwrap_or(0));
    RiskSeries { cells: Arc::clone(cells), base, maps, base_span }
}

#[cfg(feature = "parallel")]
pub(crate) fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CellId, UserId};
    use crate::ingest::{DayClock, DwellSegment};
    use crate::riskfield::ResolvedCase;

    fn one_cell_world() -> (Arc<CellTable>, DayClock) {
        let cells = CellTable::from_cells([("a".to_string(), 0.0, 0.0), ("b".to_string(), 0.0, 0.01)]);
        (Arc::new(cells), DayClock::default())
    }

    fn full_days(clock: &DayClock, cell: CellId, days: RangeInclusive<i64>) -> Vec<DwellSegment> {
        days.map(|d| DwellSegment::new(cell, clock.day_start(d), clock.day_start(d + 1))).collect()
    }

    fn case(user: u32, confirmed_day: i64) -> ResolvedCase {
        ResolvedCase { user_id: format!("u{user}"), user: Some(UserId(user)), confirmed_day, recovery_days: 10 }
    }

    #[test]
    fn single_case_two_days_before_diagnosis() {
        let (cells, clock) = one_cell_world();
        let track = full_days(&clock, CellId(0), 0..=0);
        let table = StayFractionTable::build([(UserId(0), &track[..])], &clock);
        let cases = CaseSet::from_cases(vec![case(0, 2)]);
        let f = base_field(&table, &cases, &DecayParams::default(), 0, cells.len());
        // delta_2 with T = 14 is exp(-1/13).
        assert!((f[0] - (-1.0f64 / 13.0).exp()).abs() < 1e-15);
        assert!((f[0] - 0.925_962).abs() < 1e-6);
        assert_eq!(f[1], 0.0);
    }

    #[test]
    fn empty_registry_gives_zero_field() {
        let (cells, clock) = one_cell_world();
        let track = full_days(&clock, CellId(0), 0..=3);
        let table = StayFractionTable::build([(UserId(0), &track[..])], &clock);
        let f = base_field(&table, &CaseSet::default(), &DecayParams::default(), 1, cells.len());
        assert!(f.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identical_cases_double_the_field() {
        let (cells, clock) = one_cell_world();
        let track = full_days(&clock, CellId(1), 0..=3);
        let table = StayFractionTable::build([(UserId(0), &track[..]), (UserId(1), &track[..])], &clock);
        let p = DecayParams::default();
        let single = base_field(&table, &CaseSet::from_cases(vec![case(0, 5)]), &p, 2, cells.len());
        let double = base_field(&table, &CaseSet::from_cases(vec![case(0, 5), case(1, 5)]), &p, 2, cells.len());
        assert_eq!(double[1], 2.0 * single[1]);
    }

    #[test]
    fn aggregate_examples() {
        let ones = [1.0];
        let w = DecayParams::default().outdoor_weights;
        assert_eq!(aggregate_field(&[Some(&ones), Some(&ones), Some(&ones)], &w, 1), [350.0]);
        let twos = [2.0];
        assert_eq!(aggregate_field(&[None, None, Some(&twos)], &w, 1), [100.0]);
        assert_eq!(aggregate_field(&[], &w, 1), [0.0]);
    }

    #[test]
    fn series_treats_missing_prior_days_as_zero() {
        let (cells, clock) = one_cell_world();
        let track = full_days(&clock, CellId(0), 0..=5);
        let table = StayFractionTable::build([(UserId(0), &track[..])], &clock);
        let p = DecayParams::default();
        let cases = CaseSet::from_cases(vec![case(0, 10)]);
        let series = compute_risk_series(&table, &cases, &p, &cells, 0..=5);
        assert_eq!(series.days(), Some(0..=5));
        let d0 = p.delta(10);
        assert!((series.risk(0).unwrap()[0] - 200.0 * d0).abs() < 1e-12);
        let expected2 = 200.0 * p.delta(8) + 100.0 * p.delta(9) + 50.0 * p.delta(10);
        assert!((series.risk(2).unwrap()[0] - expected2).abs() < 1e-12);
    }
}
