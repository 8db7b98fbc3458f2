use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use crate::corpus::{CellId, UserId};
use crate::ingest::{DayClock, DwellSegment};
use crate::DayIndex;

/// One user's share of dwell time per cell on one day, ascending by cell.
#[derive(Debug, Clone, PartialEq)]
pub struct UserDayFractions {
    pub user: UserId,
    pub cells: Vec<(CellId, f64)>,
}

/// All users' fractions for one day, ascending by user.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DayFractions {
    rows: Vec<UserDayFractions>,
}

impl DayFractions {
    pub fn get(&self, user: UserId) -> Option<&[(CellId, f64)]> {
        self.rows.binary_search_by_key(&user, |r| r.user).ok().map(|i| self.rows[i].cells.as_slice())
    }

    pub fn rows(&self) -> &[UserDayFractions] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// `(user, day, cell) -> fraction`, stored day-major.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StayFractionTable {
    days: BTreeMap<DayIndex, DayFractions>,
}

impl StayFractionTable {
    /// Builds the table from day-split cleaned segments, one slice per user
    /// in ascending user order.
    pub fn build<'a, I>(tracks: I, clock: &DayClock) -> Self
    where
        I: IntoIterator<Item = (UserId, &'a [DwellSegment])>,
    {
        let mut days: BTreeMap<DayIndex, DayFractions> = BTreeMap::new();
        for (user, pieces) in tracks {
            for (day, cells) in user_fractions(pieces, clock) {
                let rows = &mut days.entry(day).or_default().rows;
                debug_assert!(rows.last().is_none_or(|r| r.user < user));
                rows.push(UserDayFractions { user, cells });
            }
        }
        Self { days }
    }

    pub fn get(&self, user: UserId, day: DayIndex) -> Option<&[(CellId, f64)]> {
        self.days.get(&day)?.get(user)
    }

    pub fn day(&self, day: DayIndex) -> Option<&DayFractions> {
        self.days.get(&day)
    }

    pub fn day_range(&self) -> Option<RangeInclusive<DayIndex>> {
        let first = *self.days.keys().next()?;
        let last = *self.days.keys().next_back()?;
        Some(first..=last)
    }

    pub fn iter(&self) -> impl Iterator<Item = (DayIndex, &DayFractions)> {
        self.days.iter().map(|(d, f)| (*d, f))
    }
}

/// Per-day fractions for one user's day-split segments.
pub(crate) fn user_fractions(pieces: &[DwellSegment], clock: &DayClock) -> Vec<(DayIndex, Vec<(CellId, f64)>)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < pieces.len() {
        let day = clock.day_of(pieces[i].start);
        let mut j = i;
        while j < pieces.len() && clock.day_of(pieces[j].start) == day {
            j += 1;
        }
        if let Some(cells) = normalize(&pieces[i..j]) {
            out.push((day, cells));
        }
        i = j;
    }
    out
}

fn normalize(pieces: &[DwellSegment]) -> Option<Vec<(CellId, f64)>> {
    let mut dwell: Vec<(CellId, i64)> = pieces.iter().map(|p| (p.cell, p.dwell_s())).collect();
    dwell.sort_unstable_by_key(|&(c, _)| c);
    let mut merged: Vec<(CellId, i64)> = Vec::with_capacity(dwell.len());
    for (c, d) in dwell {
        match merged.last_mut() {
            Some(last) if last.0 == c => last.1 += d,
            _ => merged.push((c, d)),
        }
    }
    merged.retain(|&(_, d)| d > 0);
    let total: i64 = merged.iter().map(|&(_, d)| d).sum();
    if total == 0 {
        return None;
    }
    let total = total as f64;
    Some(merged.into_iter().map(|(c, d)| (c, d as f64 / total)).collect())
}

/// Fractions of every user with dwell on `day`.
pub fn stay_fractions<'a, I>(tracks: I, day: DayIndex, clock: &DayClock) -> DayFractions
where
    I: IntoIterator<Item = (UserId, &'a [DwellSegment])>,
{
    let start = clock.day_start(day);
    let end = clock.day_start(day + 1);
    let rows = tracks
        .into_iter()
        .filter_map(|(user, pieces)| {
            let lo = pieces.partition_point(|p| p.end <= start);
            let hi = pieces.partition_point(|p| p.start < end);
            let clipped: Vec<DwellSegment> = pieces[lo..hi.max(lo)]
                .iter()
                .map(|p| DwellSegment::new(p.cell, p.start.max(start), p.end.min(end)))
                .collect();
            normalize(&clipped).map(|cells| UserDayFractions { user, cells })
        })
        .collect();
    DayFractions { rows }
}
