use crate::corpus::{Corpus, UserId};
use crate::error::{Error, Result};
use crate::ingest::{CaseEntry, CaseRegistry, DayClock, Label};
use crate::DayIndex;

use super::decay::DecayParams;

/// A confirmed case with its diagnosis on the day axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedCase {
    pub user_id: String,
    /// `None` when the case has no trajectory in the corpus.
    pub user: Option<UserId>,
    pub confirmed_day: DayIndex,
    pub recovery_days: u32,
}

impl ResolvedCase {
    /// Days from `day` until diagnosis.
    pub fn days_to_diagnosis(&self, day: DayIndex) -> i64 {
        self.confirmed_day - day
    }

    pub fn recovered_by(&self, day: DayIndex) -> bool {
        day >= self.confirmed_day + self.recovery_days as i64
    }
}

/// Confirmed cases in ascending user-id order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CaseSet {
    cases: Vec<ResolvedCase>,
}

impl CaseSet {
    pub fn resolve(registry: &CaseRegistry, clock: &DayClock, corpus: &Corpus, default_recovery_days: u32) -> Self {
        let cases = registry
            .confirmed()
            .map(|e| ResolvedCase {
                user_id: e.user_id.clone(),
                user: corpus.lookup_user(&e.user_id),
                confirmed_day: clock.day_of_date(e.confirmed_date.expect("confirmed entries carry a date")),
                recovery_days: e.recovery_days.unwrap_or(default_recovery_days),
            })
            .collect();
        Self { cases }
    }

    /// Cases must be sorted by user id.
    pub fn from_cases(cases: Vec<ResolvedCase>) -> Self {
        assert!(cases.windows(2).all(|w| w[0].user_id < w[1].user_id), "cases must be sorted by user id");
        Self { cases }
    }

    pub fn iter(&self) -> impl Iterator<Item = &ResolvedCase> {
        self.cases.iter()
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn by_user(&self, user: UserId) -> Option<&ResolvedCase> {
        self.cases.iter().find(|c| c.user == Some(user))
    }

    /// Cases whose field contribution on `day` is non-zero.
    pub fn contributing<'a>(
        &'a self,
        day: DayIndex,
        params: &'a DecayParams,
    ) -> impl Iterator<Item = (&'a ResolvedCase, f64)> + 'a {
        self.cases.iter().filter(move |c| !c.recovered_by(day)).filter_map(move |c| {
            let d = params.delta(c.days_to_diagnosis(day));
            (d > 0.0).then_some((c, d))
        })
    }
}

/// Whole days from `day` to the entry's diagnosis date.
pub fn days_to_diagnosis(entry: &CaseEntry, clock: &DayClock, day: DayIndex) -> Result<i64> {
    match (entry.label, entry.confirmed_date) {
        (Label::Confirmed, Some(date)) => Ok(clock.day_of_date(date) - day),
        _ => Err(Error::NotConfirmed(entry.user_id.clone())),
    }
}

/// Cases not yet recovered on `day`.
pub fn apply_recovery(cases: &CaseSet, day: DayIndex) -> Vec<&ResolvedCase> {
    cases.iter().filter(|c| !c.recovered_by(day)).collect()
}
