//! End-to-end wiring: corpus to cleaned stays, stay fractions, risk maps
//! and personal scores.

use std::ops::RangeInclusive;

use crate::cleaning::{clean_track, remove_aba_switches, switch_speeds, CleaningConfig, CleaningStats};
use crate::corpus::{Corpus, UserId};
use crate::error::Result;
use crate::ingest::{build_dwell_segments, split_at_days, CaseRegistry, DayClock, DwellSegment, ObservationWindow};
use crate::riskfield::field::par_map;
use crate::riskfield::{compute_risk_series, CaseSet, DecayParams, RiskSeries, StayFractionTable};
use crate::score::{score_cohort, PersonScoreSeries, ScoreOptions};
use crate::DayIndex;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub clock: DayClock,
    /// Dwell credited to a user's final observation.
    pub terminal_dwell_s: i64,
    pub cleaning: CleaningConfig,
    pub decay: DecayParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            clock: DayClock::default(),
            terminal_dwell_s: 3600,
            cleaning: CleaningConfig::default(),
            decay: DecayParams::default(),
        }
    }
}

/// A corpus after segment building, cleaning and day splitting.
#[derive(Debug, Clone)]
pub struct PreparedCorpus {
    pub corpus: Corpus,
    /// Cleaned, day-split segments indexed by `UserId`.
    pub pieces: Vec<Vec<DwellSegment>>,
    pub fractions: StayFractionTable,
    pub stats: CleaningStats,
    pub window: Option<ObservationWindow>,
}

impl PreparedCorpus {
    pub fn pieces(&self, user: UserId) -> &[DwellSegment] {
        &self.pieces[user.0 as usize]
    }

    pub fn day_range(&self) -> Option<RangeInclusive<DayIndex>> {
        self.fractions.day_range()
    }
}

/// Builds segments, cleans and splits them, then tabulates stay fractions.
/// Users are processed independently; output is identical for any thread count.
pub fn prepare(corpus: Corpus, config: &PipelineConfig, window: Option<ObservationWindow>) -> PreparedCorpus {
    let window = window.or_else(|| corpus.default_window(&config.clock));
    let users: Vec<UserId> = corpus.tracks().map(|(u, _)| u).collect();
    let cells = corpus.cells();
    let per_user = par_map(&users, |&u| {
        let Some(w) = window else {
            return (Vec::new(), CleaningStats::default());
        };
        let segs = build_dwell_segments(corpus.track(u), w, config.terminal_dwell_s);
        let (clean, stats) = clean_track(&segs, cells, &config.cleaning);
        (split_at_days(&clean, &config.clock), stats)
    });
    let mut stats = CleaningStats::default();
    let mut pieces = Vec::with_capacity(per_user.len());
    for (p, s) in per_user {
        stats.merge(&s);
        pieces.push(p);
    }
    let fractions = StayFractionTable::build(
        pieces.iter().enumerate().map(|(i, p)| (UserId(i as u32), p.as_slice())),
        &config.clock,
    );
    PreparedCorpus { corpus, pieces, fractions, stats, window }
}

/// Entry speeds (km/h) after A-B-A removal, pooled over all users.
pub fn pooled_switch_speeds(corpus: &Corpus, config: &PipelineConfig, window: ObservationWindow) -> Vec<f64> {
    let users: Vec<UserId> = corpus.tracks().map(|(u, _)| u).collect();
    par_map(&users, |&u| {
        let segs = build_dwell_segments(corpus.track(u), window, config.terminal_dwell_s);
        let aba = remove_aba_switches(&segs, config.cleaning.aba_window_s);
        switch_speeds(&aba, corpus.cells()).into_iter().map(|(_, v)| v).collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Resolves the registry against the corpus and computes maps over `days`.
pub fn risk_maps(
    prepared: &PreparedCorpus,
    registry: &CaseRegistry,
    config: &PipelineConfig,
    days: RangeInclusive<DayIndex>,
) -> Result<(CaseSet, RiskSeries)> {
    config.decay.validate()?;
    let cases = CaseSet::resolve(registry, &config.clock, &prepared.corpus, config.decay.recovery_days);
    let series = compute_risk_series(&prepared.fractions, &cases, &config.decay, prepared.corpus.cells(), days);
    Ok((cases, series))
}

/// Scores every corpus user over the days covered by `series`.
pub fn score_all(
    prepared: &PreparedCorpus,
    cases: &CaseSet,
    series: &RiskSeries,
    config: &PipelineConfig,
    options: &ScoreOptions,
) -> Vec<PersonScoreSeries> {
    score_cohort(prepared.corpus.users(), &prepared.corpus, &prepared.fractions, cases, series, &config.decay, options)
}
