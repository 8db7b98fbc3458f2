//! Personal risk scores from stay fractions overlaid on risk maps.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::ops::RangeInclusive;

use crate::corpus::{CellId, Corpus, UserId};
use crate::error::{Error, Result};
use crate::riskfield::field::par_map;
use crate::riskfield::{CaseSet, DecayParams, ResolvedCase, RiskSeries, StayFractionTable};
use crate::DayIndex;

pub const SCORE_HEADER: [&str; 4] = ["user_id", "day", "base_score", "window_score"];

/// How daily scores are folded over the trailing window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum WindowReducer {
    #[default]
    Max,
    Sum,
    Mean,
}

impl WindowReducer {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "max" => Some(Self::Max),
            "sum" => Some(Self::Sum),
            "mean" => Some(Self::Mean),
            _ => None,
        }
    }

    fn reduce(self, values: &[f64]) -> f64 {
        match self {
            Self::Max => values.iter().copied().fold(0.0, f64::max),
            Self::Sum => values.iter().sum(),
            Self::Mean => values.iter().sum::<f64>() / values.len().max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScoreOptions {
    pub reducer: WindowReducer,
    /// Remove a confirmed user's own contribution from the map before
    /// scoring them.
    pub leave_one_out: bool,
}

/// Daily and windowed scores of one user over consecutive days.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonScoreSeries {
    pub user_id: String,
    pub first_day: DayIndex,
    pub daily: Vec<f64>,
    pub windowed: Vec<f64>,
    pub window_days: u32,
    /// True if the user has no trajectory.
    pub missing: bool,
}

impl PersonScoreSeries {
    pub fn last_day(&self) -> DayIndex {
        self.first_day + self.daily.len() as i64 - 1
    }

    pub fn days(&self) -> RangeInclusive<DayIndex> {
        self.first_day..=self.last_day()
    }

    fn index(&self, day: DayIndex) -> Option<usize> {
        let i = day - self.first_day;
        (0..self.daily.len() as i64).contains(&i).then_some(i as usize)
    }

    pub fn base(&self, day: DayIndex) -> Option<f64> {
        self.index(day).map(|i| self.daily[i])
    }

    pub fn window(&self, day: DayIndex) -> Option<f64> {
        self.index(day).map(|i| self.windowed[i])
    }
}

/// Weighted overlap of one user's fractions with the maps `i` days back.
///
/// `fractions_by_lag[i]` and `risk_by_lag[i]` describe day `k - i`; missing
/// entries contribute nothing.
pub fn daily_score(
    fractions_by_lag: &[Option<&[(CellId, f64)]>],
    risk_by_lag: &[Option<&[f64]>],
    viral_weights: &[f64],
) -> f64 {
    let mut y = 0.0;
    for ((f, r), &gamma) in fractions_by_lag.iter().zip(risk_by_lag).zip(viral_weights) {
        let (Some(f), Some(r)) = (f, r) else { continue };
        let overlap: f64 = f.iter().map(|&(c, frac)| frac * r[c.0 as usize]).sum();
        y += gamma * overlap;
    }
    y
}

/// Trailing-window reduction over `window_days + 1` days, truncated at the
/// start of the series.
pub fn windowed_score(daily: &[f64], window_days: u32, reducer: WindowReducer) -> Vec<f64> {
    (0..daily.len())
        .map(|k| {
            let lo = k.saturating_sub(window_days as usize);
            reducer.reduce(&daily[lo..=k])
        })
        .collect()
}

/// Scores each listed user on every day of `series`.
pub fn score_cohort(
    users: &[String],
    corpus: &Corpus,
    fractions: &StayFractionTable,
    cases: &CaseSet,
    series: &RiskSeries,
    params: &DecayParams,
    options: &ScoreOptions,
) -> Vec<PersonScoreSeries> {
    let Some(days) = series.days() else {
        return users
            .iter()
            .map(|u| PersonScoreSeries {
                user_id: u.clone(),
                first_day: 0,
                daily: Vec::new(),
                windowed: Vec::new(),
                window_days: params.incubation_days,
                missing: corpus.lookup_user(u).is_none(),
            })
            .collect();
    };
    let case_of: HashMap<UserId, &ResolvedCase> = cases.iter().filter_map(|c| Some((c.user?, c))).collect();
    let first = *days.start();
    let n_days = (*days.end() - first + 1) as usize;

    par_map(users, |user_id| {
        let user = corpus.lookup_user(user_id);
        let daily: Vec<f64> = match user {
            None => vec![0.0; n_days],
            Some(u) => {
                let own = options.leave_one_out.then(|| case_of.get(&u).copied()).flatten();
                (0..n_days as i64).map(|k| score_day(u, first + k, fractions, series, params, own)).collect()
            }
        };
        let windowed = windowed_score(&daily, params.incubation_days, options.reducer);
        PersonScoreSeries {
            user_id: user_id.clone(),
            first_day: first,
            daily,
            windowed,
            window_days: params.incubation_days,
            missing: user.is_none(),
        }
    })
}

fn score_day(
    user: UserId,
    day: DayIndex,
    fractions: &StayFractionTable,
    series: &RiskSeries,
    params: &DecayParams,
    own: Option<&ResolvedCase>,
) -> f64 {
    let lags = params.viral_weights.len() as i64;
    let frac: Vec<Option<&[(CellId, f64)]>> = (0..lags).map(|i| fractions.get(user, day - i)).collect();
    let risk: Vec<Option<&[f64]>> = (0..lags).map(|i| series.risk(day - i)).collect();
    let Some(case) = own else {
        return daily_score(&frac, &risk, &params.viral_weights);
    };
    // Residual map on the user's own cells only.
    let mut y = 0.0;
    for (i, &gamma) in params.viral_weights.iter().enumerate() {
        let (Some(f), Some(r)) = (frac[i], risk[i]) else { continue };
        let d = day - i as i64;
        let overlap: f64 = f
            .iter()
            .map(|&(cell, x)| {
                let own = own_aggregate(user, case, cell, d, fractions, series, params);
                x * (r[cell.0 as usize] - own).max(0.0)
            })
            .sum();
        y += gamma * overlap;
    }
    y
}

/// The case's own share of the aggregated map at `(cell, day)`, summed in
/// the same order as the map itself.
fn own_aggregate(
    user: UserId,
    case: &ResolvedCase,
    cell: CellId,
    day: DayIndex,
    fractions: &StayFractionTable,
    series: &RiskSeries,
    params: &DecayParams,
) -> f64 {
    let mut acc = 0.0;
    for (j, &w) in params.outdoor_weights.iter().enumerate() {
        let d = day - j as i64;
        if !series.base_span.contains(&d) || case.recovered_by(d) {
            continue;
        }
        let delta = params.delta(case.days_to_diagnosis(d));
        let f = fractions
            .get(user, d)
            .and_then(|cells| cells.binary_search_by_key(&cell, |x| x.0).ok().map(|i| cells[i].1));
        if let (true, Some(f)) = (delta > 0.0, f) {
            acc += w * delta * f;
        }
    }
    acc
}

/// Writes `user_id,day,base_score,window_score`, ordered by user then day.
pub fn write_scores<W: Write>(output: W, scores: &[PersonScoreSeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(output);
    w.write_record(SCORE_HEADER)?;
    let mut sorted: Vec<&PersonScoreSeries> = scores.iter().collect();
    sorted.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    for s in sorted {
        for (i, (b, win)) in s.daily.iter().zip(&s.windowed).enumerate() {
            let day = s.first_day + i as i64;
            w.write_record([s.user_id.as_str(), &day.to_string(), &b.to_string(), &win.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a score file back into per-user series. Each user's days must be
/// consecutive.
pub fn read_scores<R: Read>(input: R, window_days: u32) -> Result<Vec<PersonScoreSeries>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    if reader.headers()?.iter().ne(SCORE_HEADER) {
        return Err(Error::MissingHeader { expected: SCORE_HEADER.join(",") });
    }
    let mut out: Vec<PersonScoreSeries> = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let bad = |what: &str| Error::Scores(format!("line {line}: bad {what}"));
        let day: DayIndex = row.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| bad("day"))?;
        let base: f64 = row.get(2).and_then(|s| s.parse().ok()).ok_or_else(|| bad("base_score"))?;
        let win: f64 = row.get(3).and_then(|s| s.parse().ok()).ok_or_else(|| bad("window_score"))?;
        let user = &row[0];
        match out.last_mut() {
            Some(s) if s.user_id == user => {
                if day != s.last_day() + 1 {
                    return Err(Error::Scores(format!("line {line}: days of `{user}` not consecutive")));
                }
                s.daily.push(base);
                s.windowed.push(win);
            }
            _ => out.push(PersonScoreSeries {
                user_id: user.to_owned(),
                first_day: day,
                daily: vec![base],
                windowed: vec![win],
                window_days,
                missing: false,
            }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_day_in_constant_cell() {
        let f: &[(CellId, f64)] = &[(CellId(0), 1.0)];
        let r: &[f64] = &[350.0];
        let y = daily_score(
            &[Some(f), Some(f), Some(f)],
            &[Some(r), Some(r), Some(r)],
            &DecayParams::default().viral_weights,
        );
        // 350 * (1 + 0.1 + 0.01)
        assert!((y - 388.5).abs() < 1e-9, "{y}");
    }

    #[test]
    fn no_overlap_scores_zero() {
        let f: &[(CellId, f64)] = &[(CellId(1), 1.0)];
        let r: &[f64] = &[350.0, 0.0];
        assert_eq!(daily_score(&[Some(f), None, None], &[Some(r), Some(r), Some(r)], &[1.0, 0.1, 0.01]), 0.0);
    }

    #[test]
    fn window_examples() {
        let w = windowed_score(&[0.1, 0.5, 0.3], 2, WindowReducer::Max);
        assert_eq!(w, [0.1, 0.5, 0.5]);
        assert_eq!(windowed_score(&[2.0; 5], 3, WindowReducer::Max), [2.0; 5]);
        assert_eq!(windowed_score(&[0.1, 0.5, 0.3], 0, WindowReducer::Max), [0.1, 0.5, 0.3]);
        assert_eq!(windowed_score(&[1.0, 2.0, 3.0], 1, WindowReducer::Sum), [1.0, 3.0, 5.0]);
        assert_eq!(windowed_score(&[1.0, 2.0, 3.0], 1, WindowReducer::Mean), [1.0, 1.5, 2.5]);
    }

    #[test]
    fn score_file_round_trip() {
        let s = PersonScoreSeries {
            user_id: "u1".into(),
            first_day: 3,
            daily: vec![0.0, 1.5, 0.25],
            windowed: vec![0.0, 1.5, 1.5],
            window_days: 14,
            missing: false,
        };
        let mut buf = Vec::new();
        write_scores(&mut buf, std::slice::from_ref(&s)).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("user_id,day,base_score,window_score\nu1,3,0,0\n"));
        assert_eq!(read_scores(buf.as_slice(), 14).unwrap(), [s]);
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn window_monotone_in_length(daily in prop::collection::vec(0.0f64..10.0, 1..30), t in 0u32..10, extra in 1u32..5) {
            let short = windowed_score(&daily, t, WindowReducer::Max);
            let long = windowed_score(&daily, t + extra, WindowReducer::Max);
            for (a, b) in short.iter().zip(&long) {
                prop_assert!(b >= a);
            }
        }
    }
}
