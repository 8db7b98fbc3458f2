use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Label;
use crate::error::{Error, Result};
use crate::ingest::{CaseRegistry, DayClock};
use crate::score::PersonScoreSeries;
use crate::DayIndex;

/// One labelled user and the day their scores are read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohortMember {
    pub user_id: String,
    pub label: Label,
    pub eval_day: DayIndex,
    series: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cohort {
    pub members: Vec<CohortMember>,
    /// Confirmed users left out because their evaluation day falls outside
    /// the usable score range.
    pub excluded: usize,
}

impl Cohort {
    /// Normal users are read on `end_day`; confirmed users on the day
    /// before their diagnosis. Confirmed users whose evaluation day lies
    /// outside `[first + feature_days - 1, end_day]` are excluded. Users
    /// missing from the registry count as normal.
    pub fn build(
        scores: &[PersonScoreSeries],
        registry: &CaseRegistry,
        clock: &DayClock,
        feature_days: u32,
        end_day: Option<DayIndex>,
    ) -> Result<Self> {
        if feature_days == 0 {
            return Err(Error::InvalidParameter("feature window must be at least one day".into()));
        }
        let end = match end_day {
            Some(d) => d,
            None => scores.iter().map(PersonScoreSeries::last_day).max().ok_or(Error::Empty("score series"))?,
        };
        let mut cohort = Cohort::default();
        for (series, s) in scores.iter().enumerate() {
            let earliest = s.first_day + feature_days as i64 - 1;
            let (label, eval_day) = match registry.get(&s.user_id) {
                Some(e) if e.label == Label::Confirmed => {
                    let date = e.confirmed_date.expect("confirmed entries carry a date");
                    (Label::Confirmed, clock.day_of_date(date) - 1)
                }
                _ => (Label::Normal, end),
            };
            if label == Label::Confirmed && !(earliest..=end).contains(&eval_day) {
                cohort.excluded += 1;
                continue;
            }
            cohort.members.push(CohortMember { user_id: s.user_id.clone(), label, eval_day, series });
        }
        Ok(cohort)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.members.iter().filter(|m| m.label == label).count()
    }
}

/// Row-major feature matrix with labels and the windowed score used by
/// the statistical detector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub n_features: usize,
    pub values: Vec<f64>,
    pub labels: Vec<Label>,
    pub window_scores: Vec<f64>,
    pub user_ids: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(n_features: usize) -> Self {
        Self { n_features, values: Vec::new(), labels: Vec::new(), window_scores: Vec::new(), user_ids: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn push(&mut self, user_id: String, row: &[f64], label: Label, window_score: f64) {
        assert_eq!(row.len(), self.n_features, "row width");
        self.values.extend_from_slice(row);
        self.labels.push(label);
        self.window_scores.push(window_score);
        self.user_ids.push(user_id);
    }

    /// Copies the given rows, in order, into a new matrix.
    pub fn subset(&self, rows: &[usize]) -> Self {
        let mut out = Self::new(self.n_features);
        for &i in rows {
            out.push(self.user_ids[i].clone(), self.row(i), self.labels[i], self.window_scores[i]);
        }
        out
    }

    /// Row indices per class, normal first.
    pub fn indices_by_label(&self) -> [Vec<usize>; 2] {
        let mut out = [Vec::new(), Vec::new()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[(l == Label::Confirmed) as usize].push(i);
        }
        out
    }
}

/// Daily scores over the `feature_days` days ending at each member's
/// evaluation day, oldest first.
pub fn build_features(scores: &[PersonScoreSeries], cohort: &Cohort, feature_days: u32) -> Result<FeatureMatrix> {
    let w = feature_days as usize;
    let mut m = FeatureMatrix::new(w);
    let mut row = vec![0.0; w];
    for member in &cohort.members {
        let s = &scores[member.series];
        let start = member.eval_day - w as i64 + 1;
        if start < s.first_day || member.eval_day > s.last_day() {
            return Err(Error::WindowOutOfRange {
                user: s.user_id.clone(),
                start,
                end: member.eval_day,
                first: s.first_day,
                last: s.last_day(),
            });
        }
        for (j, v) in row.iter_mut().enumerate() {
            *v = s.base(start + j as i64).expect("checked range");
        }
        let ws = s.window(member.eval_day).expect("checked range");
        m.push(member.user_id.clone(), &row, member.label, ws);
    }
    Ok(m)
}

/// Per-class shuffle and split; returns sorted (train, test) row indices.
pub fn stratified_split(labels: &[Label], train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in [Label::Normal, Label::Confirmed] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n_train = (idx.len() as f64 * train_fraction).round() as usize;
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::CaseEntry;
    use chrono::NaiveDate;

    fn series(user: &str, first_day: DayIndex, daily: Vec<f64>) -> PersonScoreSeries {
        let windowed = crate::score::windowed_score(&daily, 14, Default::default());
        PersonScoreSeries { user_id: user.into(), first_day, daily, windowed, window_days: 14, missing: false }
    }

    fn day(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 1, d).unwrap()
    }

    #[test]
    fn eight_day_rows() {
        let scores = vec![
            series("a", 0, (0..10).map(f64::from).collect()),
            series("b", 0, vec![0.0; 10]),
            series("c", 0, vec![1.0; 10]),
            series("late", 0, vec![1.0; 10]),
            series("early", 0, vec![1.0; 10]),
        ];
        let registry: CaseRegistry = [
            CaseEntry::normal("a"),
            CaseEntry::confirmed("c", day(10)),
            CaseEntry::confirmed("late", day(20)),
            CaseEntry::confirmed("early", day(5)),
        ]
        .into_iter()
        .collect();
        let cohort = Cohort::build(&scores, &registry, &DayClock::default(), 8, None).unwrap();
        assert_eq!(cohort.len(), 3);
        assert_eq!(cohort.excluded, 2);
        let m = build_features(&scores, &cohort, 8).unwrap();
        assert_eq!(m.n_features, 8);
        assert_eq!(m.len(), cohort.len());
        assert_eq!(m.row(0), &[2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        assert_eq!(m.row(1), &[0.0; 8]);
        assert_eq!(m.labels, [Label::Normal, Label::Normal, Label::Confirmed]);
        assert_eq!(cohort.members[2].eval_day, 8);
    }

    #[test]
    fn window_outside_coverage() {
        let scores = vec![series("a", 0, vec![0.0; 10])];
        let cohort = Cohort::build(&scores, &CaseRegistry::new(), &DayClock::default(), 8, Some(12)).unwrap();
        assert!(matches!(build_features(&scores, &cohort, 8), Err(Error::WindowOutOfRange { .. })));
    }

    #[test]
    fn split_is_stratified_and_seeded() {
        let labels: Vec<Label> = (0..100).map(|i| if i % 10 == 0 { Label::Confirmed } else { Label::Normal }).collect();
        let (train, test) = stratified_split(&labels, 0.8, 3).unwrap();
        assert_eq!((train.len(), test.len()), (80, 20));
        assert_eq!(train.iter().filter(|&&i| labels[i] == Label::Confirmed).count(), 8);
        assert_eq!(stratified_split(&labels, 0.8, 3).unwrap().0, train);
        assert_ne!(stratified_split(&labels, 0.8, 4).unwrap().0, train);
    }
}
