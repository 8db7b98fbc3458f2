use super::Label;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

/// Detection rate, false-alarm rate and accuracy. `None` where the
/// denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub dr: Option<f64>,
    pub far: Option<f64>,
    pub acc: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn metrics(&self) -> Metrics {
        Metrics {
            dr: ratio(self.tp, self.tp + self.fn_),
            far: ratio(self.fp, self.fp + self.tn),
            acc: ratio(self.tp + self.tn, self.total()),
        }
    }
}

/// Counts `(predicted, actual)` pairs.
pub fn confusion<I: IntoIterator<Item = (Label, Label)>>(pairs: I) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for (pred, truth) in pairs {
        match (pred, truth) {
            (Label::Confirmed, Label::Confirmed) => c.tp += 1,
            (Label::Confirmed, Label::Normal) => c.fp += 1,
            (Label::Normal, Label::Normal) => c.tn += 1,
            (Label::Normal, Label::Confirmed) => c.fn_ += 1,
        }
    }
    c
}
