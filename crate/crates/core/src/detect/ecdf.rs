use crate::error::{Error, Result};

/// Empirical CDF of a sample of normal-group scores.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn fit(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::Empty("empirical CDF sample"));
        }
        if sample.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidParameter("NaN in empirical CDF sample".into()));
        }
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of the sample at or below `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    pub fn p_value(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// The `ceil(q * n)`-th order statistic, no interpolation.
    pub fn critical_value(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParameter(format!("quantile level {q} outside (0, 1)")));
        }
        let n = self.sorted.len();
        // Guard against `q * n` landing a hair above an integer.
        let rank = ((q * n as f64) - 1e-9).ceil().max(1.0) as usize;
        Ok(self.sorted[rank.min(n) - 1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutcome {
    pub user_id: String,
    pub score: f64,
    pub suspected: bool,
    pub p_value: f64,
}

/// Flags every score strictly above `threshold`.
pub fn detect_stat<'a, I>(scores: I, threshold: f64, null: &EmpiricalCdf) -> Vec<DetectionOutcome>
where
    I: IntoIterator<Item = (&'a str, f64)>,
{
    scores
        .into_iter()
        .map(|(user, score)| DetectionOutcome {
            user_id: user.to_owned(),
            score,
            suspected: score > threshold,
            p_value: null.p_value(score),
        })
        .collect()
}
