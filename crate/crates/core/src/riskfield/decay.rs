use crate::error::{Error, Result};

/// Decay hyperparameters of the risk field and the personal score.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayParams {
    /// Incubation period `T` in days.
    pub incubation_days: u32,
    /// Outdoor weights, index `i` weighs the base field `i` days back.
    pub outdoor_weights: Vec<f64>,
    /// Viral weights, index `i` weighs exposure `i` days back.
    pub viral_weights: Vec<f64>,
    /// Default days from diagnosis until a case stops counting.
    pub recovery_days: u32,
    /// Give the diagnosis day itself weight `exp(-1/(T+1))` instead of 0.
    pub include_diagnosis_day: bool,
}

impl Default for DecayParams {
    fn default() -> Self {
        Self::with_window(3)
    }
}

impl DecayParams {
    /// Defaults with a lookback of `window` days: outdoor weights halve
    /// each day back from `50 * 2^(window-1)` and viral weights are `10^-i`.
    pub fn with_window(window: usize) -> Self {
        Self {
            incubation_days: 14,
            outdoor_weights: (0..window).map(|i| outdoor_weight(i, window)).collect(),
            viral_weights: (0..window).map(viral_weight).collect(),
            recovery_days: 10,
            include_diagnosis_day: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(Error::InvalidParameter(m.to_owned()));
        if self.incubation_days < 1 {
            return err("incubation_days must be >= 1");
        }
        if self.recovery_days < 1 {
            return err("recovery_days must be >= 1");
        }
        for (name, w) in [("outdoor", &self.outdoor_weights), ("viral", &self.viral_weights)] {
            if w.is_empty() || w.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} weights must be non-empty and positive")));
            }
            if w.windows(2).any(|p| p[1] >= p[0]) {
                return Err(Error::InvalidParameter(format!("{name} weights must be strictly decreasing")));
            }
        }
        Ok(())
    }

    /// Incubation decay for a case `s` days before its diagnosis.
    pub fn delta(&self, s: i64) -> f64 {
        if s == 0 && self.include_diagnosis_day {
            return (-1.0 / (self.incubation_days as f64 + 1.0)).exp();
        }
        incubation_decay(s, self.incubation_days)
    }
}

/// `exp(-1/(T+1-s))` for `1 <= s <= T`, zero elsewhere.
pub fn incubation_decay(s: i64, incubation_days: u32) -> f64 {
    let t = incubation_days as i64;
    if s < 1 || s > t {
        return 0.0;
    }
    (-1.0 / (t + 1 - s) as f64).exp()
}

/// `50 * 2^(window-1-i)`; with the default window of 3 this is 200, 100, 50.
pub fn outdoor_weight(i: usize, window: usize) -> f64 {
    50.0 * 2f64.powi(window as i32 - 1 - i as i32)
}

/// `10^-i`.
pub fn viral_weight(i: usize) -> f64 {
    match i {
        0 => 1.0,
        1 => 0.1,
        2 => 0.01,
        _ => 10f64.powi(-(i as i32)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incubation_examples() {
        assert_eq!(incubation_decay(15, 14), 0.0);
        assert!((incubation_decay(14, 14) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((incubation_decay(14, 14) - 0.367_879).abs() < 1e-6);
        assert!((incubation_decay(1, 14) - 0.931_063).abs() < 1e-6);
        assert_eq!(incubation_decay(0, 14), 0.0);
        assert_eq!(incubation_decay(-3, 14), 0.0);
    }

    #[test]
    fn strictly_decreasing_in_s() {
        for t in 1..30 {
            for s in 1..t as i64 {
                assert!(incubation_decay(s + 1, t) < incubation_decay(s, t));
            }
        }
    }

    #[test]
    fn default_weights() {
        let p = DecayParams::default();
        assert_eq!(p.outdoor_weights, [200.0, 100.0, 50.0]);
        assert_eq!(p.viral_weights, [1.0, 0.1, 0.01]);
        assert_eq!((p.incubation_days, p.recovery_days), (14, 10));
        p.validate().unwrap();
    }

    #[test]
    fn diagnosis_day_toggle() {
        let mut p = DecayParams::default();
        assert_eq!(p.delta(0), 0.0);
        p.include_diagnosis_day = true;
        assert!((p.delta(0) - (-1.0f64 / 15.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_non_decreasing() {
        let bad = [
            DecayParams { outdoor_weights: vec![100.0, 100.0, 50.0], ..Default::default() },
            DecayParams { viral_weights: vec![1.0, -0.1], ..Default::default() },
            DecayParams { incubation_days: 0, ..Default::default() },
        ];
        assert!(bad.iter().all(|p| p.validate().is_err()));
    }
}
