//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Unknown keys produce a
//! warning; malformed values are errors. A single `seed` drives every
//! random choice (simulation, data split, forest).

use std::fmt::Write as _;
use std::str::FromStr;

use chrono::NaiveDate;

use crate::detect::SweepConfig;
use crate::error::{Error, Result};
use crate::ingest::{parse_utc_offset, DayClock};
use crate::pipeline::PipelineConfig;
use crate::riskfield::{outdoor_weight, viral_weight};
use crate::score::{ScoreOptions, WindowReducer};
use crate::simgen::WorldConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionConfig {
    pub q: f64,
    pub feature_days: u32,
    pub sweep: SweepConfig,
    pub sweep_rates: Vec<f64>,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            q: 0.95,
            feature_days: 8,
            sweep: SweepConfig::default(),
            sweep_rates: vec![0.01, 0.03, 0.10, 0.23, 0.50],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub score: ScoreOptions,
    pub detection: DetectionConfig,
    pub simulation: WorldConfig,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut c = Self {
            pipeline: PipelineConfig::default(),
            score: ScoreOptions::default(),
            detection: DetectionConfig::default(),
            simulation: WorldConfig::default(),
            seed: 42,
        };
        c.apply_seed();
        c
    }
}

fn value<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config { line, reason: format!("`{key}`: cannot parse `{v}`") })
}

fn flag(line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config { line, reason: format!("`{key}`: expected true or false, got `{v}`") }),
    }
}

fn list(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|x| value(line, key, x.trim())).collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    /// Parses `text` over the defaults. Returns the config and one warning
    /// per unknown key.
    pub fn parse(text: &str) -> Result<(Self, Vec<String>)> {
        let mut c = Self::default();
        let mut warnings = Vec::new();
        let (mut epoch, mut offset) = (c.pipeline.clock.epoch_date(), c.pipeline.clock.utc_offset_s());
        let mut window: Option<(usize, usize)> = None;
        let mut explicit_weights = (false, false);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(Error::Config { line, reason: format!("expected `key = value`, got `{body}`") });
            };
            let (k, v) = (k.trim(), v.trim());
            let cl = &mut c.pipeline.cleaning;
            let dc = &mut c.pipeline.decay;
            let det = &mut c.detection;
            let sim = &mut c.simulation;
            match k {
                "seed" => c.seed = value(line, k, v)?,
                "epoch_date" => {
                    epoch = NaiveDate::parse_from_str(v, "%Y-%m-%d")
                        .map_err(|_| Error::Config { line, reason: format!("`{k}`: expected YYYY-MM-DD") })?
                }
                "utc_offset" => {
                    offset = parse_utc_offset(v).map_err(|e| Error::Config { line, reason: e.to_string() })?
                }
                "terminal_dwell_s" => c.pipeline.terminal_dwell_s = value(line, k, v)?,
                "aba_window_s" => cl.aba_window_s = value(line, k, v)?,
                "speed_cut_kmh" => cl.speed_cut_kmh = value(line, k, v)?,
                "min_dwell_s" => cl.min_dwell_s = value(line, k, v)?,
                "kmeans_k" => cl.kmeans_k = value(line, k, v)?,
                "kmeans_max_iter" => cl.kmeans_max_iter = value(line, k, v)?,
                "incubation_days" => dc.incubation_days = value(line, k, v)?,
                "risk_window_days" => window = Some((line, value(line, k, v)?)),
                "outdoor_weights" => {
                    dc.outdoor_weights = list(line, k, v)?;
                    explicit_weights.0 = true;
                }
                "viral_weights" => {
                    dc.viral_weights = list(line, k, v)?;
                    explicit_weights.1 = true;
                }
                "recovery_days" => dc.recovery_days = value(line, k, v)?,
                "include_diagnosis_day" => dc.include_diagnosis_day = flag(line, k, v)?,
                "window_reducer" => {
                    c.score.reducer = WindowReducer::parse(v)
                        .ok_or_else(|| Error::Config { line, reason: format!("`{k}`: expected max, sum or mean") })?
                }
                "leave_one_out" => c.score.leave_one_out = flag(line, k, v)?,
                "q" => det.q = value(line, k, v)?,
                "feature_days" => det.feature_days = value(line, k, v)?,
                "train_fraction" => det.sweep.train_fraction = value(line, k, v)?,
                "max_depth" => det.sweep.tree.max_depth = value(line, k, v)?,
                "min_leaf" => det.sweep.tree.min_leaf = value(line, k, v)?,
                "n_trees" => det.sweep.forest.n_trees = value(line, k, v)?,
                "max_features" => {
                    det.sweep.forest.max_features = if v == "auto" { None } else { Some(value(line, k, v)?) }
                }
                "bootstrap" => det.sweep.forest.bootstrap = flag(line, k, v)?,
                "sweep_rates" => det.sweep_rates = list(line, k, v)?,
                "sweep_repeats" => det.sweep.repeats = value(line, k, v)?,
                "grid_rows" => sim.grid_rows = value(line, k, v)?,
                "grid_cols" => sim.grid_cols = value(line, k, v)?,
                "cell_spacing_m" => sim.cell_spacing_m = value(line, k, v)?,
                "origin_lat" => sim.origin_lat = value(line, k, v)?,
                "origin_lng" => sim.origin_lng = value(line, k, v)?,
                "n_agents" => sim.n_agents = value(line, k, v)?,
                "n_days" => sim.n_days = value(line, k, v)?,
                "infection_rate" => sim.infection_rate = value(line, k, v)?,
                "lag_min_days" => sim.lag_min_days = value(line, k, v)?,
                "lag_max_days" => sim.lag_max_days = value(line, k, v)?,
                "hazard_per_hour" => sim.hazard_per_hour = value(line, k, v)?,
                "clustered_fraction" => sim.clustered_fraction = value(line, k, v)?,
                "gathering_size" => sim.gathering_size = value(line, k, v)?,
                "gathering_attack_rate" => sim.gathering_attack_rate = value(line, k, v)?,
                "growth_per_day" => sim.growth_per_day = value(line, k, v)?,
                "sim_recovery_days" => sim.recovery_days = value(line, k, v)?,
                "commuter_share" => sim.commuter_share = value(line, k, v)?,
                "homebody_share" => sim.homebody_share = value(line, k, v)?,
                "n_venues" => sim.n_venues = value(line, k, v)?,
                "n_hospitals" => sim.n_hospitals = value(line, k, v)?,
                "pingpong_prob" => sim.pingpong_prob = value(line, k, v)?,
                _ => {
                    let w = format!("line {line}: unknown key `{k}` ignored");
                    log::warn!("{w}");
                    warnings.push(w);
                }
            }
        }
        if let Some((line, w)) = window {
            if w == 0 {
                return Err(Error::Config { line, reason: "risk_window_days must be >= 1".into() });
            }
            let dc = &mut c.pipeline.decay;
            if !explicit_weights.0 {
                dc.outdoor_weights = (0..w).map(|i| outdoor_weight(i, w)).collect();
            }
            if !explicit_weights.1 {
                dc.viral_weights = (0..w).map(viral_weight).collect();
            }
        }
        c.pipeline.clock = DayClock::new(epoch, offset);
        c.apply_seed();
        c.validate()?;
        Ok((c, warnings))
    }

    fn apply_seed(&mut self) {
        self.simulation.seed = self.seed;
        self.simulation.clock = self.pipeline.clock;
        self.detection.sweep.seed = self.seed;
        self.detection.sweep.forest.seed = self.seed;
        self.detection.sweep.q = self.detection.q;
    }

    pub fn validate(&self) -> Result<()> {
        self.pipeline.cleaning.validate()?;
        self.pipeline.decay.validate()?;
        self.simulation.validate()?;
        self.detection.sweep.tree.validate()?;
        let d = &self.detection;
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(d.q > 0.0 && d.q < 1.0) {
            return bad(format!("q = {} outside (0, 1)", d.q));
        }
        if d.feature_days == 0 {
            return bad("feature_days must be >= 1".into());
        }
        if d.sweep_rates.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
            return bad("sweep rates must lie in (0, 1)".into());
        }
        if !(d.sweep.train_fraction > 0.0 && d.sweep.train_fraction < 1.0) {
            return bad("train_fraction must lie in (0, 1)".into());
        }
        Ok(())
    }

    /// Renders every key; parsing the output gives back `self`.
    pub fn render(&self) -> String {
        let p = &self.pipeline;
        let (cl, dc, det, sim) = (&p.cleaning, &p.decay, &self.detection, &self.simulation);
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").expect("string write");
        kv("seed", self.seed.to_string());
        kv("epoch_date", p.clock.epoch_date().to_string());
        kv("utc_offset", p.clock.utc_offset_s().to_string());
        kv("terminal_dwell_s", p.terminal_dwell_s.to_string());
        kv("aba_window_s", cl.aba_window_s.to_string());
        kv("speed_cut_kmh", cl.speed_cut_kmh.to_string());
        kv("min_dwell_s", cl.min_dwell_s.to_string());
        kv("kmeans_k", cl.kmeans_k.to_string());
        kv("kmeans_max_iter", cl.kmeans_max_iter.to_string());
        kv("incubation_days", dc.incubation_days.to_string());
        kv("outdoor_weights", join(&dc.outdoor_weights));
        kv("viral_weights", join(&dc.viral_weights));
        kv("recovery_days", dc.recovery_days.to_string());
        kv("include_diagnosis_day", dc.include_diagnosis_day.to_string());
        let reducer = match self.score.reducer {
            WindowReducer::Max => "max",
            WindowReducer::Sum => "sum",
            WindowReducer::Mean => "mean",
        };
        kv("window_reducer", reducer.into());
        kv("leave_one_out", self.score.leave_one_out.to_string());
        kv("q", det.q.to_string());
        kv("feature_days", det.feature_days.to_string());
        kv("train_fraction", det.sweep.train_fraction.to_string());
        kv("max_depth", det.sweep.tree.max_depth.to_string());
        kv("min_leaf", det.sweep.tree.min_leaf.to_string());
        kv("n_trees", det.sweep.forest.n_trees.to_string());
        kv("max_features", det.sweep.forest.max_features.map_or_else(|| "auto".into(), |m| m.to_string()));
        kv("bootstrap", det.sweep.forest.bootstrap.to_string());
        kv("sweep_rates", join(&det.sweep_rates));
        kv("sweep_repeats", det.sweep.repeats.to_string());
        kv("grid_rows", sim.grid_rows.to_string());
        kv("grid_cols", sim.grid_cols.to_string());
        kv("cell_spacing_m", sim.cell_spacing_m.to_string());
        kv("origin_lat", sim.origin_lat.to_string());
        kv("origin_lng", sim.origin_lng.to_string());
        kv("n_agents", sim.n_agents.to_string());
        kv("n_days", sim.n_days.to_string());
        kv("infection_rate", sim.infection_rate.to_string());
        kv("lag_min_days", sim.lag_min_days.to_string());
        kv("lag_max_days", sim.lag_max_days.to_string());
        kv("hazard_per_hour", sim.hazard_per_hour.to_string());
        kv("clustered_fraction", sim.clustered_fraction.to_string());
        kv("gathering_size", sim.gathering_size.to_string());
        kv("gathering_attack_rate", sim.gathering_attack_rate.to_string());
        kv("growth_per_day", sim.growth_per_day.to_string());
        kv("sim_recovery_days", sim.recovery_days.to_string());
        kv("commuter_share", sim.commuter_share.to_string());
        kv("homebody_share", sim.homebody_share.to_string());
        kv("n_venues", sim.n_venues.to_string());
        kv("n_hospitals", sim.n_hospitals.to_string());
        kv("pingpong_prob", sim.pingpong_prob.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let (back, warnings) = RunConfig::parse(&c.render()).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(back, c);
    }

    #[test]
    fn overrides_and_comments() {
        let text = "# demo\nseed = 7\nn_agents = 500 # small\nleave_one_out = true\nutc_offset = -05:00\n\nwindow_reducer = mean\n";
        let (c, w) = RunConfig::parse(text).unwrap();
        assert!(w.is_empty());
        assert_eq!(c.seed, 7);
        assert_eq!(c.simulation.seed, 7);
        assert_eq!(c.detection.sweep.forest.seed, 7);
        assert_eq!(c.simulation.n_agents, 500);
        assert!(c.score.leave_one_out);
        assert_eq!(c.score.reducer, WindowReducer::Mean);
        assert_eq!(c.pipeline.clock.utc_offset_s(), -5 * 3600);
        assert_eq!(c.simulation.clock, c.pipeline.clock);
    }

    #[test]
    fn unknown_keys_warn() {
        let (_, w) = RunConfig::parse("colour = blue\n").unwrap();
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("colour"));
    }

    #[test]
    fn type_errors() {
        for bad in ["n_agents = many", "bootstrap = maybe", "no equals sign"] {
            assert!(matches!(RunConfig::parse(bad), Err(Error::Config { .. })), "{bad}");
        }
        for bad in ["infection_rate = 1.5", "q = 1", "min_leaf = 0"] {
            assert!(matches!(RunConfig::parse(bad), Err(Error::InvalidParameter(_))), "{bad}");
        }
        match RunConfig::parse("seed = 1\nmin_dwell_s = x\n") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn risk_window_resizes_weights() {
        let (c, _) = RunConfig::parse("risk_window_days = 4").unwrap();
        assert_eq!(c.pipeline.decay.outdoor_weights, [400.0, 200.0, 100.0, 50.0]);
        assert_eq!(c.pipeline.decay.viral_weights.len(), 4);
    }
}
