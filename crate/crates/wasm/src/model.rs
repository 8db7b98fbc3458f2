use epirisk::detect::{build_features, Cohort, EmpiricalCdf, Label};
use epirisk::pipeline::{prepare, risk_maps, score_all, PipelineConfig, PreparedCorpus};
use epirisk::riskfield::{CaseSet, DecayParams, RiskSeries};
use epirisk::score::ScoreOptions;
use epirisk::simgen::{generate_world, simulate, Pos, Simulation, WorldConfig};
use epirisk::{Error, Result};

const FEATURE_DAYS: u32 = 8;

/// A small simulated town with its maps and scores, recomputed whenever
/// the decay weights change.
pub struct DemoModel {
    pub sim: Simulation,
    prepared: PreparedCorpus,
    pipeline: PipelineConfig,
    series: RiskSeries,
    normal_scores: Vec<f64>,
    confirmed_scores: Vec<f64>,
}

/// One point of the detection trade-off curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub q: f64,
    pub threshold: f64,
    pub dr: f64,
    pub far: f64,
}

impl DemoModel {
    pub fn new(seed: u64, n_agents: usize) -> Result<Self> {
        let world = WorldConfig {
            grid_rows: 48,
            grid_cols: 48,
            n_agents,
            n_days: 21,
            n_venues: 6,
            n_hospitals: 2,
            seed,
            ..Default::default()
        };
        let sim = simulate(generate_world(&world)?)?;
        let pipeline = PipelineConfig::default();
        let prepared = prepare(sim.corpus.clone(), &pipeline, Some(sim.window()));
        let (series, normal_scores, confirmed_scores) = analyse(&sim, &prepared, &pipeline)?;
        Ok(Self { sim, prepared, pipeline, series, normal_scores, confirmed_scores })
    }

    pub fn rows(&self) -> u32 {
        self.sim.world.config.grid_rows
    }

    pub fn cols(&self) -> u32 {
        self.sim.world.config.grid_cols
    }

    pub fn n_days(&self) -> u32 {
        self.sim.world.config.n_days
    }

    pub fn decay(&self) -> &DecayParams {
        &self.pipeline.decay
    }

    /// Replaces both weight vectors and recomputes maps and scores.
    /// On error the previous weights stay in place.
    pub fn set_weights(&mut self, outdoor: &[f64], viral: &[f64]) -> Result<()> {
        if outdoor.len() != viral.len() {
            return Err(Error::InvalidParameter("outdoor and viral weights need the same length".into()));
        }
        let candidate = DecayParams {
            outdoor_weights: outdoor.to_vec(),
            viral_weights: viral.to_vec(),
            ..self.pipeline.decay.clone()
        };
        candidate.validate()?;
        let previous = std::mem::replace(&mut self.pipeline.decay, candidate);
        if let Err(e) = self.recompute() {
            self.pipeline.decay = previous;
            return Err(e);
        }
        Ok(())
    }

    fn recompute(&mut self) -> Result<()> {
        (self.series, self.normal_scores, self.confirmed_scores) = analyse(&self.sim, &self.prepared, &self.pipeline)?;
        Ok(())
    }

    /// Risk of every grid square on `day`, row-major. Empty outside the run.
    pub fn risk_grid(&self, day: i64) -> Vec<f64> {
        let Some(risk) = self.series.risk(day) else { return Vec::new() };
        let world = &self.sim.world;
        (0..world.n_cells()).map(|i| risk[world.cell(world.pos_of(i)).0 as usize]).collect()
    }

    /// Largest cell risk over all days, for a fixed colour scale.
    pub fn max_risk(&self) -> f64 {
        self.series.maps.values().flat_map(|m| m.risk.iter().copied()).fold(0.0, f64::max)
    }

    pub fn region_totals(&self) -> Vec<f64> {
        self.series.maps.values().map(|m| m.total()).collect()
    }

    pub fn n_scored(&self) -> (usize, usize) {
        (self.normal_scores.len(), self.confirmed_scores.len())
    }

    /// Threshold each `q` on the normal scores and report in-sample DR and FAR.
    pub fn detection_curve(&self, qs: &[f64]) -> Result<Vec<CurvePoint>> {
        let null = EmpiricalCdf::fit(&self.normal_scores)?;
        let rate = |v: &[f64], t: f64| v.iter().filter(|&&s| s > t).count() as f64 / v.len().max(1) as f64;
        qs.iter()
            .map(|&q| {
                let threshold = null.critical_value(q)?;
                Ok(CurvePoint {
                    q,
                    threshold,
                    dr: rate(&self.confirmed_scores, threshold),
                    far: rate(&self.normal_scores, threshold),
                })
            })
            .collect()
    }

    /// Grid positions of agents confirmed by the end of the run, by home.
    pub fn confirmed_homes(&self) -> Vec<Pos> {
        self.sim
            .world
            .agents
            .iter()
            .enumerate()
            .filter(|(a, _)| self.sim.registry.label_of(&epirisk::simgen::user_name(*a)) == Some(Label::Confirmed))
            .map(|(_, p)| p.home)
            .collect()
    }
}

/// Maps over the whole run, then window scores split into normal and
/// confirmed (own contribution removed).
fn analyse(
    sim: &Simulation,
    prepared: &PreparedCorpus,
    pipeline: &PipelineConfig,
) -> Result<(RiskSeries, Vec<f64>, Vec<f64>)> {
    let days = 0..=sim.world.config.n_days as i64 - 1;
    let (cases, series): (CaseSet, RiskSeries) = risk_maps(prepared, &sim.registry, pipeline, days)?;
    let options = ScoreOptions { leave_one_out: true, ..Default::default() };
    let scores = score_all(prepared, &cases, &series, pipeline, &options);
    let cohort = Cohort::build(&scores, &sim.registry, &pipeline.clock, FEATURE_DAYS, None)?;
    let m = build_features(&scores, &cohort, FEATURE_DAYS)?;
    let [normal, confirmed] = m.indices_by_label();
    let pick = |idx: &[usize]| idx.iter().map(|&i| m.window_scores[i]).collect();
    Ok((series, pick(&normal), pick(&confirmed)))
}

/// Incubation decay for `s = 0..=T+1` days before diagnosis.
pub fn decay_curve(incubation_days: u32) -> Vec<f64> {
    (0..=incubation_days as i64 + 1).map(|s| epirisk::riskfield::incubation_decay(s, incubation_days)).collect()
}
