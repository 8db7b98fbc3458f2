use std::collections::HashMap;
use std::io::Write;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::schedule::{day_plan, DayOverride, Stay};
use super::world::{Pos, World};
use crate::corpus::{Corpus, Observation};
use crate::error::Result;
use crate::ingest::{CaseEntry, CaseRegistry, ObservationWindow};
use crate::riskfield::field::par_map;
use crate::DayIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfectionCause {
    Sporadic,
    Gathering(usize),
    Contact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Infection {
    pub day: DayIndex,
    pub diagnosis_day: DayIndex,
    pub cause: InfectionCause,
}

/// A one-day gathering where several index infections happen together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gathering {
    pub venue: Pos,
    pub day: DayIndex,
    pub start_s: u32,
    pub end_s: u32,
    pub attendees: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub world: World,
    pub corpus: Corpus,
    pub registry: CaseRegistry,
    /// Per agent, in corpus user order.
    pub infections: Vec<Option<Infection>>,
    pub gatherings: Vec<Gathering>,
}

pub fn user_name(agent: usize) -> String {
    format!("u{agent:06}")
}

fn stream(seed: u64, agent: usize, day: i64, tag: u64) -> ChaCha8Rng {
    // splitmix64 finaliser over the combined key
    let mut z = seed
        ^ (agent as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (day as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ tag.wrapping_mul(0x1656_67B1_9E37_79F9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

fn overlap(a: (u32, u32), b: (u32, u32)) -> u32 {
    a.1.min(b.1).saturating_sub(a.0.max(b.0))
}

impl Simulation {
    /// Whole observed days, from the first midnight to the midnight after
    /// the last day.
    pub fn window(&self) -> ObservationWindow {
        let clock = &self.world.config.clock;
        ObservationWindow { start: clock.day_start(0), end: clock.day_start(self.world.config.n_days as i64) }
    }

    pub fn confirmed_count(&self) -> usize {
        self.registry.confirmed().count()
    }

    /// Writes the trajectory CSV without materialising string records.
    pub fn write_trajectories<W: Write>(&self, output: W) -> Result<()> {
        crate::ingest::write_corpus(output, &self.corpus)
    }

    pub fn write_registry<W: Write>(&self, output: W) -> Result<()> {
        crate::ingest::write_registry(output, &self.registry)
    }
}

struct Seeding {
    infections: Vec<Option<Infection>>,
    gatherings: Vec<Gathering>,
    /// (day, agent) -> gathering index
    attending: HashMap<(DayIndex, usize), usize>,
}

fn lag<R: Rng>(cfg: &super::WorldConfig, day: DayIndex, rng: &mut R) -> DayIndex {
    let hi = (cfg.lag_max_days as i64).min(cfg.n_days as i64 - 1 - day).max(cfg.lag_min_days as i64);
    rng.gen_range(cfg.lag_min_days as i64..=hi)
}

fn seed_infections(world: &World) -> Seeding {
    let cfg = &world.config;
    let n = world.agents.len();
    let mut rng = stream(cfg.seed, usize::MAX, -1, 1);
    let n_seeds = ((cfg.infection_rate * n as f64) - 1e-9).ceil().max(1.0) as usize;
    let n_seeds = n_seeds.min(n);
    let n_clustered = (n_seeds as f64 * cfg.clustered_fraction).round() as usize;

    // Index infections follow an exponentially growing timeline and are
    // all diagnosed within the horizon.
    let last_day = cfg.n_days as i64 - 1 - cfg.lag_min_days as i64;
    let weights: Vec<f64> = (0..=last_day).map(|d| (cfg.growth_per_day * d as f64).exp()).collect();
    let timeline = WeightedIndex::new(&weights).expect("positive weights");

    let mut infections = vec![None; n];
    let mut taken = vec![false; n];
    let mut gatherings = Vec::new();
    let mut attending = HashMap::new();

    let per_event = ((cfg.gathering_size as f64 * cfg.gathering_attack_rate).round() as usize).max(1);
    let n_events = n_clustered.div_ceil(per_event);
    for e in 0..n_events {
        let infected = n_clustered / n_events + usize::from(e < n_clustered % n_events);
        let size = cfg.gathering_size.max(infected);
        let venue = world.venues[rng.gen_range(0..world.venues.len())];
        let day = timeline.sample(&mut rng) as i64;
        let start_s = rng.gen_range(10 * 3600..=14 * 3600);
        let end_s = start_s + rng.gen_range(3 * 3600..=5 * 3600);
        // Attendees come from the neighbourhood, widening if it is sparse.
        let mut radius = 10;
        let mut pool: Vec<usize>;
        loop {
            pool = (0..n).filter(|&a| !taken[a] && world.agents[a].home.chebyshev(venue) <= radius).collect();
            if pool.len() >= size || radius > cfg.grid_rows.max(cfg.grid_cols) {
                break;
            }
            radius *= 2;
        }
        pool.shuffle(&mut rng);
        pool.truncate(size);
        for (k, &a) in pool.iter().enumerate() {
            taken[a] = true;
            attending.insert((day, a), e);
            if k < infected {
                let lag = lag(cfg, day, &mut rng);
                infections[a] = Some(Infection { day, diagnosis_day: day + lag, cause: InfectionCause::Gathering(e) });
            }
        }
        pool.sort_unstable();
        gatherings.push(Gathering { venue, day, start_s, end_s, attendees: pool });
    }

    let mut free: Vec<usize> = (0..n).filter(|&a| !taken[a]).collect();
    free.shuffle(&mut rng);
    let placed = infections.iter().filter(|i| i.is_some()).count();
    for &a in free.iter().take(n_seeds.saturating_sub(placed)) {
        let day = timeline.sample(&mut rng) as i64;
        let lag = lag(cfg, day, &mut rng);
        infections[a] = Some(Infection { day, diagnosis_day: day + lag, cause: InfectionCause::Sporadic });
    }
    Seeding { infections, gatherings, attending }
}

/// Runs the outbreak day by day and records every agent's trajectory.
///
/// Agents are infectious from the day after infection until diagnosis,
/// then spend the recovery period in hospital. A susceptible agent's daily
/// infection probability is `1 - exp(-rate * h)`, where `h` is the sum of
/// hours shared in one cell with each infectious agent.
pub fn simulate(world: World) -> Result<Simulation> {
    world.config.validate()?;
    let cfg = world.config.clone();
    let n = world.agents.len();
    let Seeding { mut infections, gatherings, attending } = seed_infections(&world);
    let mut tracks: Vec<Vec<Observation>> = vec![Vec::new(); n];
    let agents: Vec<usize> = (0..n).collect();

    for day in 0..cfg.n_days as i64 {
        let plans: Vec<Vec<Stay>> = par_map(&agents, |&a| {
            let hospital =
                infections[a].filter(|i| day >= i.diagnosis_day && day < i.diagnosis_day + cfg.recovery_days as i64);
            let ov = match hospital {
                Some(_) => Some(DayOverride::Hospital(world.nearest_hospital(world.agents[a].home))),
                None => attending.get(&(day, a)).map(|&e| {
                    let g = &gatherings[e];
                    DayOverride::Gathering { venue: g.venue, start: g.start_s, end: g.end_s }
                }),
            };
            day_plan(&world, a, ov, &mut stream(cfg.seed, a, day, 2))
        });

        let mut infectious_at: HashMap<Pos, Vec<(u32, u32)>> = HashMap::new();
        for (a, inf) in infections.iter().enumerate() {
            if inf.is_some_and(|i| day > i.day && day < i.diagnosis_day) {
                for s in &plans[a] {
                    infectious_at.entry(s.pos).or_default().push((s.start, s.end));
                }
            }
        }
        if cfg.hazard_per_hour > 0.0 && !infectious_at.is_empty() {
            let new: Vec<Option<Infection>> = par_map(&agents, |&a| {
                if infections[a].is_some() {
                    return None;
                }
                let shared_s: u64 = plans[a]
                    .iter()
                    .filter_map(|s| infectious_at.get(&s.pos).map(|v| (s, v)))
                    .flat_map(|(s, v)| v.iter().map(move |&iv| overlap((s.start, s.end), iv) as u64))
                    .sum();
                if shared_s == 0 {
                    return None;
                }
                let p = 1.0 - (-cfg.hazard_per_hour * shared_s as f64 / 3600.0).exp();
                let mut rng = stream(cfg.seed, a, day, 3);
                rng.gen_bool(p).then(|| {
                    let lag = rng.gen_range(cfg.lag_min_days as i64..=cfg.lag_max_days as i64);
                    Infection { day, diagnosis_day: day + lag, cause: InfectionCause::Contact }
                })
            });
            for (slot, inf) in infections.iter_mut().zip(new) {
                if inf.is_some() {
                    *slot = inf;
                }
            }
        }

        let day_start = cfg.clock.day_start(day);
        for (track, plan) in tracks.iter_mut().zip(&plans) {
            for s in plan {
                let cell = world.cell(s.pos);
                if track.last().is_none_or(|o: &Observation| o.cell != cell) {
                    track.push(Observation { cell, ts: day_start + s.start as i64 });
                }
            }
        }
        log::debug!("day {day}: {} infected", infections.iter().filter(|i| i.is_some()).count());
    }

    let mut registry = CaseRegistry::new();
    for (a, inf) in infections.iter().enumerate() {
        let entry = match inf {
            Some(i) if i.diagnosis_day < cfg.n_days as i64 => {
                CaseEntry::confirmed(user_name(a), cfg.clock.date_of_day(i.diagnosis_day))
            }
            _ => CaseEntry::normal(user_name(a)),
        };
        registry.insert(entry).expect("unique agent names");
    }
    let users = (0..n).map(user_name).collect();
    let corpus = Corpus::from_parts(world.cells.clone(), users, tracks);
    Ok(Simulation { world, corpus, registry, infections, gatherings })
}
