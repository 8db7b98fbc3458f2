use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{CellId, CellTable};
use crate::error::{Error, Result};
use crate::geo::meters_per_degree_lat;
use crate::ingest::DayClock;

/// Parameters of a synthetic city and its outbreak.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub grid_rows: u32,
    pub grid_cols: u32,
    pub cell_spacing_m: f64,
    pub origin_lat: f64,
    pub origin_lng: f64,
    pub n_agents: usize,
    pub n_days: u32,
    /// Index infections as a share of the population.
    pub infection_rate: f64,
    pub lag_min_days: u32,
    pub lag_max_days: u32,
    /// Infection hazard per hour of co-location with one infectious agent.
    pub hazard_per_hour: f64,
    /// Share of index infections that happen at group gatherings; the rest
    /// are sporadic.
    pub clustered_fraction: f64,
    pub gathering_size: usize,
    /// Share of gathering attendees who are infected there.
    pub gathering_attack_rate: f64,
    /// Daily growth rate of the index-infection timeline.
    pub growth_per_day: f64,
    pub recovery_days: u32,
    pub commuter_share: f64,
    pub homebody_share: f64,
    pub n_venues: usize,
    pub n_hospitals: usize,
    pub pingpong_prob: f64,
    pub clock: DayClock,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            grid_rows: 160,
            grid_cols: 160,
            cell_spacing_m: 800.0,
            origin_lat: 30.40,
            origin_lng: 113.95,
            n_agents: 20_000,
            n_days: 28,
            infection_rate: 0.03,
            lag_min_days: 2,
            lag_max_days: 14,
            hazard_per_hour: 0.003,
            clustered_fraction: 0.85,
            gathering_size: 40,
            gathering_attack_rate: 0.7,
            growth_per_day: 0.08,
            recovery_days: 10,
            commuter_share: 0.6,
            homebody_share: 0.25,
            n_venues: 30,
            n_hospitals: 6,
            pingpong_prob: 0.15,
            clock: DayClock::default(),
            seed: 42,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_owned()));
        if self.grid_rows == 0 || self.grid_cols == 0 || self.n_agents == 0 || self.n_days == 0 {
            return bad("grid, population and horizon must be positive");
        }
        if !(self.cell_spacing_m > 0.0) {
            return bad("cell spacing must be positive");
        }
        if !(self.infection_rate > 0.0 && self.infection_rate < 1.0) {
            return bad("infection rate must lie in (0, 1)");
        }
        if self.lag_min_days == 0 || self.lag_min_days > self.lag_max_days {
            return bad("diagnosis lag range must satisfy 1 <= min <= max");
        }
        if self.n_days <= self.lag_min_days {
            return bad("horizon must exceed the minimum diagnosis lag");
        }
        if !(self.hazard_per_hour >= 0.0) || !(self.growth_per_day.is_finite()) {
            return bad("hazard and growth must be finite and non-negative");
        }
        for (name, p) in [
            ("clustered_fraction", self.clustered_fraction),
            ("gathering_attack_rate", self.gathering_attack_rate),
            ("pingpong_prob", self.pingpong_prob),
            ("commuter_share", self.commuter_share),
            ("homebody_share", self.homebody_share),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.commuter_share + self.homebody_share > 1.0 + 1e-12 {
            return bad("commuter and homebody shares exceed 1");
        }
        if self.gathering_size == 0 || self.gathering_attack_rate == 0.0 && self.clustered_fraction > 0.0 {
            return bad("gatherings need attendees and a positive attack rate");
        }
        if self.n_venues == 0 || self.n_hospitals == 0 {
            return bad("at least one venue and one hospital are required");
        }
        if (self.n_venues + self.n_hospitals) as u64 > self.grid_rows as u64 * self.grid_cols as u64 {
            return bad("grid too small for venues and hospitals");
        }
        if self.recovery_days == 0 {
            return bad("recovery period must be positive");
        }
        Ok(())
    }
}

/// Grid position, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub row: u32,
    pub col: u32,
}

impl Pos {
    pub fn chebyshev(self, other: Pos) -> u32 {
        self.row.abs_diff(other.row).max(self.col.abs_diff(other.col))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    Commuter,
    Homebody,
    Roamer,
}

/// Stable habits of one agent; daily plans add noise around them.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentProfile {
    pub kind: AgentKind,
    pub home: Pos,
    pub work: Option<Pos>,
    /// Seconds after midnight.
    pub depart_s: u32,
    pub work_s: u32,
    pub errand_prob: f64,
}

#[derive(Debug, Clone)]
pub struct World {
    pub config: WorldConfig,
    pub cells: Arc<CellTable>,
    grid: Vec<CellId>,
    pub venues: Vec<Pos>,
    pub hospitals: Vec<Pos>,
    pub agents: Vec<AgentProfile>,
}

pub(crate) const COMMUTE_RADIUS: u32 = 8;

fn cell_coords(cfg: &WorldConfig, p: Pos) -> (f64, f64) {
    let mpd = meters_per_degree_lat();
    let lat = cfg.origin_lat + p.row as f64 * cfg.cell_spacing_m / mpd;
    let lng = cfg.origin_lng + p.col as f64 * cfg.cell_spacing_m / (mpd * lat.to_radians().cos());
    (lat, lng)
}

pub(crate) fn cell_parts(p: Pos) -> [String; 3] {
    [
        format!("D{:02}{:02}", p.row / 32, p.col / 32),
        format!("L{:03}{:03}", p.row / 8, p.col / 8),
        format!("C{:04}{:04}", p.row, p.col),
    ]
}

impl World {
    pub fn n_cells(&self) -> usize {
        self.grid.len()
    }

    pub fn cell(&self, p: Pos) -> CellId {
        self.grid[(p.row * self.config.grid_cols + p.col) as usize]
    }

    pub fn pos_of(&self, index: usize) -> Pos {
        let cols = self.config.grid_cols as usize;
        Pos { row: (index / cols) as u32, col: (index % cols) as u32 }
    }

    pub fn coords(&self, p: Pos) -> (f64, f64) {
        cell_coords(&self.config, p)
    }

    /// Uniform position within `radius` grid steps of `around`, clamped to
    /// the grid.
    pub(crate) fn near<R: Rng>(&self, around: Pos, radius: u32, rng: &mut R) -> Pos {
        let r = radius as i64;
        let clamp = |v: i64, n: u32| v.clamp(0, n as i64 - 1) as u32;
        Pos {
            row: clamp(around.row as i64 + rng.gen_range(-r..=r), self.config.grid_rows),
            col: clamp(around.col as i64 + rng.gen_range(-r..=r), self.config.grid_cols),
        }
    }

    pub fn nearest_hospital(&self, p: Pos) -> Pos {
        *self.hospitals.iter().min_by_key(|h| (h.chebyshev(p), **h)).expect("validated non-empty")
    }
}

/// Lays out the grid and draws agent profiles. Deterministic in the seed.
pub fn generate_world(config: &WorldConfig) -> Result<World> {
    config.validate()?;
    let cfg = config.clone();
    let (rows, cols) = (cfg.grid_rows, cfg.grid_cols);
    let n_cells = rows as usize * cols as usize;
    let all: Vec<Pos> = (0..rows).flat_map(|row| (0..cols).map(move |col| Pos { row, col })).collect();
    let cells = CellTable::from_cells(all.iter().map(|&p| {
        let [d, l, c] = cell_parts(p);
        let (lat, lng) = cell_coords(&cfg, p);
        (format!("{d}|{l}|{c}"), lat, lng)
    }));
    let grid: Vec<CellId> = all
        .iter()
        .map(|&p| {
            let [d, l, c] = cell_parts(p);
            cells.id_of(&format!("{d}|{l}|{c}")).expect("just inserted")
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let special = index::sample(&mut rng, n_cells, cfg.n_venues + cfg.n_hospitals).into_vec();
    let venues: Vec<Pos> = special[..cfg.n_venues].iter().map(|&i| all[i]).collect();
    let hospitals: Vec<Pos> = special[cfg.n_venues..].iter().map(|&i| all[i]).collect();

    // Distinct homes while the grid has room.
    let homes: Vec<Pos> = if cfg.n_agents <= n_cells {
        index::sample(&mut rng, n_cells, cfg.n_agents).into_iter().map(|i| all[i]).collect()
    } else {
        (0..cfg.n_agents).map(|_| all[rng.gen_range(0..n_cells)]).collect()
    };

    let mut world = World { config: cfg, cells: Arc::new(cells), grid, venues, hospitals, agents: Vec::new() };
    let mut agents = Vec::with_capacity(homes.len());
    for home in homes {
        let u: f64 = rng.gen();
        let kind = if u < world.config.commuter_share {
            AgentKind::Commuter
        } else if u < world.config.commuter_share + world.config.homebody_share {
            AgentKind::Homebody
        } else {
            AgentKind::Roamer
        };
        let work = (kind == AgentKind::Commuter).then(|| world.near(home, COMMUTE_RADIUS, &mut rng));
        agents.push(AgentProfile {
            kind,
            home,
            work,
            depart_s: rng.gen_range(6 * 3600 + 1800..=9 * 3600),
            work_s: rng.gen_range(7 * 3600..=10 * 3600),
            errand_prob: rng.gen_range(0.1..0.6),
        });
    }
    world.agents = agents;
    Ok(world)
}
