//! Interned cell and user tables plus the per-user observation corpus.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use crate::ingest::{DayClock, ObservationWindow, TrajectoryRecord};

/// Dense index into a [`CellTable`]. Ids follow ascending cell-key order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId(pub u32);

/// Dense index into a corpus' user list. Ids follow ascending user-id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UserId(pub u32);

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub key: String,
    pub lat: f64,
    pub lng: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CellTable {
    cells: Vec<Cell>,
    index: HashMap<String, CellId>,
}

impl CellTable {
    /// Builds a table from `(key, lat, lng)` triples. The first coordinates
    /// seen for a key win.
    pub fn from_cells<I>(cells: I) -> Self
    where
        I: IntoIterator<Item = (String, f64, f64)>,
    {
        let mut sorted: BTreeMap<String, (f64, f64)> = BTreeMap::new();
        for (key, lat, lng) in cells {
            sorted.entry(key).or_insert((lat, lng));
        }
        let cells: Vec<Cell> = sorted.into_iter().map(|(key, (lat, lng))| Cell { key, lat, lng }).collect();
        let index = cells.iter().enumerate().map(|(i, c)| (c.key.clone(), CellId(i as u32))).collect();
        Self { cells, index }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, id: CellId) -> &Cell {
        &self.cells[id.0 as usize]
    }

    pub fn id_of(&self, key: &str) -> Option<CellId> {
        self.index.get(key).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (CellId, &Cell)> {
        self.cells.iter().enumerate().map(|(i, c)| (CellId(i as u32), c))
    }

    pub fn distance_m(&self, a: CellId, b: CellId) -> f64 {
        let (a, b) = (self.get(a), self.get(b));
        crate::geo::haversine_m(a.lat, a.lng, b.lat, b.lng)
    }
}

/// A timestamped cell entry for one user.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub cell: CellId,
    pub ts: i64,
}

/// All users' observations, interned and time-ordered.
#[derive(Debug, Clone)]
pub struct Corpus {
    cells: Arc<CellTable>,
    users: Vec<String>,
    tracks: Vec<Vec<Observation>>,
}

impl Corpus {
    /// Interns records of arbitrary order. Each user's observations are
    /// sorted by timestamp (stable for ties).
    pub fn from_records(records: &[TrajectoryRecord]) -> Self {
        let mut keyed: Vec<(String, f64, f64)> = Vec::new();
        let mut seen: HashSet<String> = HashSet::new();
        for r in records {
            let key = r.cell_key();
            if seen.insert(key.clone()) {
                keyed.push((key, r.lat, r.lng));
            }
        }
        let cells = CellTable::from_cells(keyed);

        let mut users: Vec<String> = records.iter().map(|r| r.user_id.clone()).collect();
        users.sort_unstable();
        users.dedup();
        let user_index: HashMap<&str, usize> = users.iter().enumerate().map(|(i, u)| (u.as_str(), i)).collect();

        let mut tracks = vec![Vec::new(); users.len()];
        for r in records {
            let cell = cells.id_of(&r.cell_key()).expect("interned above");
            tracks[user_index[r.user_id.as_str()]].push(Observation { cell, ts: r.timestamp });
        }
        for t in &mut tracks {
            t.sort_by_key(|o| o.ts);
        }
        Self { cells: Arc::new(cells), users, tracks }
    }

    /// Assembles a corpus from already interned parts. `users` must be
    /// sorted ascending and each track sorted by timestamp.
    pub fn from_parts(cells: Arc<CellTable>, users: Vec<String>, tracks: Vec<Vec<Observation>>) -> Self {
        assert_eq!(users.len(), tracks.len());
        debug_assert!(users.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(tracks.iter().all(|t| t.windows(2).all(|w| w[0].ts <= w[1].ts)));
        Self { cells, users, tracks }
    }

    pub fn cells(&self) -> &Arc<CellTable> {
        &self.cells
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn user_id(&self, user: UserId) -> &str {
        &self.users[user.0 as usize]
    }

    pub fn lookup_user(&self, user_id: &str) -> Option<UserId> {
        self.users.binary_search_by(|u| u.as_str().cmp(user_id)).ok().map(|i| UserId(i as u32))
    }

    pub fn track(&self, user: UserId) -> &[Observation] {
        &self.tracks[user.0 as usize]
    }

    pub fn tracks(&self) -> impl Iterator<Item = (UserId, &[Observation])> {
        self.tracks.iter().enumerate().map(|(i, t)| (UserId(i as u32), t.as_slice()))
    }

    pub fn record_count(&self) -> usize {
        self.tracks.iter().map(Vec::len).sum()
    }

    /// From the earliest observation to local midnight after the latest.
    pub fn default_window(&self, clock: &DayClock) -> Option<ObservationWindow> {
        let first = self.tracks.iter().filter_map(|t| t.first()).map(|o| o.ts).min()?;
        let last = self.tracks.iter().filter_map(|t| t.last()).map(|o| o.ts).max()?;
        Some(ObservationWindow { start: first, end: clock.day_start(clock.day_of(last) + 1) })
    }

    /// Rebuilds string records, ordered by user then time.
    pub fn to_records(&self) -> Vec<TrajectoryRecord> {
        let mut out = Vec::with_capacity(self.record_count());
        for (u, track) in self.tracks() {
            for o in track {
                let cell = self.cells.get(o.cell);
                let mut parts = cell.key.splitn(3, '|');
                out.push(TrajectoryRecord {
                    user_id: self.user_id(u).to_owned(),
                    district_id: parts.next().unwrap_or_default().to_owned(),
                    lac_id: parts.next().unwrap_or_default().to_owned(),
                    cell_id: parts.next().unwrap_or_default().to_owned(),
                    lat: cell.lat,
                    lng: cell.lng,
                    timestamp: o.ts,
                });
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(user: &str, cell: &str, ts: i64) -> TrajectoryRecord {
        TrajectoryRecord {
            user_id: user.into(),
            district_id: "d".into(),
            lac_id: "l".into(),
            cell_id: cell.into(),
            lat: 30.0,
            lng: 114.0,
            timestamp: ts,
        }
    }

    #[test]
    fn interning_is_order_independent() {
        let a = vec![rec("u2", "c2", 5), rec("u1", "c1", 9), rec("u1", "c2", 3)];
        let mut b = a.clone();
        b.reverse();
        let (ca, cb) = (Corpus::from_records(&a), Corpus::from_records(&b));
        assert_eq!(ca.users(), cb.users());
        assert_eq!(ca.cells().as_ref(), cb.cells().as_ref());
        assert_eq!(ca.track(UserId(0)), cb.track(UserId(0)));
        assert_eq!(ca.user_id(UserId(0)), "u1");
        assert_eq!(ca.track(UserId(0))[0].ts, 3);
        assert_eq!(ca.cells().id_of("d|l|c1"), Some(CellId(0)));
    }
}
