use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const TRAJECTORY_HEADER: [&str; 7] = ["user_id", "district_id", "lac_id", "cell_id", "lat", "lng", "timestamp"];

/// One raw observation of a subscriber entering a base-station cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub user_id: String,
    pub district_id: String,
    pub lac_id: String,
    pub cell_id: String,
    pub lat: f64,
    pub lng: f64,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: i64,
}

impl TrajectoryRecord {
    /// Canonical `district|lac|cell` identity of the cell.
    pub fn cell_key(&self) -> String {
        cell_key(&self.district_id, &self.lac_id, &self.cell_id)
    }
}

pub(crate) fn cell_key(district: &str, lac: &str, cell: &str) -> String {
    let mut key = String::with_capacity(district.len() + lac.len() + cell.len() + 2);
    key.push_str(district);
    key.push('|');
    key.push_str(lac);
    key.push('|');
    key.push_str(cell);
    key
}

#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    pub delimiter: u8,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self { delimiter: b',' }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RejectCounts {
    /// Wrong field count or empty identifiers.
    pub malformed: usize,
    pub bad_coordinates: usize,
    pub bad_timestamp: usize,
}

impl RejectCounts {
    pub fn total(&self) -> usize {
        self.malformed + self.bad_coordinates + self.bad_timestamp
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedTrajectories {
    /// Grouped by user, ascending timestamp within a user.
    pub records: Vec<TrajectoryRecord>,
    pub rejected: RejectCounts,
}

/// Parses header-bearing delimited trajectory text.
///
/// A missing or mismatched header is fatal. Individual bad rows are counted
/// and skipped. Output is sorted by `(user_id, timestamp)`, stable for ties.
pub fn parse_trajectories<R: Read>(input: R, options: &ParseOptions) -> Result<ParsedTrajectories> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let mut row = csv::StringRecord::new();
    let header_ok = reader.read_record(&mut row)?
        && row.len() == TRAJECTORY_HEADER.len()
        && row.iter().zip(TRAJECTORY_HEADER).all(|(got, want)| got.eq_ignore_ascii_case(want));
    if !header_ok {
        return Err(Error::MissingHeader { expected: TRAJECTORY_HEADER.join(",") });
    }

    let mut out = ParsedTrajectories::default();
    loop {
        match reader.read_record(&mut row) {
            Ok(true) => {}
            Ok(false) => break,
            // Invalid UTF-8 and similar row-level faults.
            Err(e) if !matches!(e.kind(), csv::ErrorKind::Io(_)) => {
                out.rejected.malformed += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        }
        match parse_row(&row) {
            Ok(rec) => out.records.push(rec),
            Err(RowFault::Malformed) => out.rejected.malformed += 1,
            Err(RowFault::Coordinates) => out.rejected.bad_coordinates += 1,
            Err(RowFault::Timestamp) => out.rejected.bad_timestamp += 1,
        }
    }
    out.records.sort_by(|a, b| a.user_id.cmp(&b.user_id).then(a.timestamp.cmp(&b.timestamp)));
    if out.rejected.total() > 0 {
        log::warn!("rejected {} trajectory rows: {:?}", out.rejected.total(), out.rejected);
    }
    Ok(out)
}

enum RowFault {
    Malformed,
    Coordinates,
    Timestamp,
}

fn parse_row(row: &csv::StringRecord) -> std::result::Result<TrajectoryRecord, RowFault> {
    if row.len() != TRAJECTORY_HEADER.len() || row.iter().take(4).any(str::is_empty) {
        return Err(RowFault::Malformed);
    }
    let lat: f64 = row[4].parse().map_err(|_| RowFault::Coordinates)?;
    let lng: f64 = row[5].parse().map_err(|_| RowFault::Coordinates)?;
    if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lng) {
        return Err(RowFault::Coordinates);
    }
    let timestamp: i64 = row[6].parse().map_err(|_| RowFault::Timestamp)?;
    if timestamp < 0 {
        return Err(RowFault::Timestamp);
    }
    Ok(TrajectoryRecord {
        user_id: row[0].to_owned(),
        district_id: row[1].to_owned(),
        lac_id: row[2].to_owned(),
        cell_id: row[3].to_owned(),
        lat,
        lng,
        timestamp,
    })
}

/// Writes records with the canonical header. Coordinates use the shortest
/// representation that parses back to the same `f64`.
pub fn write_trajectories<W: Write>(output: W, records: &[TrajectoryRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(output);
    w.write_record(TRAJECTORY_HEADER)?;
    for r in records {
        w.write_record([
            r.user_id.as_str(),
            &r.district_id,
            &r.lac_id,
            &r.cell_id,
            &r.lat.to_string(),
            &r.lng.to_string(),
            &r.timestamp.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Streams an interned corpus in the same layout as
/// [`write_trajectories`], ordered by user then time.
pub fn write_corpus<W: Write>(output: W, corpus: &crate::corpus::Corpus) -> Result<()> {
    let cells = corpus.cells();
    let keys: Vec<(Vec<&str>, String, String)> =
        cells.iter().map(|(_, c)| (c.key.splitn(3, '|').collect(), c.lat.to_string(), c.lng.to_string())).collect();
    let mut w = csv::Writer::from_writer(output);
    w.write_record(TRAJECTORY_HEADER)?;
    let mut ts = String::new();
    for (u, track) in corpus.tracks() {
        let user = corpus.user_id(u);
        for o in track {
            let (parts, lat, lng) = &keys[o.cell.0 as usize];
            let part = |i: usize| parts.get(i).copied().unwrap_or_default();
            ts.clear();
            ts.push_str(&o.ts.to_string());
            w.write_record([user, part(0), part(1), part(2), lat, lng, &ts])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "user_id,district_id,lac_id,cell_id,lat,lng,timestamp\n";

    fn parse(body: &str) -> Result<ParsedTrajectories> {
        parse_trajectories(format!("{HEADER}{body}").as_bytes(), &ParseOptions::default())
    }

    #[test]
    fn maps_fields_directly() {
        let p = parse("u1,d1,l1,c1,30.5,114.3,1579000000\n").unwrap();
        assert_eq!(p.records.len(), 1);
        let r = &p.records[0];
        assert_eq!(r.user_id, "u1");
        assert_eq!(r.cell_key(), "d1|l1|c1");
        assert_eq!((r.lat, r.lng, r.timestamp), (30.5, 114.3, 1_579_000_000));
        assert_eq!(p.rejected.total(), 0);
    }

    #[test]
    fn rejects_out_of_range_latitude() {
        let p = parse("u1,d1,l1,c1,95,114.3,1579000000\nu1,d1,l1,c1,30,114.3,1579000001\n").unwrap();
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.rejected.bad_coordinates, 1);
    }

    #[test]
    fn rejects_non_numeric_timestamp_and_short_rows() {
        let p = parse("u1,d1,l1,c1,30,114,yesterday\nu1,d1,l1\nu2,d1,l1,c1,30,114,-5\n").unwrap();
        assert!(p.records.is_empty());
        assert_eq!(p.rejected.bad_timestamp, 2);
        assert_eq!(p.rejected.malformed, 1);
    }

    #[test]
    fn sorts_by_user_then_time() {
        let p = parse("u2,d,l,c,0,0,5\nu1,d,l,c,0,0,600\nu1,d,l,c2,0,0,0\n").unwrap();
        let order: Vec<_> = p.records.iter().map(|r| (r.user_id.as_str(), r.timestamp)).collect();
        assert_eq!(order, [("u1", 0), ("u1", 600), ("u2", 5)]);
    }

    #[test]
    fn missing_header_is_fatal() {
        let err = parse_trajectories("u1,d1,l1,c1,30.5,114.3,1\n".as_bytes(), &ParseOptions::default());
        assert!(matches!(err, Err(Error::MissingHeader { .. })));
        let empty = parse_trajectories("".as_bytes(), &ParseOptions::default());
        assert!(matches!(empty, Err(Error::MissingHeader { .. })));
    }

    fn record_strategy() -> impl Strategy<Value = TrajectoryRecord> {
        (
            "[a-z0-9]{1,6}",
            "[a-z0-9]{1,4}",
            "[a-z0-9]{1,4}",
            "[a-z0-9]{1,4}",
            -90.0f64..=90.0,
            -180.0f64..=180.0,
            0i64..2_000_000_000,
        )
            .prop_map(|(u, d, l, c, lat, lng, ts)| TrajectoryRecord {
                user_id: u,
                district_id: d,
                lac_id: l,
                cell_id: c,
                lat,
                lng,
                timestamp: ts,
            })
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(mut recs in prop::collection::vec(record_strategy(), 0..40)) {
            recs.sort_by(|a, b| a.user_id.cmp(&b.user_id).then(a.timestamp.cmp(&b.timestamp)));
            let mut buf = Vec::new();
            write_trajectories(&mut buf, &recs).unwrap();
            let back = parse_trajectories(buf.as_slice(), &ParseOptions::default()).unwrap();
            prop_assert_eq!(back.rejected.total(), 0);
            prop_assert_eq!(back.records, recs);
        }
    }
}
