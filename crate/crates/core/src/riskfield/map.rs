use std::io::{Read, Write};
use std::sync::Arc;

use serde_json::{json, Value};

use crate::corpus::CellTable;
use crate::error::{Error, Result};
use crate::DayIndex;

pub const RISK_MAP_HEADER: [&str; 4] = ["cell_key", "lat", "lng", "risk"];

/// Aggregated risk for every cell of a table on one day.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskMap {
    pub day: DayIndex,
    pub cells: Arc<CellTable>,
    /// Indexed by `CellId`.
    pub risk: Vec<f64>,
}

impl RiskMap {
    pub fn zeros(day: DayIndex, cells: Arc<CellTable>) -> Self {
        let risk = vec![0.0; cells.len()];
        Self { day, cells, risk }
    }

    pub fn total(&self) -> f64 {
        self.risk.iter().sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { day: self.day, cells: Arc::clone(&self.cells), risk: self.risk.iter().map(|r| r * factor).collect() }
    }

    /// Re-expresses the map over another cell table by key. Cells unknown to
    /// this map get zero risk.
    pub fn reindex(&self, target: &Arc<CellTable>) -> Self {
        let risk =
            target.iter().map(|(_, c)| self.cells.id_of(&c.key).map_or(0.0, |id| self.risk[id.0 as usize])).collect();
        Self { day: self.day, cells: Arc::clone(target), risk }
    }
}

pub fn risk_map_file_name(day: DayIndex) -> String {
    format!("riskmap_{day}.csv")
}

/// Day encoded in a `riskmap_DAY.csv` file name.
pub fn parse_risk_map_file_name(name: &str) -> Option<DayIndex> {
    name.strip_prefix("riskmap_")?.strip_suffix(".csv")?.parse().ok()
}

/// Writes `cell_key,lat,lng,risk`, one row per cell in key order. Values use
/// the shortest exact decimal form, so reading back is lossless.
pub fn write_risk_map<W: Write>(output: W, map: &RiskMap) -> Result<()> {
    let mut w = csv::Writer::from_writer(output);
    w.write_record(RISK_MAP_HEADER)?;
    for ((_, cell), risk) in map.cells.iter().zip(&map.risk) {
        w.write_record([cell.key.as_str(), &cell.lat.to_string(), &cell.lng.to_string(), &risk.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_risk_map<R: Read>(input: R, day: DayIndex) -> Result<RiskMap> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(RISK_MAP_HEADER) {
        return Err(Error::MissingHeader { expected: RISK_MAP_HEADER.join(",") });
    }
    let mut rows = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let num = |j: usize| -> Result<f64> {
            row[j].parse().map_err(|_| Error::RiskMap(format!("row {}: bad number `{}`", i + 2, &row[j])))
        };
        let risk = num(3)?;
        if !(risk >= 0.0) {
            return Err(Error::RiskMap(format!("row {}: negative risk", i + 2)));
        }
        rows.push((row[0].to_owned(), num(1)?, num(2)?, risk));
    }
    let cells = Arc::new(CellTable::from_cells(rows.iter().map(|(k, lat, lng, _)| (k.clone(), *lat, *lng))));
    if cells.len() != rows.len() {
        return Err(Error::RiskMap("duplicate cell keys".into()));
    }
    let mut map = RiskMap::zeros(day, Arc::clone(&cells));
    for (key, _, _, risk) in rows {
        map.risk[cells.id_of(&key).unwrap().0 as usize] = risk;
    }
    Ok(map)
}

/// RFC 7946 FeatureCollection with one Point per cell.
pub fn risk_map_to_geojson(map: &RiskMap) -> Value {
    let features: Vec<Value> = map
        .cells
        .iter()
        .zip(&map.risk)
        .map(|((_, cell), risk)| {
            json!({
                "type": "Feature",
                "geometry": { "type": "Point", "coordinates": [cell.lng, cell.lat] },
                "properties": { "cell_key": cell.key, "risk": risk, "day": map.day },
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}

/// Inverse of [`risk_map_to_geojson`].
pub fn risk_map_from_geojson(value: &Value) -> Result<RiskMap> {
    let bad = |m: &str| Error::RiskMap(format!("geojson: {m}"));
    if value["type"] != "FeatureCollection" {
        return Err(bad("not a FeatureCollection"));
    }
    let features = value["features"].as_array().ok_or_else(|| bad("missing features"))?;
    let mut day = 0;
    let mut rows = Vec::with_capacity(features.len());
    for f in features {
        let coords = f["geometry"]["coordinates"].as_array().ok_or_else(|| bad("missing coordinates"))?;
        let (lng, lat) = match coords.as_slice() {
            [lng, lat] => (lng.as_f64(), lat.as_f64()),
            _ => (None, None),
        };
        let props = &f["properties"];
        let key = props["cell_key"].as_str().ok_or_else(|| bad("missing cell_key"))?;
        let risk = props["risk"].as_f64().ok_or_else(|| bad("missing risk"))?;
        day = props["day"].as_i64().ok_or_else(|| bad("missing day"))?;
        rows.push((key.to_owned(), lat.ok_or_else(|| bad("bad lat"))?, lng.ok_or_else(|| bad("bad lng"))?, risk));
    }
    let cells = Arc::new(CellTable::from_cells(rows.iter().map(|(k, lat, lng, _)| (k.clone(), *lat, *lng))));
    let mut map = RiskMap::zeros(day, Arc::clone(&cells));
    for (key, _, _, risk) in rows {
        map.risk[cells.id_of(&key).unwrap().0 as usize] = risk;
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RiskMap {
        let cells = Arc::new(CellTable::from_cells([
            ("d1|l1|c1".to_string(), 30.5, 114.3),
            ("d1|l1|c2".to_string(), 30.51, 114.31),
        ]));
        RiskMap { day: 7, cells, risk: vec![0.1 + 0.2, 350.0] }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let map = sample();
        let mut buf = Vec::new();
        write_risk_map(&mut buf, &map).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("cell_key,lat,lng,risk\nd1|l1|c1,30.5,114.3,0.30000000000000004\n"));
        assert_eq!(read_risk_map(buf.as_slice(), 7).unwrap(), map);
    }

    #[test]
    fn geojson_points_with_properties() {
        let g = risk_map_to_geojson(&sample());
        let features = g["features"].as_array().unwrap();
        assert_eq!(features.len(), 2);
        assert_eq!(features[0]["geometry"]["type"], "Point");
        assert_eq!(features[0]["geometry"]["coordinates"][0], 114.3);
        assert_eq!(features[1]["properties"]["risk"], 350.0);
        assert_eq!(features[1]["properties"]["day"], 7);
        let back = risk_map_from_geojson(&g).unwrap();
        for (a, b) in back.risk.iter().zip(&sample().risk) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_map_is_empty_collection() {
        let map = RiskMap::zeros(0, Arc::new(CellTable::default()));
        let g = risk_map_to_geojson(&map);
        assert_eq!(g["type"], "FeatureCollection");
        assert!(g["features"].as_array().unwrap().is_empty());
    }

    #[test]
    fn file_names() {
        assert_eq!(risk_map_file_name(12), "riskmap_12.csv");
        assert_eq!(parse_risk_map_file_name("riskmap_12.csv"), Some(12));
        assert_eq!(parse_risk_map_file_name("scores.csv"), None);
    }

    #[test]
    fn reindex_by_key() {
        let map = sample();
        let other = Arc::new(CellTable::from_cells([
            ("d1|l1|c2".to_string(), 30.51, 114.31),
            ("d9|l9|c9".to_string(), 0.0, 0.0),
        ]));
        assert_eq!(map.reindex(&other).risk, [350.0, 0.0]);
    }
}
