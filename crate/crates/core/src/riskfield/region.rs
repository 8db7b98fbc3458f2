use crate::geo::haversine_m;

use super::map::RiskMap;

/// Sum of cell risk within `radius_m` of a location.
pub fn region_risk(map: &RiskMap, lat: f64, lng: f64, radius_m: f64) -> f64 {
    map.cells
        .iter()
        .zip(&map.risk)
        .filter(|((_, c), _)| haversine_m(lat, lng, c.lat, c.lng) <= radius_m)
        .map(|(_, r)| r)
        .sum()
}

/// Location categories with their coverage radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocationCategory {
    Hospital,
    Market,
    School,
    Station,
    Residence,
    RandomArea,
}

impl LocationCategory {
    pub const ALL: [LocationCategory; 6] = [
        LocationCategory::Hospital,
        LocationCategory::Market,
        LocationCategory::School,
        LocationCategory::Station,
        LocationCategory::Residence,
        LocationCategory::RandomArea,
    ];

    /// Range of plausible radii in meters. Only schools vary.
    pub fn radius_range_m(self) -> (f64, f64) {
        match self {
            LocationCategory::Hospital => (300.0, 300.0),
            LocationCategory::Market => (100.0, 100.0),
            LocationCategory::School => (20.0, 500.0),
            LocationCategory::Station => (500.0, 500.0),
            LocationCategory::Residence => (100.0, 100.0),
            LocationCategory::RandomArea => (100.0, 100.0),
        }
    }

    /// Default radius: the upper end of the range.
    pub fn radius_m(self) -> f64 {
        self.radius_range_m().1
    }

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name.to_ascii_lowercase().as_str() {
            "hospital" => LocationCategory::Hospital,
            "market" => LocationCategory::Market,
            "school" => LocationCategory::School,
            "station" => LocationCategory::Station,
            "residence" => LocationCategory::Residence,
            "random" | "random_area" => LocationCategory::RandomArea,
            _ => return None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CellTable;
    use std::sync::Arc;

    fn map() -> RiskMap {
        let deg = 1.0 / crate::geo::meters_per_degree_lat();
        let cells = Arc::new(CellTable::from_cells([
            ("a".to_string(), 0.0, 0.0),
            ("b".to_string(), 200.0 * deg, 0.0),
            ("c".to_string(), 400.0 * deg, 0.0),
        ]));
        RiskMap { day: 0, cells, risk: vec![1.0, 2.0, 4.0] }
    }

    #[test]
    fn sums_cells_within_radius() {
        let m = map();
        assert_eq!(region_risk(&m, 0.0, 0.0, LocationCategory::Hospital.radius_m()), 3.0);
        assert_eq!(region_risk(&m, 0.0, 0.0, 1000.0), 7.0);
    }

    #[test]
    fn empty_region_is_zero_and_linear() {
        let m = map();
        assert_eq!(region_risk(&m, 10.0, 10.0, 100.0), 0.0);
        let doubled = m.scaled(2.0);
        assert_eq!(region_risk(&doubled, 0.0, 0.0, 300.0), 2.0 * region_risk(&m, 0.0, 0.0, 300.0));
    }

    #[test]
    fn category_radii() {
        assert_eq!(LocationCategory::Hospital.radius_m(), 300.0);
        assert_eq!(LocationCategory::Market.radius_m(), 100.0);
        assert_eq!(LocationCategory::School.radius_range_m(), (20.0, 500.0));
        assert_eq!(LocationCategory::Station.radius_m(), 500.0);
        assert_eq!(LocationCategory::parse("Residence"), Some(LocationCategory::Residence));
    }
}
