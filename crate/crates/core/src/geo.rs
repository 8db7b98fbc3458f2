//! Great-circle distances over cell coordinates.

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Haversine distance in meters between two points given in degrees.
pub fn haversine_m(lat1: f64, lng1: f64, lat2: f64, lng2: f64) -> f64 {
    let phi1 = lat1.to_radians();
    let phi2 = lat2.to_radians();
    let dphi = (lat2 - lat1).to_radians();
    let dlambda = (lng2 - lng1).to_radians();
    let a = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().min(1.0).asin()
}

/// Meters spanned by one degree of latitude on the reference sphere.
pub fn meters_per_degree_lat() -> f64 {
    EARTH_RADIUS_M * std::f64::consts::PI / 180.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_points_are_zero() {
        assert_eq!(haversine_m(10.0, 20.0, 10.0, 20.0), 0.0);
    }

    #[test]
    fn quarter_great_circle() {
        let d = haversine_m(0.0, 0.0, 0.0, 90.0);
        let expected = 2.0 * std::f64::consts::PI * EARTH_RADIUS_M / 4.0;
        assert!((d - expected).abs() < 1e-6, "{d} vs {expected}");
        assert!((d - 10_007_543.0).abs() < 1.0);
    }

    #[test]
    fn one_degree_at_equator() {
        // Arc length of one degree on a 6371 km sphere: 6371000 * pi / 180.
        let d = haversine_m(0.0, 0.0, 0.0, 1.0);
        assert!((d - 111_194.926_644_558_7).abs() < 1e-6, "{d}");
        assert!((d - 111_195.0).abs() < 1.0);
    }

    #[test]
    fn symmetric() {
        let a = haversine_m(30.5, 114.3, 39.9, 116.4);
        let b = haversine_m(39.9, 116.4, 30.5, 114.3);
        assert!((a - b).abs() < 1e-9);
    }
}
