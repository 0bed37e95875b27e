//! Driving distance and travel time approximations.

use serde::{Deserialize, Serialize};

use crate::time::TimePoint;

pub const EARTH_RADIUS_KM: f64 = 6371.0;
/// Ratio of driving distance to great-circle distance.
pub const DETOUR_FACTOR: f64 = 1.417;
pub const DRIVING_SPEED_KMH: f64 = 60.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub lat: f64,
    pub lon: f64,
}

impl Location {
    pub fn new(lat: f64, lon: f64) -> Self {
        Location { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lon)
    }
}

fn haversine_km(a: Location, b: Location) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Approximate driving distance in kilometers.
pub fn distance_km(a: Location, b: Location) -> f64 {
    DETOUR_FACTOR * haversine_km(a, b)
}

/// Driving time at constant speed; kilometers map one-to-one onto minutes.
pub fn travel_time(a: Location, b: Location) -> TimePoint {
    TimePoint::new(distance_km(a, b) / (DRIVING_SPEED_KMH * 24.0))
}
