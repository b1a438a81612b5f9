//! Geodesic primitives: WGS84 points, bounding boxes, haversine distance
//! and the spherical Web Mercator projection.
//!
//! Everything here is generic over the scalar type; the crate root exports
//! `f64` aliases which the rest of the pipeline uses.

use serde::{Deserialize, Serialize};

use crate::scalar::GeoScalar;

/// A WGS84 coordinate pair in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint<F = f64> {
    pub lat: F,
    pub lon: F,
}

impl<F: GeoScalar> GeoPoint<F> {
    pub fn new(lat: F, lon: F) -> Self {
        Self { lat, lon }
    }

    /// Checks the WGS84 range invariants.
    pub fn is_valid(&self) -> bool {
        let ninety = F::from_f64(90.0).unwrap();
        let one_eighty = F::from_f64(180.0).unwrap();
        self.lat >= -ninety
            && self.lat <= ninety
            && self.lon >= -one_eighty
            && self.lon <= one_eighty
            && self.lat.is_finite()
            && self.lon.is_finite()
    }
}

/// Great-circle distance in kilometres on the mean-radius sphere.
pub fn haversine_km<F: GeoScalar>(a: GeoPoint<F>, b: GeoPoint<F>) -> F {
    let two = F::from_f64(2.0).unwrap();
    let lat1 = a.lat.to_radians();
    let lat2 = b.lat.to_radians();
    let dlat = (b.lat - a.lat).to_radians();
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / two).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / two).sin().powi(2);
    two * F::earth_radius_km() * h.sqrt().min(F::one()).asin()
}

/// Geographic bounding box in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox<F = f64> {
    pub min_lat: F,
    pub min_lon: F,
    pub max_lat: F,
    pub max_lon: F,
}

impl<F: GeoScalar> BBox<F> {
    pub fn new(min_lat: F, min_lon: F, max_lat: F, max_lon: F) -> Self {
        Self { min_lat, min_lon, max_lat, max_lon }
    }

    /// Degenerate box covering a single point.
    pub fn from_point(p: GeoPoint<F>) -> Self {
        Self { min_lat: p.lat, min_lon: p.lon, max_lat: p.lat, max_lon: p.lon }
    }

    pub fn empty() -> Self {
        Self {
            min_lat: F::infinity(),
            min_lon: F::infinity(),
            max_lat: F::neg_infinity(),
            max_lon: F::neg_infinity(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min_lat > self.max_lat || self.min_lon > self.max_lon
    }

    pub fn expand_point(&mut self, p: GeoPoint<F>) {
        self.min_lat = self.min_lat.min(p.lat);
        self.min_lon = self.min_lon.min(p.lon);
        self.max_lat = self.max_lat.max(p.lat);
        self.max_lon = self.max_lon.max(p.lon);
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            min_lat: self.min_lat.min(other.min_lat),
            min_lon: self.min_lon.min(other.min_lon),
            max_lat: self.max_lat.max(other.max_lat),
            max_lon: self.max_lon.max(other.max_lon),
        }
    }

    pub fn contains_point(&self, p: GeoPoint<F>) -> bool {
        p.lat >= self.min_lat && p.lat <= self.max_lat && p.lon >= self.min_lon && p.lon <= self.max_lon
    }

    pub fn contains_bbox(&self, other: &Self) -> bool {
        other.min_lat >= self.min_lat
            && other.min_lon >= self.min_lon
            && other.max_lat <= self.max_lat
            && other.max_lon <= self.max_lon
    }

    pub fn center(&self) -> GeoPoint<F> {
        let two = F::from_f64(2.0).unwrap();
        GeoPoint::new((self.min_lat + self.max_lat) / two, (self.min_lon + self.max_lon) / two)
    }

    /// Area in square degrees. Only meaningful for relative comparisons.
    pub fn area_deg2(&self) -> F {
        if self.is_empty() {
            return F::zero();
        }
        (self.max_lat - self.min_lat) * (self.max_lon - self.min_lon)
    }

    /// Grows the box by `km` on every side, converting kilometres to
    /// degrees at the box centre latitude.
    pub fn buffer_km(&self, km: F) -> Self {
        let dlat = km_to_deg_lat(km);
        let dlon = km_to_deg_lon(km, self.center().lat);
        Self {
            min_lat: self.min_lat - dlat,
            min_lon: self.min_lon - dlon,
            max_lat: self.max_lat + dlat,
            max_lon: self.max_lon + dlon,
        }
    }
}

/// Kilometres of one degree of latitude on the mean-radius sphere.
pub fn km_per_deg_lat<F: GeoScalar>() -> F {
    F::earth_radius_km() * F::from_f64(std::f64::consts::PI / 180.0).unwrap()
}

pub fn km_to_deg_lat<F: GeoScalar>(km: F) -> F {
    km / km_per_deg_lat::<F>()
}

pub fn km_to_deg_lon<F: GeoScalar>(km: F, at_lat: F) -> F {
    km / (km_per_deg_lat::<F>() * at_lat.to_radians().cos().max(F::from_f64(1e-9).unwrap()))
}

/// Web Mercator limits; poleward of this the projection diverges.
pub const MERCATOR_MAX_LAT: f64 = 85.05112877980659;

/// Spherical Web Mercator, in metres on the WGS84 semi-major sphere.
/// x grows eastward, y grows northward.
pub fn mercator_project<F: GeoScalar>(p: GeoPoint<F>) -> (F, F) {
    let r = F::from_f64(6378137.0).unwrap();
    let four = F::from_f64(4.0).unwrap();
    let two = F::from_f64(2.0).unwrap();
    let pi = F::from_f64(std::f64::consts::PI).unwrap();
    let x = r * p.lon.to_radians();
    let y = r * (pi / four + p.lat.to_radians() / two).tan().ln();
    (x, y)
}

pub fn mercator_unproject<F: GeoScalar>(x: F, y: F) -> GeoPoint<F> {
    let r = F::from_f64(6378137.0).unwrap();
    let two = F::from_f64(2.0).unwrap();
    let four = F::from_f64(4.0).unwrap();
    let pi = F::from_f64(std::f64::consts::PI).unwrap();
    let lon = (x / r).to_degrees();
    let lat = (two * ((y / r).exp().atan() - pi / four)).to_degrees();
    GeoPoint::new(lat, lon)
}
