//! Scalar abstraction for the geodesic and grid math.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating point scalar: f32 or f64.
pub trait GeoScalar: Float + FromPrimitive + NumCast + Debug {
    /// Mean earth radius in kilometres, shared by every geodesic
    /// computation in this crate.
    fn earth_radius_km() -> Self {
        Self::from_f64(6371.0088).unwrap()
    }
}

impl<T> GeoScalar for T where T: Float + FromPrimitive + NumCast + Debug {}
