//! Map-excerpt extent rules: drop containment parents, union same-level
//! feature extents, buffer relata of distance relations, and clip
//! oversized linear features.

use std::collections::{HashMap, HashSet};

use crate::gazetteer::{GazetteerFeature, Geometry, GeometryKind};
use crate::geo::{BBox, GeoPoint};
use crate::parser::RelationTriple;
use crate::{Error, Result};

use super::grid::MapExtent;

/// Resolved features keyed by canonical place name.
pub type FeatureMap = HashMap<String, GazetteerFeature>;

#[derive(Debug, Clone)]
pub struct ExtentOptions {
    /// Multiplier on a relation's distance when buffering its relatum.
    pub buffer_factor: f64,
    /// Fractional padding per side of the final bbox.
    pub pad_fraction: f64,
    /// Minimum extent side, km; guards point-only descriptions.
    pub min_extent_km: f64,
    /// Target image width / height; the shorter extent axis is expanded
    /// to match.
    pub aspect_ratio: f64,
    /// A line feature whose bbox area exceeds this multiple of the
    /// non-linear union is clipped.
    pub linear_area_ratio: f64,
}

impl Default for ExtentOptions {
    fn default() -> Self {
        Self {
            buffer_factor: 1.5,
            pad_fraction: 0.10,
            min_extent_km: 1.0,
            aspect_ratio: 1.0,
            linear_area_ratio: 4.0,
        }
    }
}

fn is_linear(g: &Geometry) -> bool {
    matches!(g.kind(), GeometryKind::Line)
        || matches!(g, Geometry::Multi { parts } if parts.iter().all(|p| matches!(p.kind(), GeometryKind::Line)))
}

/// Names that are containment parents of another resolved feature.
fn parent_names(features: &FeatureMap, containment: &[(String, String)]) -> HashSet<String> {
    containment
        .iter()
        .filter(|(p, c)| features.contains_key(p) && features.contains_key(c))
        .map(|(p, _)| p.clone())
        .collect()
}

/// Computes the excerpt extent:
/// 1. drop features that contain another resolved feature,
/// 2. union the remaining bboxes,
/// 3. buffer each surviving relatum of a distance relation,
/// 4. pad, apply the minimum-extent floor, and match the aspect ratio.
///
/// `skip_buffer` exempts named features from step 3 (used after linear
/// clipping, where the buffered area is already inside the clip extent).
pub fn compute_extent(
    features: &FeatureMap,
    triples: &[RelationTriple],
    containment: &[(String, String)],
    opts: &ExtentOptions,
    skip_buffer: &HashSet<String>,
) -> Result<MapExtent> {
    if features.is_empty() {
        return Err(Error::Extent("nothing to map: no resolvable features".into()));
    }
    let parents = parent_names(features, containment);
    let survivors: Vec<(&String, &GazetteerFeature)> =
        features.iter().filter(|(name, _)| !parents.contains(*name)).collect();
    // Every feature can be a parent only when the hierarchy is a chain of
    // one; keep the finest in that case.
    let survivors = if survivors.is_empty() {
        let finest = features
            .iter()
            .min_by(|a, b| {
                a.1.geometry
                    .bbox()
                    .area_deg2()
                    .total_cmp(&b.1.geometry.bbox().area_deg2())
            })
            .unwrap();
        vec![finest]
    } else {
        survivors
    };

    let mut union = BBox::empty();
    for (name, f) in &survivors {
        let mut b = f.geometry.bbox();
        if !skip_buffer.contains(*name) {
            for t in triples {
                let relatum = t.relatum.canonical();
                if relatum == name.as_str() {
                    if let Some(d) = t.distance_km {
                        b = b.union(&b.buffer_km(d * opts.buffer_factor));
                    }
                }
            }
        }
        union = union.union(&b);
    }
    finalize_extent(union, opts)
}

fn finalize_extent(mut union: BBox, opts: &ExtentOptions) -> Result<MapExtent> {
    if union.is_empty() {
        return Err(Error::Extent("nothing to map: empty feature union".into()));
    }
    // Minimum floor before padding so a point still becomes a usable box.
    let floor = opts.min_extent_km / 2.0;
    let c = union.center();
    let floored = BBox::from_point(c).buffer_km(floor);
    union = union.union(&floored);

    let pad_lat = (union.max_lat - union.min_lat) * opts.pad_fraction;
    let pad_lon = (union.max_lon - union.min_lon) * opts.pad_fraction;
    union.min_lat = union.min_lat - pad_lat;
    union.max_lat = union.max_lat + pad_lat;
    union.min_lon = union.min_lon - pad_lon;
    union.max_lon = union.max_lon + pad_lon;

    let extent = MapExtent::new(union.min_lat, union.min_lon, union.max_lat, union.max_lon)?;
    Ok(match_aspect(extent, opts.aspect_ratio))
}

/// Expands the shorter axis symmetrically so projected width / height
/// equals the target ratio.
fn match_aspect(extent: MapExtent, ratio: f64) -> MapExtent {
    let (min_x, min_y, max_x, max_y) = extent.projected();
    let width = max_x - min_x;
    let height = max_y - min_y;
    let current = width / height;
    if (current - ratio).abs() < 1e-9 {
        return extent;
    }
    if current < ratio {
        // widen
        let extra = (height * ratio - width) / 2.0;
        let w = crate::geo::mercator_unproject(min_x - extra, min_y);
        let e = crate::geo::mercator_unproject(max_x + extra, max_y);
        MapExtent { min_lat: extent.min_lat, min_lon: w.lon, max_lat: extent.max_lat, max_lon: e.lon }
    } else {
        // heighten
        let extra = (width / ratio - height) / 2.0;
        let s = crate::geo::mercator_unproject(min_x, min_y - extra);
        let n = crate::geo::mercator_unproject(max_x, max_y + extra);
        MapExtent { min_lat: s.lat, min_lon: extent.min_lon, max_lat: n.lat, max_lon: extent.max_lon }
    }
}

/// Clips oversized line features to `clip_extent`, retaining the portions
/// inside it. Other features pass through unchanged.
pub fn clip_linear_features(features: &FeatureMap, clip_extent: &MapExtent) -> FeatureMap {
    let clip_bbox = BBox::new(
        clip_extent.min_lat,
        clip_extent.min_lon,
        clip_extent.max_lat,
        clip_extent.max_lon,
    );
    let union_non_linear = features
        .values()
        .filter(|f| !is_linear(&f.geometry))
        .map(|f| f.geometry.bbox())
        .fold(BBox::empty(), |acc, b| acc.union(&b));
    // Point-only unions have no area to compare against, so the ratio
    // test only applies when some non-linear feature has real extent.
    let threshold = union_non_linear.area_deg2() * 4.0;

    let mut out = FeatureMap::new();
    for (name, f) in features {
        let needs_clip = is_linear(&f.geometry)
            && threshold > 0.0
            && f.geometry.bbox().area_deg2() > threshold
            && !clip_bbox.contains_bbox(&f.geometry.bbox());
        if !needs_clip {
            out.insert(name.clone(), f.clone());
            continue;
        }
        if let Some(clipped) = clip_geometry(&f.geometry, &clip_bbox) {
            let mut nf = f.clone();
            nf.geometry = clipped;
            out.insert(name.clone(), nf);
        }
        // A line entirely outside the clip extent is dropped.
    }
    out
}

fn clip_geometry(g: &Geometry, bbox: &BBox) -> Option<Geometry> {
    match g {
        Geometry::Line { coords } => {
            let parts = clip_line(coords, bbox);
            match parts.len() {
                0 => None,
                1 => Some(Geometry::Line { coords: parts.into_iter().next().unwrap() }),
                _ => Some(Geometry::Multi {
                    parts: parts.into_iter().map(|coords| Geometry::Line { coords }).collect(),
                }),
            }
        }
        Geometry::Multi { parts } => {
            let clipped: Vec<Geometry> =
                parts.iter().filter_map(|p| clip_geometry(p, bbox)).collect();
            if clipped.is_empty() {
                None
            } else {
                Some(Geometry::Multi { parts: clipped })
            }
        }
        other => Some(other.clone()),
    }
}

/// Splits a polyline into the runs inside the bbox, inserting boundary
/// intersection points (Liang-Barsky clipping per segment).
fn clip_line(coords: &[GeoPoint], bbox: &BBox) -> Vec<Vec<GeoPoint>> {
    let mut runs: Vec<Vec<GeoPoint>> = Vec::new();
    let mut current: Vec<GeoPoint> = Vec::new();
    for w in coords.windows(2) {
        match clip_segment(w[0], w[1], bbox) {
            Some((a, b)) => {
                if current.last().map(|p| *p != a).unwrap_or(true) {
                    if !current.is_empty() {
                        runs.push(std::mem::take(&mut current));
                    }
                    current.push(a);
                }
                current.push(b);
            }
            None => {
                if !current.is_empty() {
                    runs.push(std::mem::take(&mut current));
                }
            }
        }
    }
    if !current.is_empty() {
        runs.push(current);
    }
    runs.retain(|r| r.len() >= 2);
    runs
}

fn clip_segment(p0: GeoPoint, p1: GeoPoint, bbox: &BBox) -> Option<(GeoPoint, GeoPoint)> {
    let (x0, y0) = (p0.lon, p0.lat);
    let (x1, y1) = (p1.lon, p1.lat);
    let (dx, dy) = (x1 - x0, y1 - y0);
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    let checks = [
        (-dx, x0 - bbox.min_lon),
        (dx, bbox.max_lon - x0),
        (-dy, y0 - bbox.min_lat),
        (dy, bbox.max_lat - y0),
    ];
    for (p, q) in checks {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                if r > t1 {
                    return None;
                }
                t0 = t0.max(r);
            } else {
                if r < t0 {
                    return None;
                }
                t1 = t1.min(r);
            }
        }
    }
    if t0 > t1 {
        return None;
    }
    Some((
        GeoPoint::new(y0 + t0 * dy, x0 + t0 * dx),
        GeoPoint::new(y0 + t1 * dy, x0 + t1 * dx),
    ))
}

/// Full extent planning: computes the rule-based extent, clips oversized
/// linear features against the extent derived from non-linear features
/// (buffered by the distances of relations that reference those lines),
/// and recomputes the final extent over the clipped feature set.
///
/// Returns the extent and the (possibly clipped) features to render.
pub fn plan_extent(
    features: &FeatureMap,
    triples: &[RelationTriple],
    containment: &[(String, String)],
    opts: &ExtentOptions,
) -> Result<(MapExtent, FeatureMap)> {
    let base = compute_extent(features, triples, containment, opts, &HashSet::new())?;

    let union_non_linear = features
        .values()
        .filter(|f| !is_linear(&f.geometry))
        .map(|f| f.geometry.bbox())
        .fold(BBox::empty(), |acc, b| acc.union(&b));
    let oversized: Vec<&String> = features
        .iter()
        .filter(|(_, f)| {
            is_linear(&f.geometry)
                && union_non_linear.area_deg2() > 0.0
                && f.geometry.bbox().area_deg2() > union_non_linear.area_deg2() * opts.linear_area_ratio
        })
        .map(|(n, _)| n)
        .collect();
    if oversized.is_empty() {
        return Ok((base, features.clone()));
    }

    // Clip extent: the non-linear union buffered by the distances of
    // relations whose relatum is an oversized line, so a stretch of the
    // line around the described offset survives.
    let mut clip_union = union_non_linear;
    for t in triples {
        if let Some(d) = t.distance_km {
            if oversized.iter().any(|n| n.as_str() == t.relatum.canonical()) {
                clip_union = clip_union.union(&clip_union.buffer_km(d));
            }
        }
    }
    let clip_extent = finalize_extent(clip_union, opts)?;
    let clipped = clip_linear_features(features, &clip_extent);

    let skip: HashSet<String> = oversized.into_iter().cloned().collect();
    let extent = compute_extent(&clipped, triples, containment, opts, &skip)?;
    Ok((extent, clipped))
}
