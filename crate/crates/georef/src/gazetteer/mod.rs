//! Place-name resolution: candidate lookup across sources, region
//! filtering, spatial-minimality disambiguation and per-source conflation.

pub mod source;

pub use source::{
    query_sources, CachedSource, HttpSource, HttpSourceConfig, LocalGeoJsonSource, Source,
};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::geo::{haversine_km, BBox, GeoPoint};
use crate::{Error, Result};

/// Feature geometry in WGS84 coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Geometry {
    Point { coord: GeoPoint },
    Line { coords: Vec<GeoPoint> },
    /// First ring is the outer boundary, the rest are holes. Rings are
    /// closed (first vertex repeated last).
    Polygon { rings: Vec<Vec<GeoPoint>> },
    Multi { parts: Vec<Geometry> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GeometryKind {
    Point,
    Line,
    Polygon,
    Multi,
}

impl Geometry {
    pub fn kind(&self) -> GeometryKind {
        match self {
            Geometry::Point { .. } => GeometryKind::Point,
            Geometry::Line { .. } => GeometryKind::Line,
            Geometry::Polygon { .. } => GeometryKind::Polygon,
            Geometry::Multi { .. } => GeometryKind::Multi,
        }
    }

    /// Complexity rank for conflation: polygon > line > point.
    pub fn complexity(&self) -> u8 {
        match self {
            Geometry::Polygon { .. } => 3,
            Geometry::Line { .. } => 2,
            Geometry::Point { .. } => 1,
            Geometry::Multi { parts } => parts.iter().map(|p| p.complexity()).max().unwrap_or(0),
        }
    }

    pub fn bbox(&self) -> BBox {
        let mut b = BBox::empty();
        self.expand_bbox(&mut b);
        b
    }

    fn expand_bbox(&self, b: &mut BBox) {
        match self {
            Geometry::Point { coord } => b.expand_point(*coord),
            Geometry::Line { coords } => coords.iter().for_each(|p| b.expand_point(*p)),
            Geometry::Polygon { rings } => {
                rings.iter().flatten().for_each(|p| b.expand_point(*p))
            }
            Geometry::Multi { parts } => parts.iter().for_each(|p| p.expand_bbox(b)),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Geometry::Point { .. } => false,
            Geometry::Line { coords } => coords.is_empty(),
            Geometry::Polygon { rings } => rings.iter().all(|r| r.is_empty()),
            Geometry::Multi { parts } => parts.iter().all(|p| p.is_empty()),
        }
    }
}

/// A resolved named place from one source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazetteerFeature {
    pub name: String,
    pub source: String,
    /// Lower is more authoritative.
    pub authority_rank: u32,
    pub geometry: Geometry,
    pub category: String,
    pub country: Option<String>,
    pub region: Option<String>,
}

/// Lookup result for one queried name. An empty candidate list is a legal
/// state: the name simply did not resolve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateSet {
    pub query_name: String,
    pub candidates: Vec<GazetteerFeature>,
    /// Set when region filtering would have emptied the set and the
    /// original candidates were kept instead.
    #[serde(default)]
    pub unfiltered: bool,
}

impl CandidateSet {
    pub fn new(query_name: impl Into<String>, candidates: Vec<GazetteerFeature>) -> Self {
        Self { query_name: query_name.into(), candidates, unfiltered: false }
    }
}

fn fold(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            'ā' | 'á' | 'à' | 'â' | 'ä' => 'a',
            'ē' | 'é' | 'è' | 'ê' | 'ë' => 'e',
            'ī' | 'í' | 'ì' | 'î' | 'ï' => 'i',
            'ō' | 'ó' | 'ò' | 'ô' | 'ö' => 'o',
            'ū' | 'ú' | 'ù' | 'û' | 'ü' => 'u',
            c => c,
        })
        .collect::<String>()
        .to_lowercase()
}

/// Case/diacritic-insensitive name equality.
pub fn names_match(a: &str, b: &str) -> bool {
    fold(a) == fold(b)
}

/// Keeps candidates whose country and region match (case-insensitive).
/// Falls back to country-only, then to the unchanged set flagged
/// `unfiltered`.
pub fn filter_by_region(set: &CandidateSet, country: &str, region: &str) -> CandidateSet {
    let matches_country = |f: &GazetteerFeature| {
        f.country.as_deref().map(|c| names_match(c, country)).unwrap_or(false)
    };
    let matches_region = |f: &GazetteerFeature| {
        f.region.as_deref().map(|r| names_match(r, region)).unwrap_or(false)
    };
    let both: Vec<_> = set
        .candidates
        .iter()
        .filter(|f| matches_country(f) && matches_region(f))
        .cloned()
        .collect();
    if !both.is_empty() {
        return CandidateSet { query_name: set.query_name.clone(), candidates: both, unfiltered: false };
    }
    let country_only: Vec<_> = set.candidates.iter().filter(|f| matches_country(f)).cloned().collect();
    if !country_only.is_empty() {
        return CandidateSet {
            query_name: set.query_name.clone(),
            candidates: country_only,
            unfiltered: false,
        };
    }
    CandidateSet { query_name: set.query_name.clone(), candidates: set.candidates.clone(), unfiltered: true }
}

/// Cross-product size above which candidate sets are pruned before the
/// exhaustive spatial-minimality search.
const CROSS_PRODUCT_CAP: usize = 10_000;
const PRUNE_KEEP: usize = 10;

/// Chooses one candidate per name minimizing total pairwise geodesic
/// distance between representative points. Ties break by summed
/// authority rank, then lexicographic source id, then list position.
///
/// Every input set must be non-empty; exclude unresolved names first.
pub fn disambiguate(sets: &[CandidateSet]) -> Result<HashMap<String, GazetteerFeature>> {
    for s in sets {
        if s.candidates.is_empty() {
            return Err(Error::Gazetteer(format!(
                "disambiguate requires non-empty candidate sets; {:?} is empty",
                s.query_name
            )));
        }
    }
    if sets.is_empty() {
        return Ok(HashMap::new());
    }

    let mut working: Vec<Vec<(GazetteerFeature, GeoPoint)>> = sets
        .iter()
        .map(|s| {
            s.candidates
                .iter()
                .map(|f| representative_point(f).map(|p| (f.clone(), p)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let product: usize = working
        .iter()
        .map(|v| v.len())
        .try_fold(1usize, |acc, n| acc.checked_mul(n))
        .unwrap_or(usize::MAX);
    if product > CROSS_PRODUCT_CAP {
        let anchor = prune_anchor(sets, &working);
        for set in working.iter_mut() {
            if set.len() > PRUNE_KEEP {
                set.sort_by(|a, b| {
                    haversine_km(a.1, anchor).total_cmp(&haversine_km(b.1, anchor))
                });
                set.truncate(PRUNE_KEEP);
            }
        }
    }

    let mut best: Option<(f64, u64, Vec<usize>)> = None;
    let mut idx = vec![0usize; working.len()];
    loop {
        let mut total = 0.0;
        for i in 0..working.len() {
            for j in (i + 1)..working.len() {
                total += haversine_km(working[i][idx[i]].1, working[j][idx[j]].1);
            }
        }
        let rank_sum: u64 = idx
            .iter()
            .enumerate()
            .map(|(i, &k)| u64::from(working[i][k].0.authority_rank))
            .sum();
        let better = match &best {
            None => true,
            Some((bd, br, bi)) => {
                if (total - bd).abs() > 1e-9 {
                    total < *bd
                } else if rank_sum != *br {
                    rank_sum < *br
                } else {
                    let cur: Vec<&str> =
                        idx.iter().enumerate().map(|(i, &k)| working[i][k].0.source.as_str()).collect();
                    let prev: Vec<&str> =
                        bi.iter().enumerate().map(|(i, &k)| working[i][k].0.source.as_str()).collect();
                    cur < prev
                }
            }
        };
        if better {
            best = Some((total, rank_sum, idx.clone()));
        }
        // advance mixed-radix counter
        let mut pos = working.len();
        loop {
            if pos == 0 {
                let (_, _, chosen) = best.unwrap();
                let mut out = HashMap::new();
                for (i, &k) in chosen.iter().enumerate() {
                    out.insert(sets[i].query_name.clone(), working[i][k].0.clone());
                }
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < working[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

fn prune_anchor(sets: &[CandidateSet], working: &[Vec<(GazetteerFeature, GeoPoint)>]) -> GeoPoint {
    // Centroid of all names that have a single candidate, falling back to
    // the centroid of everything.
    let singles: Vec<GeoPoint> = sets
        .iter()
        .zip(working)
        .filter(|(s, _)| s.candidates.len() == 1)
        .map(|(_, w)| w[0].1)
        .collect();
    let pts: Vec<GeoPoint> = if singles.is_empty() {
        working.iter().flatten().map(|(_, p)| *p).collect()
    } else {
        singles
    };
    let n = pts.len() as f64;
    GeoPoint::new(
        pts.iter().map(|p| p.lat).sum::<f64>() / n,
        pts.iter().map(|p| p.lon).sum::<f64>() / n,
    )
}

/// Merges per-source candidates for one name into the preferred feature:
/// richer geometry first, then lower authority rank, then larger extent.
pub fn conflate(per_source: &[GazetteerFeature]) -> Result<GazetteerFeature> {
    per_source
        .iter()
        .max_by(|a, b| {
            a.geometry
                .complexity()
                .cmp(&b.geometry.complexity())
                .then(b.authority_rank.cmp(&a.authority_rank))
                .then(a.geometry.bbox().area_deg2().total_cmp(&b.geometry.bbox().area_deg2()))
        })
        .cloned()
        .ok_or_else(|| Error::Gazetteer("conflate requires at least one feature".into()))
}

/// A single point standing in for the feature: the point itself, the
/// middle vertex of a line, or an interior point of a polygon.
pub fn representative_point(feature: &GazetteerFeature) -> Result<GeoPoint> {
    rep_point_geom(&feature.geometry)
        .ok_or_else(|| Error::Gazetteer(format!("degenerate geometry for {:?}", feature.name)))
}

fn rep_point_geom(g: &Geometry) -> Option<GeoPoint> {
    match g {
        Geometry::Point { coord } => Some(*coord),
        Geometry::Line { coords } => {
            if coords.is_empty() {
                None
            } else {
                Some(coords[coords.len() / 2])
            }
        }
        Geometry::Polygon { rings } => polygon_rep_point(rings),
        Geometry::Multi { parts } => {
            let largest = parts
                .iter()
                .filter(|p| !p.is_empty())
                .max_by(|a, b| a.bbox().area_deg2().total_cmp(&b.bbox().area_deg2()))?;
            rep_point_geom(largest)
        }
    }
}

fn polygon_rep_point(rings: &[Vec<GeoPoint>]) -> Option<GeoPoint> {
    let outer = rings.first()?;
    if outer.len() < 3 {
        return None;
    }
    let c = ring_centroid(outer)?;
    if point_in_polygon(c, rings) {
        return Some(c);
    }
    pole_of_inaccessibility(rings)
}

fn ring_centroid(ring: &[GeoPoint]) -> Option<GeoPoint> {
    // Planar shoelace centroid over lon/lat; adequate at gazetteer scales.
    let mut area2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for w in ring.windows(2) {
        let cross = w[0].lon * w[1].lat - w[1].lon * w[0].lat;
        area2 += cross;
        cx += (w[0].lon + w[1].lon) * cross;
        cy += (w[0].lat + w[1].lat) * cross;
    }
    if area2.abs() < 1e-18 {
        // Degenerate ring: average the vertices.
        let n = (ring.len() - 1).max(1) as f64;
        return Some(GeoPoint::new(
            ring.iter().take(ring.len() - 1).map(|p| p.lat).sum::<f64>() / n,
            ring.iter().take(ring.len() - 1).map(|p| p.lon).sum::<f64>() / n,
        ));
    }
    Some(GeoPoint::new(cy / (3.0 * area2), cx / (3.0 * area2)))
}

/// Even-odd point-in-polygon test over all rings.
pub fn point_in_polygon(p: GeoPoint, rings: &[Vec<GeoPoint>]) -> bool {
    let mut inside = false;
    for ring in rings {
        for w in ring.windows(2) {
            let (a, b) = (w[0], w[1]);
            if (a.lat > p.lat) != (b.lat > p.lat) {
                let x = a.lon + (p.lat - a.lat) / (b.lat - a.lat) * (b.lon - a.lon);
                if p.lon < x {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

/// Coarse grid search for an interior point far from the boundary.
fn pole_of_inaccessibility(rings: &[Vec<GeoPoint>]) -> Option<GeoPoint> {
    let bbox = Geometry::Polygon { rings: rings.to_vec() }.bbox();
    let steps = 32;
    let mut best: Option<(f64, GeoPoint)> = None;
    for i in 0..=steps {
        for j in 0..=steps {
            let p = GeoPoint::new(
                bbox.min_lat + (bbox.max_lat - bbox.min_lat) * i as f64 / steps as f64,
                bbox.min_lon + (bbox.max_lon - bbox.min_lon) * j as f64 / steps as f64,
            );
            if !point_in_polygon(p, rings) {
                continue;
            }
            let d = boundary_distance(p, rings);
            if best.map(|(bd, _)| d > bd).unwrap_or(true) {
                best = Some((d, p));
            }
        }
    }
    best.map(|(_, p)| p)
}

fn boundary_distance(p: GeoPoint, rings: &[Vec<GeoPoint>]) -> f64 {
    let mut best = f64::INFINITY;
    for ring in rings {
        for w in ring.windows(2) {
            best = best.min(segment_distance(p, w[0], w[1]));
        }
    }
    best
}

fn segment_distance(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> f64 {
    let (px, py) = (p.lon, p.lat);
    let (ax, ay) = (a.lon, a.lat);
    let (bx, by) = (b.lon, b.lat);
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { ((px - ax) * dx + (py - ay) * dy) / len2 };
    let t = t.clamp(0.0, 1.0);
    let (qx, qy) = (ax + t * dx, ay + t * dy);
    ((px - qx).powi(2) + (py - qy).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(lat: f64, lon: f64) -> Geometry {
        Geometry::Point { coord: GeoPoint::new(lat, lon) }
    }

    fn feat(name: &str, source: &str, rank: u32, geom: Geometry) -> GazetteerFeature {
        GazetteerFeature {
            name: name.into(),
            source: source.into(),
            authority_rank: rank,
            geometry: geom,
            category: "locality".into(),
            country: Some("New Zealand".into()),
            region: None,
        }
    }

    fn square(min_lat: f64, min_lon: f64, size: f64) -> Geometry {
        Geometry::Polygon {
            rings: vec![vec![
                GeoPoint::new(min_lat, min_lon),
                GeoPoint::new(min_lat, min_lon + size),
                GeoPoint::new(min_lat + size, min_lon + size),
                GeoPoint::new(min_lat + size, min_lon),
                GeoPoint::new(min_lat, min_lon),
            ]],
        }
    }

    #[test]
    fn filter_by_region_narrows() {
        let mut a = feat("Puketi", "local", 0, pt(-35.2, 173.7));
        a.region = Some("Northland".into());
        let mut b = feat("Puketi", "local", 0, pt(-38.0, 176.0));
        b.region = Some("Bay of Plenty".into());
        let mut c = feat("Puketi", "local", 0, pt(-41.0, 175.0));
        c.region = Some("Wellington".into());
        let set = CandidateSet::new("Puketi", vec![a.clone(), b, c]);
        let out = filter_by_region(&set, "New Zealand", "Northland");
        assert_eq!(out.candidates.len(), 1);
        assert_eq!(out.candidates[0].region, a.region);
        assert!(!out.unfiltered);
    }

    #[test]
    fn filter_by_region_identity_when_all_match() {
        let mut a = feat("X", "local", 0, pt(-35.0, 173.0));
        a.region = Some("Northland".into());
        let set = CandidateSet::new("X", vec![a.clone(), a.clone()]);
        let out = filter_by_region(&set, "new zealand", "NORTHLAND");
        assert_eq!(out.candidates.len(), 2);
    }

    #[test]
    fn filter_by_region_falls_back_unfiltered() {
        let a = feat("X", "local", 0, pt(48.0, 11.0));
        let mut a = a;
        a.country = Some("Germany".into());
        let set = CandidateSet::new("X", vec![a]);
        let out = filter_by_region(&set, "New Zealand", "Otago");
        assert_eq!(out.candidates.len(), 1);
        assert!(out.unfiltered);
    }

    #[test]
    fn filter_never_increases_count() {
        let set = CandidateSet::new("X", vec![feat("X", "s", 0, pt(0.0, 0.0))]);
        let out = filter_by_region(&set, "Nowhere", "None");
        assert!(out.candidates.len() <= set.candidates.len());
    }

    #[test]
    fn disambiguate_picks_tight_cluster() {
        // One name is fixed near Otago; the other has an Auckland-area and
        // an Otago-area reading. Spatial minimality must pick Otago.
        let fixed = CandidateSet::new("Anchor", vec![feat("Anchor", "s", 0, pt(-45.0, 170.0))]);
        let auckland = feat("Amb", "s", 0, pt(-36.8, 174.7));
        let otago = feat("Amb", "s", 0, pt(-45.1, 170.2));
        let amb = CandidateSet::new("Amb", vec![auckland, otago.clone()]);
        let chosen = disambiguate(&[fixed, amb]).unwrap();
        assert_eq!(chosen["Amb"], otago);
    }

    #[test]
    fn disambiguate_single_candidate_identity() {
        let f = feat("Solo", "s", 0, pt(-41.0, 175.0));
        let out = disambiguate(&[CandidateSet::new("Solo", vec![f.clone()])]).unwrap();
        assert_eq!(out["Solo"], f);
    }

    #[test]
    fn disambiguate_tie_broken_by_authority_rank() {
        // Two names, each with candidates forming two equally tight
        // clusters (distance 0 within each). Lower summed rank must win.
        let a_hi = feat("A", "s1", 2, pt(-40.0, 175.0));
        let a_lo = feat("A", "s1", 0, pt(-45.0, 170.0));
        let b_hi = feat("B", "s1", 2, pt(-40.0, 175.0));
        let b_lo = feat("B", "s1", 0, pt(-45.0, 170.0));
        let out = disambiguate(&[
            CandidateSet::new("A", vec![a_hi, a_lo.clone()]),
            CandidateSet::new("B", vec![b_hi, b_lo.clone()]),
        ])
        .unwrap();
        assert_eq!(out["A"], a_lo);
        assert_eq!(out["B"], b_lo);
    }

    #[test]
    fn disambiguate_matches_brute_force_oracle() {
        // Independent nested-loop brute force over up to 3 names x 3 candidates.
        let sets = vec![
            CandidateSet::new(
                "N1",
                vec![
                    feat("N1", "a", 1, pt(-36.0, 174.0)),
                    feat("N1", "b", 0, pt(-45.0, 170.0)),
                ],
            ),
            CandidateSet::new(
                "N2",
                vec![
                    feat("N2", "a", 0, pt(-44.8, 170.1)),
                    feat("N2", "b", 1, pt(-36.5, 174.5)),
                    feat("N2", "c", 2, pt(-41.0, 172.0)),
                ],
            ),
            CandidateSet::new("N3", vec![feat("N3", "a", 0, pt(-45.2, 169.9))]),
        ];
        let got = disambiguate(&sets).unwrap();

        let mut best: Option<(f64, Vec<usize>)> = None;
        for i in 0..sets[0].candidates.len() {
            for j in 0..sets[1].candidates.len() {
                for k in 0..sets[2].candidates.len() {
                    let picks = [
                        &sets[0].candidates[i],
                        &sets[1].candidates[j],
                        &sets[2].candidates[k],
                    ];
                    let mut total = 0.0;
                    for x in 0..3 {
                        for y in (x + 1)..3 {
                            total += haversine_km(
                                representative_point(picks[x]).unwrap(),
                                representative_point(picks[y]).unwrap(),
                            );
                        }
                    }
                    if best.as_ref().map(|(d, _)| total < *d).unwrap_or(true) {
                        best = Some((total, vec![i, j, k]));
                    }
                }
            }
        }
        let (_, oracle_idx) = best.unwrap();
        assert_eq!(got["N1"], sets[0].candidates[oracle_idx[0]]);
        assert_eq!(got["N2"], sets[1].candidates[oracle_idx[1]]);
        assert_eq!(got["N3"], sets[2].candidates[oracle_idx[2]]);
    }

    #[test]
    fn disambiguate_rejects_empty_set() {
        assert!(disambiguate(&[CandidateSet::new("gone", vec![])]).is_err());
    }

    #[test]
    fn conflate_prefers_polygon_over_point() {
        let point = feat("Lake", "names-index", 0, pt(-41.2, 175.2));
        let poly = feat("Lake", "community-map", 1, square(-41.3, 175.1, 0.1));
        let chosen = conflate(&[point, poly.clone()]).unwrap();
        assert_eq!(chosen, poly);
    }

    #[test]
    fn conflate_single_identity() {
        let f = feat("X", "s", 0, pt(0.0, 0.0));
        assert_eq!(conflate(&[f.clone()]).unwrap(), f);
    }

    #[test]
    fn conflate_prefers_authoritative_polygon() {
        let rank0 = feat("X", "authoritative", 0, square(-41.0, 175.0, 0.1));
        let rank2 = feat("X", "community", 2, square(-41.0, 175.0, 0.1));
        assert_eq!(conflate(&[rank2, rank0.clone()]).unwrap(), rank0);
    }

    #[test]
    fn conflate_never_point_when_polygon_exists() {
        let fs = vec![
            feat("X", "a", 0, pt(0.0, 0.0)),
            feat("X", "b", 5, square(-1.0, -1.0, 2.0)),
            feat("X", "c", 1, pt(0.5, 0.5)),
        ];
        let chosen = conflate(&fs).unwrap();
        assert_eq!(chosen.geometry.kind(), GeometryKind::Polygon);
    }

    #[test]
    fn representative_point_cases() {
        let p = feat("P", "s", 0, pt(-41.5, 175.5));
        assert_eq!(representative_point(&p).unwrap(), GeoPoint::new(-41.5, 175.5));

        let sq = feat("S", "s", 0, square(0.0, 0.0, 1.0));
        let rp = representative_point(&sq).unwrap();
        assert!((rp.lat - 0.5).abs() < 1e-9 && (rp.lon - 0.5).abs() < 1e-9);
    }

    #[test]
    fn representative_point_c_shape_falls_inside() {
        // C-shaped polygon whose centroid lies in the opening.
        let ring = vec![
            GeoPoint::new(0.0, 0.0),
            GeoPoint::new(3.0, 0.0),
            GeoPoint::new(3.0, 3.0),
            GeoPoint::new(0.0, 3.0),
            GeoPoint::new(0.0, 2.0),
            GeoPoint::new(2.0, 2.0),
            GeoPoint::new(2.0, 1.0),
            GeoPoint::new(0.0, 1.0),
            GeoPoint::new(0.0, 0.0),
        ];
        let rings = vec![ring];
        let f = feat("C", "s", 0, Geometry::Polygon { rings: rings.clone() });
        let rp = representative_point(&f).unwrap();
        assert!(point_in_polygon(rp, &rings), "rep point {rp:?} not inside");
    }

    #[test]
    fn representative_point_degenerate_errors() {
        let f = feat("E", "s", 0, Geometry::Line { coords: vec![] });
        assert!(representative_point(&f).is_err());
    }

    #[test]
    fn representative_point_line_midpoint() {
        let coords = vec![
            GeoPoint::new(0.0, 0.0),
            GeoPoint::new(0.0, 1.0),
            GeoPoint::new(0.0, 2.0),
        ];
        let f = feat("L", "s", 0, Geometry::Line { coords });
        assert_eq!(representative_point(&f).unwrap(), GeoPoint::new(0.0, 1.0));
    }
}
