//! Gazetteer source clients: a local GeoJSON file source for offline and
//! authoritative data, an HTTP feature service, and a disk-cache wrapper.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::geo::GeoPoint;
use crate::{Error, Result};

use super::{names_match, CandidateSet, GazetteerFeature, Geometry};

/// One queryable gazetteer backend.
pub trait Source: Send + Sync {
    fn id(&self) -> &str;
    fn authority_rank(&self) -> u32;
    fn query(&self, name: &str, country: &str, region: &str) -> Result<Vec<GazetteerFeature>>;
}

/// Queries every source in order and unions the candidates. A failing
/// source is skipped with a warning unless every source fails.
pub fn query_sources(
    name: &str,
    country: &str,
    region: &str,
    sources: &[&dyn Source],
) -> Result<CandidateSet> {
    if name.is_empty() {
        return Err(Error::Gazetteer("query name must be non-empty".into()));
    }
    if sources.is_empty() {
        return Err(Error::Gazetteer("at least one source must be configured".into()));
    }
    let mut candidates = Vec::new();
    let mut failures = Vec::new();
    for source in sources {
        match source.query(name, country, region) {
            Ok(found) => candidates.extend(found),
            Err(e) => {
                eprintln!("warning: source {} failed for {:?}: {e}", source.id(), name);
                failures.push(format!("{}: {e}", source.id()));
            }
        }
    }
    if failures.len() == sources.len() {
        return Err(Error::Gazetteer(format!(
            "all sources failed for {name:?}: {}",
            failures.join("; ")
        )));
    }
    Ok(CandidateSet::new(name, candidates))
}

/// Offline gazetteer backed by a GeoJSON FeatureCollection. Feature
/// properties: `name`, `category`, `country`, `region`, `authority_rank`.
pub struct LocalGeoJsonSource {
    id: String,
    authority_rank: u32,
    features: Vec<GazetteerFeature>,
}

impl LocalGeoJsonSource {
    pub fn from_path(id: &str, authority_rank: u32, path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Gazetteer(format!("reading {}: {e}", path.display())))?;
        Self::from_str(id, authority_rank, &text)
    }

    pub fn from_str(id: &str, authority_rank: u32, geojson: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(geojson)
            .map_err(|e| Error::Gazetteer(format!("invalid GeoJSON: {e}")))?;
        let features = parse_feature_collection(&value, id, authority_rank)?;
        Ok(Self { id: id.to_string(), authority_rank, features })
    }
}

impl Source for LocalGeoJsonSource {
    fn id(&self) -> &str {
        &self.id
    }

    fn authority_rank(&self) -> u32 {
        self.authority_rank
    }

    fn query(&self, name: &str, _country: &str, _region: &str) -> Result<Vec<GazetteerFeature>> {
        Ok(self
            .features
            .iter()
            .filter(|f| names_match(&f.name, name))
            .cloned()
            .collect())
    }
}

/// Parses a GeoJSON FeatureCollection into gazetteer features.
pub fn parse_feature_collection(
    value: &Value,
    source_id: &str,
    default_rank: u32,
) -> Result<Vec<GazetteerFeature>> {
    let features = value
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Gazetteer("GeoJSON has no features array".into()))?;
    let mut out = Vec::new();
    for f in features {
        let props = f.get("properties").cloned().unwrap_or(Value::Null);
        let name = props
            .get("name")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string();
        if name.is_empty() {
            continue;
        }
        let geometry = match f.get("geometry") {
            Some(g) => parse_geojson_geometry(g)?,
            None => continue,
        };
        out.push(GazetteerFeature {
            name,
            source: source_id.to_string(),
            authority_rank: props
                .get("authority_rank")
                .and_then(Value::as_u64)
                .map(|r| r as u32)
                .unwrap_or(default_rank),
            geometry,
            category: props
                .get("category")
                .and_then(Value::as_str)
                .unwrap_or("unknown")
                .to_string(),
            country: props.get("country").and_then(Value::as_str).map(String::from),
            region: props.get("region").and_then(Value::as_str).map(String::from),
        });
    }
    Ok(out)
}

fn coord(v: &Value) -> Result<GeoPoint> {
    let arr = v
        .as_array()
        .filter(|a| a.len() >= 2)
        .ok_or_else(|| Error::Gazetteer("bad coordinate".into()))?;
    // GeoJSON order is [lon, lat].
    let lon = arr[0].as_f64().ok_or_else(|| Error::Gazetteer("bad lon".into()))?;
    let lat = arr[1].as_f64().ok_or_else(|| Error::Gazetteer("bad lat".into()))?;
    Ok(GeoPoint::new(lat, lon))
}

fn coord_list(v: &Value) -> Result<Vec<GeoPoint>> {
    v.as_array()
        .ok_or_else(|| Error::Gazetteer("bad coordinate list".into()))?
        .iter()
        .map(coord)
        .collect()
}

pub fn parse_geojson_geometry(g: &Value) -> Result<Geometry> {
    let kind = g
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Gazetteer("geometry missing type".into()))?;
    let coords = g
        .get("coordinates")
        .ok_or_else(|| Error::Gazetteer("geometry missing coordinates".into()))?;
    match kind {
        "Point" => Ok(Geometry::Point { coord: coord(coords)? }),
        "LineString" => Ok(Geometry::Line { coords: coord_list(coords)? }),
        "Polygon" => {
            let rings = coords
                .as_array()
                .ok_or_else(|| Error::Gazetteer("bad polygon".into()))?
                .iter()
                .map(coord_list)
                .collect::<Result<Vec<_>>>()?;
            for ring in &rings {
                if ring.first() != ring.last() {
                    return Err(Error::Gazetteer("polygon ring not closed".into()));
                }
            }
            Ok(Geometry::Polygon { rings })
        }
        "MultiPolygon" => {
            let parts = coords
                .as_array()
                .ok_or_else(|| Error::Gazetteer("bad multipolygon".into()))?
                .iter()
                .map(|poly| {
                    let rings = poly
                        .as_array()
                        .ok_or_else(|| Error::Gazetteer("bad polygon".into()))?
                        .iter()
                        .map(coord_list)
                        .collect::<Result<Vec<_>>>()?;
                    Ok(Geometry::Polygon { rings })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Geometry::Multi { parts })
        }
        "MultiLineString" => {
            let parts = coords
                .as_array()
                .ok_or_else(|| Error::Gazetteer("bad multilinestring".into()))?
                .iter()
                .map(|l| Ok(Geometry::Line { coords: coord_list(l)? }))
                .collect::<Result<Vec<_>>>()?;
            Ok(Geometry::Multi { parts })
        }
        "MultiPoint" => {
            let parts = coord_list(coords)?
                .into_iter()
                .map(|c| Geometry::Point { coord: c })
                .collect();
            Ok(Geometry::Multi { parts })
        }
        other => Err(Error::Gazetteer(format!("unsupported geometry type {other:?}"))),
    }
}

/// Configuration for an HTTP feature service returning GeoJSON.
///
/// The query template substitutes `{name}`, `{country}` and `{region}`
/// into the URL.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct HttpSourceConfig {
    pub id: String,
    pub endpoint: String,
    pub authority_rank: u32,
    /// Minimum seconds between requests.
    #[serde(default = "default_rate")]
    pub min_interval_s: f64,
    #[serde(default = "default_user_agent")]
    pub user_agent: String,
}

fn default_rate() -> f64 {
    1.0
}

fn default_user_agent() -> String {
    "georef/0.1 (batch georeferencing pipeline)".to_string()
}

pub struct HttpSource {
    config: HttpSourceConfig,
    client: reqwest::blocking::Client,
    last_request: Mutex<Option<Instant>>,
}

impl HttpSource {
    pub fn new(config: HttpSourceConfig) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .user_agent(config.user_agent.clone())
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| Error::Gazetteer(format!("building HTTP client: {e}")))?;
        Ok(Self { config, client, last_request: Mutex::new(None) })
    }

    fn throttle(&self) {
        let mut last = self.last_request.lock().unwrap();
        if let Some(t) = *last {
            let min = Duration::from_secs_f64(self.config.min_interval_s);
            let elapsed = t.elapsed();
            if elapsed < min {
                std::thread::sleep(min - elapsed);
            }
        }
        *last = Some(Instant::now());
    }
}

impl Source for HttpSource {
    fn id(&self) -> &str {
        &self.config.id
    }

    fn authority_rank(&self) -> u32 {
        self.config.authority_rank
    }

    fn query(&self, name: &str, country: &str, region: &str) -> Result<Vec<GazetteerFeature>> {
        self.throttle();
        let encode = |s: &str| s.replace(' ', "+");
        let url = self
            .config
            .endpoint
            .replace("{name}", &encode(name))
            .replace("{country}", &encode(country))
            .replace("{region}", &encode(region));
        let resp = self
            .client
            .get(&url)
            .send()
            .map_err(|e| Error::Gazetteer(format!("request to {}: {e}", self.config.id)))?;
        if !resp.status().is_success() {
            return Err(Error::Gazetteer(format!(
                "source {} returned HTTP {}",
                self.config.id,
                resp.status()
            )));
        }
        let value: Value = resp
            .json()
            .map_err(|e| Error::Gazetteer(format!("decoding {} response: {e}", self.config.id)))?;
        parse_feature_collection(&value, &self.config.id, self.config.authority_rank)
    }
}

/// Content-addressed disk cache in front of a source, keyed by
/// (source id, name, country). No TTL; `refresh` bypasses reads.
pub struct CachedSource<S> {
    inner: S,
    dir: PathBuf,
    refresh: bool,
    write_lock: Mutex<()>,
}

impl<S: Source> CachedSource<S> {
    pub fn new(inner: S, cache_dir: impl Into<PathBuf>, refresh: bool) -> Self {
        Self { inner, dir: cache_dir.into(), refresh, write_lock: Mutex::new(()) }
    }

    fn key_path(&self, name: &str, country: &str) -> PathBuf {
        let mut hasher = Sha256::new();
        hasher.update(self.inner.id().as_bytes());
        hasher.update([0]);
        hasher.update(name.as_bytes());
        hasher.update([0]);
        hasher.update(country.as_bytes());
        self.dir.join(format!("{}.json", hex::encode(hasher.finalize())))
    }
}

impl<S: Source> Source for CachedSource<S> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn authority_rank(&self) -> u32 {
        self.inner.authority_rank()
    }

    fn query(&self, name: &str, country: &str, region: &str) -> Result<Vec<GazetteerFeature>> {
        let path = self.key_path(name, country);
        if !self.refresh {
            if let Ok(text) = fs::read_to_string(&path) {
                if let Ok(features) = serde_json::from_str(&text) {
                    return Ok(features);
                }
            }
        }
        let features = self.inner.query(name, country, region)?;
        let _guard = self.write_lock.lock().unwrap();
        fs::create_dir_all(&self.dir).ok();
        let tmp = path.with_extension("tmp");
        if fs::write(&tmp, serde_json::to_string(&features).unwrap()).is_ok() {
            fs::rename(&tmp, &path).ok();
        }
        Ok(features)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    const SAMPLE: &str = r#"{
      "type": "FeatureCollection",
      "features": [
        {"type": "Feature",
         "properties": {"name": "Lake Wairarapa", "category": "lake", "country": "New Zealand", "region": "Wellington", "authority_rank": 1},
         "geometry": {"type": "Polygon", "coordinates": [[[175.2,-41.4],[175.3,-41.4],[175.3,-41.3],[175.2,-41.3],[175.2,-41.4]]]}},
        {"type": "Feature",
         "properties": {"name": "Puketi", "category": "locality", "country": "New Zealand", "region": "Northland"},
         "geometry": {"type": "Point", "coordinates": [173.72, -35.23]}}
      ]
    }"#;

    #[test]
    fn local_source_finds_polygon_candidate() {
        let src = LocalGeoJsonSource::from_str("community-map", 1, SAMPLE).unwrap();
        let set = query_sources("Lake Wairarapa", "New Zealand", "Wellington", &[&src]).unwrap();
        assert_eq!(set.candidates.len(), 1);
        assert_eq!(set.candidates[0].geometry.kind(), super::super::GeometryKind::Polygon);
    }

    #[test]
    fn unresolved_name_yields_empty_set() {
        let src = LocalGeoJsonSource::from_str("community-map", 1, SAMPLE).unwrap();
        let set =
            query_sources("J.K. Donald Wildlife Reserve", "New Zealand", "Wellington", &[&src])
                .unwrap();
        assert!(set.candidates.is_empty());
    }

    #[test]
    fn empty_name_rejected() {
        let src = LocalGeoJsonSource::from_str("s", 0, SAMPLE).unwrap();
        assert!(query_sources("", "New Zealand", "", &[&src]).is_err());
    }

    #[test]
    fn name_matching_folds_case_and_diacritics() {
        let src = LocalGeoJsonSource::from_str("s", 0, SAMPLE).unwrap();
        let set = query_sources("pukETI", "New Zealand", "", &[&src]).unwrap();
        assert_eq!(set.candidates.len(), 1);
    }

    struct CountingSource {
        calls: AtomicUsize,
        fail: bool,
    }

    impl Source for CountingSource {
        fn id(&self) -> &str {
            "counting"
        }
        fn authority_rank(&self) -> u32 {
            0
        }
        fn query(&self, _n: &str, _c: &str, _r: &str) -> Result<Vec<GazetteerFeature>> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            if self.fail {
                Err(Error::Gazetteer("simulated network failure".into()))
            } else {
                Ok(vec![GazetteerFeature {
                    name: "X".into(),
                    source: "counting".into(),
                    authority_rank: 0,
                    geometry: Geometry::Point { coord: GeoPoint::new(0.0, 0.0) },
                    category: "t".into(),
                    country: None,
                    region: None,
                }])
            }
        }
    }

    #[test]
    fn warm_cache_makes_zero_backend_calls() {
        let dir = tempfile::tempdir().unwrap();
        let cached = CachedSource::new(
            CountingSource { calls: AtomicUsize::new(0), fail: false },
            dir.path(),
            false,
        );
        cached.query("X", "NZ", "").unwrap();
        cached.query("X", "NZ", "").unwrap();
        cached.query("X", "NZ", "").unwrap();
        assert_eq!(cached.inner.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn refresh_bypasses_cache() {
        let dir = tempfile::tempdir().unwrap();
        let cached = CachedSource::new(
            CountingSource { calls: AtomicUsize::new(0), fail: false },
            dir.path(),
            true,
        );
        cached.query("X", "NZ", "").unwrap();
        cached.query("X", "NZ", "").unwrap();
        assert_eq!(cached.inner.calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn one_failing_source_is_skipped() {
        let good = LocalGeoJsonSource::from_str("s", 0, SAMPLE).unwrap();
        let bad = CountingSource { calls: AtomicUsize::new(0), fail: true };
        let set = query_sources("Puketi", "New Zealand", "", &[&bad, &good]).unwrap();
        assert_eq!(set.candidates.len(), 1);
    }

    #[test]
    fn all_sources_failing_is_error() {
        let bad1 = CountingSource { calls: AtomicUsize::new(0), fail: true };
        let bad2 = CountingSource { calls: AtomicUsize::new(0), fail: true };
        let err = query_sources("Puketi", "New Zealand", "", &[&bad1, &bad2]).unwrap_err();
        assert!(err.to_string().contains("all sources failed"));
    }

    #[test]
    fn unclosed_ring_rejected() {
        let bad = r#"{"type":"FeatureCollection","features":[{"type":"Feature",
          "properties":{"name":"Bad"},
          "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1]]]}}]}"#;
        assert!(LocalGeoJsonSource::from_str("s", 0, bad).is_err());
    }
}
