//! Vision-model georeferencing: prompt construction, provider calls with
//! caching/retry/audit, and response parsing into grid cells or
//! coordinates.

pub mod prompt;
pub mod provider;

use std::fs::{File, OpenOptions};
use std::io::Write as _;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::geo::GeoPoint;
use crate::mapgen::{index_for_label, GridSpec, MapExcerpt};
use crate::{Error, Result};

pub use prompt::{build_prompt, format_grid_size, PromptTemplate};
pub use provider::{
    load_mock_fixtures, HttpProvider, LmmRequest, MockKey, MockProvider, Provider, ProviderConfig,
    ResponseCache,
};

/// A model's grid-cell prediction for one item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// In-bounds labels in first-occurrence order; may be empty.
    pub cells: Vec<String>,
    /// First element of `cells`.
    pub primary: Option<String>,
    /// Raw response text.
    pub rationale: String,
    pub request_fingerprint: String,
}

impl Prediction {
    pub fn new(cells: Vec<String>, rationale: String, request_fingerprint: String) -> Self {
        let primary = cells.first().cloned();
        Self { cells, primary, rationale, request_fingerprint }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinatePrediction {
    pub point: Option<GeoPoint>,
    pub rationale: String,
}

/// Scans the response for label-shaped tokens that fall inside the grid.
/// First-occurrence order, deduplicated. Labels the model merely
/// "considered" in its reasoning are kept: the raw text stays in the
/// audit log so a stricter extraction can be layered later.
pub fn parse_cells(response: &str, grid: &GridSpec) -> Vec<String> {
    let pattern = Regex::new(r"\b([A-Z]{1,2}[0-9]{1,2})\b").expect("static pattern");
    let mut seen = std::collections::HashSet::new();
    let mut cells = Vec::new();
    for m in pattern.find_iter(response) {
        let label = m.as_str();
        if index_for_label(grid, label).is_ok() && seen.insert(label.to_string()) {
            cells.push(label.to_string());
        }
    }
    cells
}

/// Extracts the first plausible decimal-degree pair. Accepts labeled
/// forms ("Latitude: -41.2, Longitude: 175.1") and bare "lat, lon" pairs.
pub fn parse_coordinates(response: &str) -> Option<GeoPoint> {
    let labeled = Regex::new(
        r"(?i)lat(?:itude)?\s*[:=]?\s*(-?\d+(?:\.\d+)?)\s*[,;]?\s*lon(?:gitude)?g?\s*[:=]?\s*(-?\d+(?:\.\d+)?)",
    )
    .expect("static pattern");
    if let Some(c) = labeled.captures(response) {
        let p = GeoPoint::new(c[1].parse().ok()?, c[2].parse().ok()?);
        if p.is_valid() {
            return Some(p);
        }
    }
    // Bare pairs must both carry a decimal point so stray integers in
    // prose don't look like coordinates.
    let pair = Regex::new(r"(-?\d+\.\d+)\s*[,;]\s*(-?\d+\.\d+)").expect("static pattern");
    for c in pair.captures_iter(response) {
        let p = GeoPoint::new(c[1].parse().ok()?, c[2].parse().ok()?);
        if p.is_valid() {
            return Some(p);
        }
    }
    None
}

/// Bounded exponential backoff for provider failures.
#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 3, base_delay_ms: 500, max_delay_ms: 8000 }
    }
}

/// Append-only JSON-lines audit log so runs can be re-scored without
/// re-querying the provider.
pub struct AuditLog {
    file: Mutex<File>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AuditEntry {
    pub item_id: String,
    pub template: String,
    pub prompt: String,
    pub image_sha256: Option<String>,
    pub response: String,
    pub cells: Vec<String>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl AuditLog {
    pub fn append_to(path: &Path) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::Provider(format!("opening audit log {}: {e}", path.display())))?;
        Ok(Self { file: Mutex::new(file) })
    }

    pub fn write(&self, entry: &AuditEntry) -> Result<()> {
        let line = serde_json::to_string(entry)
            .map_err(|e| Error::Provider(format!("serializing audit entry: {e}")))?;
        let mut file = self.file.lock().unwrap();
        writeln!(file, "{line}").map_err(|e| Error::Provider(format!("writing audit log: {e}")))
    }
}

pub fn read_audit_log(path: &Path) -> Result<Vec<AuditEntry>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Provider(format!("reading audit log {}: {e}", path.display())))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|e| Error::Provider(format!("bad audit line: {e}")))
        })
        .collect()
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Ties a provider to its cache, audit log and retry policy.
pub struct Georeferencer<'a> {
    pub provider: &'a dyn Provider,
    pub model_id: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub cache: Option<ResponseCache>,
    pub audit: Option<&'a AuditLog>,
    pub retry: RetryPolicy,
    /// Bypass the cache (entries are still refreshed on success).
    pub refresh_cache: bool,
}

impl<'a> Georeferencer<'a> {
    pub fn new(provider: &'a dyn Provider, model_id: impl Into<String>) -> Self {
        Self {
            provider,
            model_id: model_id.into(),
            temperature: 0.0,
            max_output_tokens: 1024,
            cache: None,
            audit: None,
            retry: RetryPolicy::default(),
            refresh_cache: false,
        }
    }

    /// Sends the request, consulting the cache first and retrying
    /// transient provider failures with exponential backoff.
    fn call(&self, request: &LmmRequest) -> Result<String> {
        let fingerprint = request.fingerprint();
        if !self.refresh_cache {
            if let Some(cache) = &self.cache {
                if let Some(hit) = cache.get(&fingerprint) {
                    return Ok(hit);
                }
            }
        }
        let mut delay = self.retry.base_delay_ms;
        let mut last_err = None;
        for attempt in 0..self.retry.max_attempts.max(1) {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(delay));
                delay = (delay * 2).min(self.retry.max_delay_ms);
            }
            match self.provider.send(request) {
                Ok(response) => {
                    if let Some(cache) = &self.cache {
                        cache.put(&fingerprint, &response)?;
                    }
                    return Ok(response);
                }
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.unwrap_or_else(|| Error::Provider("no attempts made".into())))
    }

    /// Gridded-map georeferencing: prompt + map image in, ordered cell
    /// labels out.
    pub fn georeference(
        &self,
        item_id: &str,
        description: &str,
        excerpt: &MapExcerpt,
        template: PromptTemplate,
    ) -> Result<Prediction> {
        if !template.is_gridded() {
            return Err(Error::Prompt(format!(
                "template {} is text-only; use text_only_georeference",
                template.id()
            )));
        }
        let cell_km = template.needs_grid_size().then_some(excerpt.georef.grid.cell_km);
        let prompt = build_prompt(template, description, cell_km, None, None)?;
        let request = LmmRequest {
            prompt_text: prompt.clone(),
            image: Some(excerpt.image.clone()),
            model_id: self.model_id.clone(),
            temperature: self.temperature,
            max_output_tokens: self.max_output_tokens,
        };
        let fingerprint = request.fingerprint();
        let response = self.call(&request)?;
        let cells = parse_cells(&response, &excerpt.georef.grid);
        if let Some(audit) = self.audit {
            audit.write(&AuditEntry {
                item_id: item_id.to_string(),
                template: template.id().to_string(),
                prompt,
                image_sha256: Some(hex::encode(Sha256::digest(&excerpt.image))),
                response: response.clone(),
                cells: cells.clone(),
                timestamp: unix_now(),
            })?;
        }
        Ok(Prediction::new(cells, response, fingerprint))
    }

    /// Text-only baseline: coordinates out.
    pub fn text_only_georeference(
        &self,
        item_id: &str,
        description: &str,
        template: PromptTemplate,
        region: Option<&str>,
        country: Option<&str>,
    ) -> Result<CoordinatePrediction> {
        if template.is_gridded() {
            return Err(Error::Prompt(format!(
                "template {} needs a map; use georeference",
                template.id()
            )));
        }
        let prompt = build_prompt(template, description, None, region, country)?;
        let request = LmmRequest {
            prompt_text: prompt.clone(),
            image: None,
            model_id: self.model_id.clone(),
            temperature: self.temperature,
            max_output_tokens: self.max_output_tokens,
        };
        let response = self.call(&request)?;
        if let Some(audit) = self.audit {
            audit.write(&AuditEntry {
                item_id: item_id.to_string(),
                template: template.id().to_string(),
                prompt,
                image_sha256: None,
                response: response.clone(),
                cells: Vec::new(),
                timestamp: unix_now(),
            })?;
        }
        Ok(CoordinatePrediction { point: parse_coordinates(&response), rationale: response })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapgen::{render_map, Basemap, FeatureMap, GridSpec, MapExtent, MapGeoreference, Style, PROJECTION_ID};

    fn grid12() -> GridSpec {
        GridSpec::new(12, 12, 1.0).unwrap()
    }

    #[test]
    fn parse_cells_basic() {
        assert_eq!(parse_cells("cells B3 and B4", &grid12()), ["B3", "B4"]);
        // Out of bounds on a 12x12 grid.
        assert_eq!(parse_cells("M13", &grid12()), Vec::<String>::new());
        // Dedup keeps first-occurrence order.
        assert_eq!(parse_cells("B3, B3, C3", &grid12()), ["B3", "C3"]);
        // Mixed prose, labels in order of appearance.
        assert_eq!(
            parse_cells("The location is in cell C7, possibly D7.", &grid12()),
            ["C7", "D7"]
        );
        assert_eq!(parse_cells("no labels here", &grid12()), Vec::<String>::new());
    }

    #[test]
    fn parse_cells_bounds() {
        // L12 is the last valid cell of a 12x12 grid; L13 and M12 are not.
        assert_eq!(parse_cells("L12 L13 M12", &grid12()), ["L12"]);
    }

    #[test]
    fn parse_coordinates_forms() {
        assert_eq!(parse_coordinates("-41.25, 175.16"), Some(GeoPoint::new(-41.25, 175.16)));
        assert_eq!(
            parse_coordinates("Latitude: -41.2, Longitude: 175.1"),
            Some(GeoPoint::new(-41.2, 175.1))
        );
        assert_eq!(parse_coordinates("somewhere near the lake"), None);
        // Implausible latitude rejected; later plausible pair accepted.
        assert_eq!(
            parse_coordinates("scores 140.5, 200.2 then -41.0, 174.9"),
            Some(GeoPoint::new(-41.0, 174.9))
        );
    }

    #[test]
    fn prediction_head_invariant() {
        let p = Prediction::new(vec!["C7".into(), "D7".into()], "r".into(), "f".into());
        assert_eq!(p.primary.as_deref(), Some("C7"));
        let empty = Prediction::new(vec![], "r".into(), "f".into());
        assert_eq!(empty.primary, None);
    }

    fn excerpt() -> MapExcerpt {
        let georef = MapGeoreference {
            extent: MapExtent::new(-41.40, 175.10, -41.30, 175.23).unwrap(),
            grid: grid12(),
            image_width_px: 120,
            image_height_px: 120,
            projection: PROJECTION_ID.into(),
        };
        render_map(&georef, &FeatureMap::new(), &[], &Style::default(), Basemap::Blank).unwrap()
    }

    #[test]
    fn georeference_with_mock() {
        let mock = MockProvider::new(vec![(
            MockKey::Any,
            "The location is in cell C7, possibly D7.".into(),
        )]);
        let geo = Georeferencer::new(&mock, "mock-model");
        let p = geo
            .georeference("r1", "Ca 2km north of Puketi.", &excerpt(), PromptTemplate::LogicalCotGrid)
            .unwrap();
        assert_eq!(p.cells, ["C7", "D7"]);
        assert_eq!(p.primary.as_deref(), Some("C7"));
    }

    #[test]
    fn unparseable_response_flagged_empty() {
        let mock = MockProvider::new(vec![(MockKey::Any, "no idea".into())]);
        let geo = Georeferencer::new(&mock, "mock-model");
        let p = geo
            .georeference("r1", "text", &excerpt(), PromptTemplate::ZeroShot)
            .unwrap();
        assert!(p.cells.is_empty());
        assert_eq!(p.primary, None);
    }

    #[test]
    fn cache_prevents_repeat_calls() {
        let dir = tempfile::tempdir().unwrap();
        let mock = MockProvider::new(vec![(MockKey::Any, "cell A1".into())]);
        let mut geo = Georeferencer::new(&mock, "mock-model");
        geo.cache = Some(ResponseCache::new(dir.path()).unwrap());
        let ex = excerpt();
        geo.georeference("r1", "text", &ex, PromptTemplate::ZeroShot).unwrap();
        assert_eq!(mock.calls(), 1);
        // Re-running the same batch issues zero provider calls.
        let p = geo.georeference("r1", "text", &ex, PromptTemplate::ZeroShot).unwrap();
        assert_eq!(mock.calls(), 1);
        assert_eq!(p.cells, ["A1"]);
        // refresh_cache bypasses the hit.
        geo.refresh_cache = true;
        geo.georeference("r1", "text", &ex, PromptTemplate::ZeroShot).unwrap();
        assert_eq!(mock.calls(), 2);
    }

    #[test]
    fn retry_then_surface() {
        struct Flaky(AtomicUsizeWrap);
        struct AtomicUsizeWrap(std::sync::atomic::AtomicUsize);
        impl Provider for Flaky {
            fn id(&self) -> &str {
                "flaky"
            }
            fn send(&self, _: &LmmRequest) -> Result<String> {
                let n = self.0 .0.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if n < 2 {
                    Err(Error::Provider("transient".into()))
                } else {
                    Ok("cell B2".into())
                }
            }
        }
        let flaky = Flaky(AtomicUsizeWrap(std::sync::atomic::AtomicUsize::new(0)));
        let mut geo = Georeferencer::new(&flaky, "m");
        geo.retry = RetryPolicy { max_attempts: 3, base_delay_ms: 1, max_delay_ms: 2 };
        let p = geo.georeference("r1", "t", &excerpt(), PromptTemplate::ZeroShot).unwrap();
        assert_eq!(p.cells, ["B2"]);

        let exhausted = Flaky(AtomicUsizeWrap(std::sync::atomic::AtomicUsize::new(0)));
        let mut geo = Georeferencer::new(&exhausted, "m");
        geo.retry = RetryPolicy { max_attempts: 2, base_delay_ms: 1, max_delay_ms: 2 };
        assert!(geo.georeference("r1", "t", &excerpt(), PromptTemplate::ZeroShot).is_err());
    }

    #[test]
    fn audit_log_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("audit.jsonl");
        let log = AuditLog::append_to(&path).unwrap();
        let mock = MockProvider::new(vec![(MockKey::Any, "cell C3 then D4".into())]);
        let mut geo = Georeferencer::new(&mock, "mock-model");
        geo.audit = Some(&log);
        geo.georeference("r9", "some text", &excerpt(), PromptTemplate::AutoCot).unwrap();
        let entries = read_audit_log(&path).unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].item_id, "r9");
        assert_eq!(entries[0].template, "auto_cot");
        assert_eq!(entries[0].cells, ["C3", "D4"]);
        assert!(entries[0].image_sha256.is_some());
    }

    #[test]
    fn text_baseline_with_mock() {
        let mock = MockProvider::new(vec![(MockKey::Any, "Latitude: -41.2, Longitude: 175.1".into())]);
        let geo = Georeferencer::new(&mock, "m");
        let p = geo
            .text_only_georeference("r1", "t", PromptTemplate::BaselineTextRegion, Some("Wellington"), Some("New Zealand"))
            .unwrap();
        assert_eq!(p.point, Some(GeoPoint::new(-41.2, 175.1)));
    }
}
