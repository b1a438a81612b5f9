//! Batch orchestration: configuration, stage artifacts, and the six
//! pipeline commands (parse, resolve, mapgen, georef, eval, run).
//!
//! Each stage reads the previous stage's artifact from the output
//! directory and writes its own, so any stage can be re-run in
//! isolation. All artifacts carry a schema version.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::gazetteer::source::{LocalGeoJsonSource, Source};
use crate::gazetteer::{disambiguate, filter_by_region, query_sources, GazetteerFeature};
use crate::georeferencer::{
    load_mock_fixtures, AuditLog, Georeferencer, HttpProvider, MockProvider, Prediction,
    PromptTemplate, Provider, ProviderConfig, ResponseCache,
};
use crate::eval::{
    aggregate_grid_report, reports_to_csv, GridEvalItem, GridEvalPrediction, ItemScore,
    MetricReport, UnparseableMode,
};
use crate::mapgen::{
    index_for_label, label_for_index, make_grid, plan_extent, point_to_cell, render_map, Basemap,
    ExtentOptions, MapGeoreference, Style, TileFetcher,
};
use crate::parser::{parse_description, ParseOverride, ParseResult};
use crate::records::{filter_records, import_csv, CollectionRecord};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

fn default_min_length() -> usize {
    60
}
fn default_workers() -> usize {
    1
}
fn default_image_px() -> u32 {
    512
}
fn default_target_cell_km() -> f64 {
    1.0
}
fn default_max_cells() -> u32 {
    12
}
fn default_buffer_factor() -> f64 {
    1.5
}
fn default_min_extent_km() -> f64 {
    1.0
}
fn default_template() -> PromptTemplate {
    PromptTemplate::PersonaLogicalCotGrid
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GazetteerSection {
    /// Offline GeoJSON gazetteers, in authority order (first = most
    /// authoritative, rank 0).
    #[serde(default)]
    pub local_geojson: Vec<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapgenSection {
    #[serde(default = "default_target_cell_km")]
    pub target_cell_km: f64,
    #[serde(default = "default_max_cells")]
    pub max_cells_per_axis: u32,
    #[serde(default = "default_image_px")]
    pub image_px: u32,
    #[serde(default = "default_buffer_factor")]
    pub buffer_factor: f64,
    #[serde(default = "default_min_extent_km")]
    pub min_extent_km: f64,
    /// Slippy-map tile URL template; absent = blank basemap.
    #[serde(default)]
    pub tile_url: Option<String>,
    /// Optional style file; the built-in style is used otherwise.
    #[serde(default)]
    pub style: Option<PathBuf>,
}

impl Default for MapgenSection {
    fn default() -> Self {
        Self {
            target_cell_km: default_target_cell_km(),
            max_cells_per_axis: default_max_cells(),
            image_px: default_image_px(),
            buffer_factor: default_buffer_factor(),
            min_extent_km: default_min_extent_km(),
            tile_url: None,
            style: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ProviderSection {
    /// Deterministic offline provider answering from a fixture file.
    Mock { fixtures: PathBuf },
    /// Chat-completions HTTP adapter.
    Http {
        #[serde(flatten)]
        config: ProviderConfig,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// CSV of raw records (`id,text,country,region,lat,lon`).
    pub records: PathBuf,
    pub output_dir: PathBuf,
    pub cache_dir: PathBuf,
    /// Directory of per-record manual-annotation sidecars `{id}.json`.
    #[serde(default)]
    pub overrides_dir: Option<PathBuf>,
    pub gazetteer: GazetteerSection,
    #[serde(default)]
    pub mapgen: MapgenSection,
    pub provider: ProviderSection,
    #[serde(default = "default_template")]
    pub template: PromptTemplate,
    #[serde(default = "default_min_length")]
    pub min_length: usize,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Refuse anything that would touch the network.
    #[serde(default)]
    pub offline: bool,
    #[serde(default)]
    pub unparseable_mode: UnparseableMode,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?;
        let mut config: Self = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("parsing {}: {e}", path.display())))?;
        // Relative paths resolve against the config file's directory.
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let anchor = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        anchor(&mut config.records);
        anchor(&mut config.output_dir);
        anchor(&mut config.cache_dir);
        if let Some(d) = &mut config.overrides_dir {
            anchor(d);
        }
        for p in &mut config.gazetteer.local_geojson {
            anchor(p);
        }
        if let Some(s) = &mut config.mapgen.style {
            anchor(s);
        }
        if let ProviderSection::Mock { fixtures } = &mut config.provider {
            anchor(fixtures);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.records.exists() {
            return Err(Error::Config(format!("records file {} does not exist", self.records.display())));
        }
        for p in &self.gazetteer.local_geojson {
            if !p.exists() {
                return Err(Error::Config(format!("gazetteer file {} does not exist", p.display())));
            }
        }
        if let Some(s) = &self.mapgen.style {
            if !s.exists() {
                return Err(Error::Config(format!("style file {} does not exist", s.display())));
            }
        }
        if let ProviderSection::Mock { fixtures } = &self.provider {
            if !fixtures.exists() {
                return Err(Error::Config(format!("mock fixture file {} does not exist", fixtures.display())));
            }
        }
        let positive = [
            ("mapgen.target_cell_km", self.mapgen.target_cell_km),
            ("mapgen.buffer_factor", self.mapgen.buffer_factor),
            ("mapgen.min_extent_km", self.mapgen.min_extent_km),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.mapgen.max_cells_per_axis == 0 || self.mapgen.image_px == 0 || self.workers == 0 {
            return Err(Error::Config("cell, pixel and worker counts must be positive".into()));
        }
        if self.offline {
            if self.mapgen.tile_url.is_some() {
                return Err(Error::Config("offline mode forbids a tile server".into()));
            }
            if matches!(self.provider, ProviderSection::Http { .. }) {
                return Err(Error::Config("offline mode forbids an HTTP provider".into()));
            }
        }
        Ok(())
    }

    fn style(&self) -> Result<Style> {
        match &self.mapgen.style {
            Some(p) => Style::from_path(p),
            None => Ok(Style::default()),
        }
    }

    fn extent_options(&self) -> ExtentOptions {
        ExtentOptions {
            buffer_factor: self.mapgen.buffer_factor,
            min_extent_km: self.mapgen.min_extent_km,
            ..ExtentOptions::default()
        }
    }
}

/// Per-stage completion manifest, persisted alongside partial artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageManifest {
    pub schema_version: u32,
    pub stage: String,
    pub completed: Vec<String>,
    pub failed: Vec<(String, String)>,
}

impl StageManifest {
    fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(format!("{}.manifest.json", self.stage));
        write_json(&path, self)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Pipeline(format!("serializing {}: {e}", path.display())))?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| Error::Pipeline(format!("creating {}: {e}", parent.display())))?;
    }
    fs::write(path, json).map_err(|e| Error::Pipeline(format!("writing {}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Pipeline(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Pipeline(format!("parsing {}: {e}", path.display())))
}

// ---------------------------------------------------------------- parse

#[derive(Debug, Serialize, Deserialize)]
pub struct ParseArtifact {
    pub schema_version: u32,
    pub items: Vec<ParsedItem>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParsedItem {
    pub record: CollectionRecord,
    pub parse: ParseResult,
}

fn load_override(config: &PipelineConfig, id: &str) -> Result<Option<ParseOverride>> {
    let Some(dir) = &config.overrides_dir else { return Ok(None) };
    let path = dir.join(format!("{id}.json"));
    if !path.exists() {
        return Ok(None);
    }
    read_json(&path).map(Some)
}

pub fn cmd_parse(config: &PipelineConfig) -> Result<ParseArtifact> {
    let records = import_csv(&config.records)?;
    let records = filter_records(&records, config.min_length);
    let mut items = Vec::new();
    let mut manifest = StageManifest {
        schema_version: SCHEMA_VERSION,
        stage: "parse".into(),
        completed: Vec::new(),
        failed: Vec::new(),
    };
    for record in records {
        let manual = load_override(config, &record.id)?;
        match parse_description(&record.text, manual.as_ref()) {
            Ok(parse) => {
                manifest.completed.push(record.id.clone());
                items.push(ParsedItem { record, parse });
            }
            Err(e) => manifest.failed.push((record.id.clone(), e.to_string())),
        }
    }
    let artifact = ParseArtifact { schema_version: SCHEMA_VERSION, items };
    write_json(&config.output_dir.join("parsed.json"), &artifact)?;
    manifest.write(&config.output_dir)?;
    if !manifest.failed.is_empty() {
        eprintln!("parse: {} of {} records failed", manifest.failed.len(), manifest.failed.len() + manifest.completed.len());
    }
    Ok(artifact)
}

// -------------------------------------------------------------- resolve

#[derive(Debug, Serialize, Deserialize)]
pub struct ResolveArtifact {
    pub schema_version: u32,
    pub items: Vec<ResolvedItem>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolvedItem {
    pub id: String,
    pub features: HashMap<String, GazetteerFeature>,
    pub unresolved: Vec<String>,
}

fn build_sources(config: &PipelineConfig) -> Result<Vec<LocalGeoJsonSource>> {
    if config.gazetteer.local_geojson.is_empty() {
        return Err(Error::Config("at least one gazetteer source is required".into()));
    }
    config
        .gazetteer
        .local_geojson
        .iter()
        .enumerate()
        .map(|(rank, path)| {
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| format!("source-{rank}"));
            LocalGeoJsonSource::from_path(&id, rank as u32, path)
        })
        .collect()
}

/// Resolves one parsed record's mentions to features.
pub fn resolve_item(
    item: &ParsedItem,
    sources: &[&dyn Source],
) -> Result<ResolvedItem> {
    let mut sets = Vec::new();
    let mut unresolved = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for mention in &item.parse.mentions {
        let name = mention.canonical();
        if !seen.insert(name.to_string()) {
            continue;
        }
        let set = query_sources(name, &item.record.country, &item.record.region, sources)?;
        let set = filter_by_region(&set, &item.record.country, &item.record.region);
        if set.candidates.is_empty() {
            unresolved.push(name.to_string());
        } else {
            sets.push(set);
        }
    }
    let features = disambiguate(&sets)?;
    Ok(ResolvedItem { id: item.record.id.clone(), features, unresolved })
}

pub fn cmd_resolve(config: &PipelineConfig) -> Result<ResolveArtifact> {
    let parsed: ParseArtifact = read_json(&config.output_dir.join("parsed.json"))?;
    let sources = build_sources(config)?;
    let source_refs: Vec<&dyn Source> = sources.iter().map(|s| s as &dyn Source).collect();
    let mut items = Vec::new();
    let mut manifest = StageManifest {
        schema_version: SCHEMA_VERSION,
        stage: "resolve".into(),
        completed: Vec::new(),
        failed: Vec::new(),
    };
    for item in &parsed.items {
        match resolve_item(item, &source_refs) {
            Ok(resolved) => {
                manifest.completed.push(resolved.id.clone());
                items.push(resolved);
            }
            Err(e) => manifest.failed.push((item.record.id.clone(), e.to_string())),
        }
    }
    let artifact = ResolveArtifact { schema_version: SCHEMA_VERSION, items };
    write_json(&config.output_dir.join("resolved.json"), &artifact)?;
    manifest.write(&config.output_dir)?;
    Ok(artifact)
}

// --------------------------------------------------------------- mapgen

#[derive(Debug, Serialize, Deserialize)]
pub struct MapgenArtifact {
    pub schema_version: u32,
    pub items: Vec<MapSidecar>,
}

/// Sidecar written next to each rendered PNG.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapSidecar {
    pub schema_version: u32,
    pub id: String,
    pub image_path: PathBuf,
    pub georef: MapGeoreference,
    pub scale_km: f64,
    pub features_drawn: Vec<String>,
    pub unresolved_names: Vec<String>,
    pub no_basemap: bool,
    /// Present when the record carried ground truth inside the extent.
    pub truth_label: Option<String>,
}

/// Renders one record's map excerpt into `maps_dir`.
pub fn mapgen_item(
    parsed: &ParsedItem,
    resolved: &ResolvedItem,
    config: &PipelineConfig,
    style: &Style,
    fetcher: Option<&TileFetcher>,
    maps_dir: &Path,
) -> Result<MapSidecar> {
    if resolved.features.is_empty() {
        return Err(Error::Pipeline(format!(
            "record {}: nothing to map (no resolved features)",
            parsed.record.id
        )));
    }
    // Containment from the parse stage is the comma-sequence heuristic;
    // with geometries in hand, recompute it geometrically.
    let geometric = crate::parser::detect_containment(&parsed.parse.mentions, Some(&resolved.features))
        .unwrap_or_else(|_| parsed.parse.containment.clone());
    let containment: Vec<(String, String)> = geometric
        .iter()
        .map(|(p, c)| (p.canonical().to_string(), c.canonical().to_string()))
        .collect();
    let (extent, features) = plan_extent(
        &resolved.features,
        &parsed.parse.triples,
        &containment,
        &config.extent_options(),
    )?;
    let (extent, grid) = make_grid(&extent, config.mapgen.target_cell_km, config.mapgen.max_cells_per_axis)?;
    let aspect = (grid.rows as f64) / (grid.cols as f64);
    let georef = MapGeoreference {
        extent,
        grid,
        image_width_px: config.mapgen.image_px,
        image_height_px: ((config.mapgen.image_px as f64) * aspect).round().max(1.0) as u32,
        projection: crate::mapgen::PROJECTION_ID.into(),
    };
    let basemap = match fetcher {
        Some(f) => Basemap::Tiles(f),
        None => Basemap::Blank,
    };
    let excerpt = render_map(&georef, &features, &resolved.unresolved, style, basemap)?;
    fs::create_dir_all(maps_dir)
        .map_err(|e| Error::Pipeline(format!("creating {}: {e}", maps_dir.display())))?;
    let image_path = maps_dir.join(format!("{}.png", parsed.record.id));
    fs::write(&image_path, &excerpt.image)
        .map_err(|e| Error::Pipeline(format!("writing {}: {e}", image_path.display())))?;
    let truth_label = match parsed.record.ground_truth {
        Some(p) if georef.extent.contains(p) => {
            Some(label_for_index(&georef.grid, point_to_cell(&georef, p)?)?)
        }
        _ => None,
    };
    let sidecar = MapSidecar {
        schema_version: SCHEMA_VERSION,
        id: parsed.record.id.clone(),
        image_path: image_path.clone(),
        georef,
        scale_km: grid.cell_km,
        features_drawn: excerpt.features_drawn,
        unresolved_names: excerpt.unresolved_names,
        no_basemap: excerpt.no_basemap,
        truth_label,
    };
    write_json(&maps_dir.join(format!("{}.georef.json", parsed.record.id)), &sidecar)?;
    Ok(sidecar)
}

pub fn cmd_mapgen(config: &PipelineConfig) -> Result<MapgenArtifact> {
    let parsed: ParseArtifact = read_json(&config.output_dir.join("parsed.json"))?;
    let resolved: ResolveArtifact = read_json(&config.output_dir.join("resolved.json"))?;
    let by_id: HashMap<&str, &ResolvedItem> =
        resolved.items.iter().map(|r| (r.id.as_str(), r)).collect();
    let style = config.style()?;
    let fetcher = match &config.mapgen.tile_url {
        Some(url) => Some(TileFetcher::new(url, config.cache_dir.join("tiles"), "georef-pipeline")?),
        None => None,
    };
    let maps_dir = config.output_dir.join("maps");
    let mut items = Vec::new();
    let mut manifest = StageManifest {
        schema_version: SCHEMA_VERSION,
        stage: "mapgen".into(),
        completed: Vec::new(),
        failed: Vec::new(),
    };
    for item in &parsed.items {
        let result = by_id
            .get(item.record.id.as_str())
            .ok_or_else(|| {
                Error::Pipeline(format!("record {}: missing from resolve artifact", item.record.id))
            })
            .and_then(|r| mapgen_item(item, r, config, &style, fetcher.as_ref(), &maps_dir));
        match result {
            Ok(sidecar) => {
                manifest.completed.push(sidecar.id.clone());
                items.push(sidecar);
            }
            Err(e) => manifest.failed.push((item.record.id.clone(), e.to_string())),
        }
    }
    if items.is_empty() {
        manifest.write(&config.output_dir)?;
        return Err(Error::Pipeline("nothing to map: no record produced a map excerpt".into()));
    }
    let artifact = MapgenArtifact { schema_version: SCHEMA_VERSION, items };
    write_json(&config.output_dir.join("maps.json"), &artifact)?;
    manifest.write(&config.output_dir)?;
    Ok(artifact)
}

// --------------------------------------------------------------- georef

#[derive(Debug, Serialize, Deserialize)]
pub struct PredictionArtifact {
    pub schema_version: u32,
    pub template: String,
    pub items: Vec<PredictedItem>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictedItem {
    pub id: String,
    pub prediction: Prediction,
}

enum AnyProvider {
    Mock(MockProvider),
    Http(HttpProvider),
}

impl AnyProvider {
    fn as_dyn(&self) -> &dyn Provider {
        match self {
            Self::Mock(p) => p,
            Self::Http(p) => p,
        }
    }

    fn model_id(&self) -> String {
        match self {
            Self::Mock(_) => "mock-model".into(),
            Self::Http(p) => p.model_id().to_string(),
        }
    }
}

fn build_provider(config: &PipelineConfig) -> Result<AnyProvider> {
    match &config.provider {
        ProviderSection::Mock { fixtures } => Ok(AnyProvider::Mock(load_mock_fixtures(fixtures)?)),
        ProviderSection::Http { config: pc } => Ok(AnyProvider::Http(HttpProvider::new(pc.clone())?)),
    }
}

pub fn cmd_georef(config: &PipelineConfig, refresh_cache: bool) -> Result<PredictionArtifact> {
    let parsed: ParseArtifact = read_json(&config.output_dir.join("parsed.json"))?;
    let maps: MapgenArtifact = read_json(&config.output_dir.join("maps.json"))?;
    let texts: HashMap<&str, &ParsedItem> =
        parsed.items.iter().map(|i| (i.record.id.as_str(), i)).collect();
    let provider = build_provider(config)?;
    let audit = AuditLog::append_to(&config.output_dir.join("audit.jsonl"))?;
    let mut geo = Georeferencer::new(provider.as_dyn(), provider.model_id());
    geo.cache = Some(ResponseCache::new(config.cache_dir.join("responses"))?);
    geo.audit = Some(&audit);
    geo.refresh_cache = refresh_cache;

    let mut manifest = StageManifest {
        schema_version: SCHEMA_VERSION,
        stage: "georef".into(),
        completed: Vec::new(),
        failed: Vec::new(),
    };
    let jobs: Vec<(&MapSidecar, &ParsedItem)> = maps
        .items
        .iter()
        .filter_map(|m| texts.get(m.id.as_str()).map(|t| (m, *t)))
        .collect();
    let workers = config.workers.min(jobs.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: std::sync::Mutex<Vec<(String, Result<Prediction>)>> = std::sync::Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                let Some((sidecar, item)) = jobs.get(i) else { break };
                let result = fs::read(&sidecar.image_path)
                    .map_err(|e| {
                        Error::Pipeline(format!("reading {}: {e}", sidecar.image_path.display()))
                    })
                    .and_then(|image| {
                        let excerpt = crate::mapgen::MapExcerpt {
                            image,
                            georef: sidecar.georef.clone(),
                            features_drawn: sidecar.features_drawn.clone(),
                            unresolved_names: sidecar.unresolved_names.clone(),
                            no_basemap: sidecar.no_basemap,
                        };
                        geo.georeference(&sidecar.id, &item.record.text, &excerpt, config.template)
                    });
                results.lock().unwrap().push((sidecar.id.clone(), result));
            });
        }
    });
    let mut results = results.into_inner().unwrap();
    // Worker completion order is nondeterministic; restore input order.
    let order: HashMap<&str, usize> =
        jobs.iter().enumerate().map(|(i, (m, _))| (m.id.as_str(), i)).collect();
    results.sort_by_key(|(id, _)| order.get(id.as_str()).copied().unwrap_or(usize::MAX));

    let mut items = Vec::new();
    for (id, result) in results {
        match result {
            Ok(prediction) => {
                manifest.completed.push(id.clone());
                items.push(PredictedItem { id, prediction });
            }
            Err(e) => manifest.failed.push((id, e.to_string())),
        }
    }
    let artifact = PredictionArtifact {
        schema_version: SCHEMA_VERSION,
        template: config.template.id().to_string(),
        items,
    };
    write_json(&config.output_dir.join("predictions.json"), &artifact)?;
    manifest.write(&config.output_dir)?;
    Ok(artifact)
}

// ----------------------------------------------------------------- eval

#[derive(Debug, Serialize, Deserialize)]
pub struct EvalArtifact {
    pub schema_version: u32,
    pub reports: Vec<MetricReport>,
    pub scores: Vec<ItemScore>,
}

/// Scores grid predictions against the truth labels recorded in the map
/// sidecars.
pub fn score_predictions(
    maps: &[MapSidecar],
    predictions: &[PredictedItem],
    method: &str,
    mode: UnparseableMode,
) -> Result<(Vec<ItemScore>, Vec<MetricReport>)> {
    let by_id: HashMap<&str, &PredictedItem> =
        predictions.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut items = Vec::new();
    let mut preds = Vec::new();
    for sidecar in maps {
        let Some(label) = &sidecar.truth_label else { continue };
        let truth = index_for_label(&sidecar.georef.grid, label)?;
        items.push(GridEvalItem {
            item_id: sidecar.id.clone(),
            truth,
            scale_km: sidecar.scale_km,
            cols: sidecar.georef.grid.cols,
            rows: sidecar.georef.grid.rows,
        });
        let predicted = by_id
            .get(sidecar.id.as_str())
            .and_then(|p| p.prediction.primary.as_deref())
            .and_then(|l| index_for_label(&sidecar.georef.grid, l).ok());
        preds.push(GridEvalPrediction { item_id: sidecar.id.clone(), predicted });
    }
    if items.is_empty() {
        return Err(Error::Eval("no items carry ground-truth labels to score".into()));
    }
    aggregate_grid_report(&items, &preds, method, mode)
}

pub fn cmd_eval(config: &PipelineConfig) -> Result<EvalArtifact> {
    let maps: MapgenArtifact = read_json(&config.output_dir.join("maps.json"))?;
    let predictions: PredictionArtifact = read_json(&config.output_dir.join("predictions.json"))?;
    let method = format!("LMM_{}", predictions.template);
    let (scores, reports) =
        score_predictions(&maps.items, &predictions.items, &method, config.unparseable_mode)?;
    let artifact = EvalArtifact { schema_version: SCHEMA_VERSION, reports: reports.clone(), scores };
    write_json(&config.output_dir.join("report.json"), &artifact)?;
    fs::write(config.output_dir.join("report.csv"), reports_to_csv(&reports))
        .map_err(|e| Error::Pipeline(format!("writing report.csv: {e}")))?;
    Ok(artifact)
}

// ------------------------------------------------------------------ run

#[derive(Debug)]
pub struct RunSummary {
    pub parsed: usize,
    pub resolved: usize,
    pub maps: usize,
    pub predictions: usize,
    pub reports: Vec<MetricReport>,
    /// Items that fell out at some stage: (stage, id, reason).
    pub failures: Vec<(String, String, String)>,
}

pub fn cmd_run(config: &PipelineConfig, refresh_cache: bool) -> Result<RunSummary> {
    fs::create_dir_all(&config.output_dir)
        .map_err(|e| Error::Pipeline(format!("creating {}: {e}", config.output_dir.display())))?;
    let parsed = cmd_parse(config)?;
    let resolved = cmd_resolve(config)?;
    let maps = cmd_mapgen(config)?;
    let predictions = cmd_georef(config, refresh_cache)?;
    let eval = cmd_eval(config)?;

    let mut failures = Vec::new();
    for stage in ["parse", "resolve", "mapgen", "georef"] {
        let manifest: StageManifest =
            read_json(&config.output_dir.join(format!("{stage}.manifest.json")))?;
        for (id, reason) in manifest.failed {
            failures.push((stage.to_string(), id, reason));
        }
    }
    Ok(RunSummary {
        parsed: parsed.items.len(),
        resolved: resolved.items.len(),
        maps: maps.items.len(),
        predictions: predictions.items.len(),
        reports: eval.reports,
        failures,
    })
}
