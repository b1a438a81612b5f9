//! Collection-record and evaluation-dataset ingestion, validation and
//! filtering.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::geo::GeoPoint;
use crate::mapgen::{index_for_label, point_to_cell, MapGeoreference};
use crate::{Error, Result};

/// A raw collection record as imported from GBIF-style sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionRecord {
    pub id: String,
    pub text: String,
    pub country: String,
    pub region: String,
    pub ground_truth: Option<GeoPoint>,
}

impl CollectionRecord {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::Record("record id must be non-empty".into()));
        }
        if self.text.is_empty() {
            return Err(Error::Record(format!("record {}: text must be non-empty", self.id)));
        }
        if let Some(p) = self.ground_truth {
            if !p.is_valid() {
                return Err(Error::Record(format!(
                    "record {}: coordinates out of range ({}, {})",
                    self.id, p.lat, p.lon
                )));
            }
        }
        Ok(())
    }
}

/// One evaluation item: a record plus its rendered gridded map, truth
/// label, and grid scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetItem {
    pub record: CollectionRecord,
    pub map_path: PathBuf,
    pub map_meta: MapGeoreference,
    pub label: String,
    pub scale_km: f64,
}

/// Serialized shape of the dataset file.
#[derive(Debug, Serialize, Deserialize)]
struct DatasetFile {
    items: Vec<DatasetItemRaw>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetItemRaw {
    id: String,
    text: String,
    country: String,
    region: String,
    map_path: String,
    grid: MapGeoreference,
    location: GeoPoint,
    label: String,
    scale_km: f64,
}

impl From<DatasetItem> for DatasetItemRaw {
    fn from(item: DatasetItem) -> Self {
        Self {
            id: item.record.id,
            text: item.record.text,
            country: item.record.country,
            region: item.record.region,
            map_path: item.map_path.to_string_lossy().into_owned(),
            grid: item.map_meta,
            location: item.record.ground_truth.expect("dataset items carry ground truth"),
            label: item.label,
            scale_km: item.scale_km,
        }
    }
}

impl From<DatasetItemRaw> for DatasetItem {
    fn from(raw: DatasetItemRaw) -> Self {
        Self {
            record: CollectionRecord {
                id: raw.id,
                text: raw.text,
                country: raw.country,
                region: raw.region,
                ground_truth: Some(raw.location),
            },
            map_path: PathBuf::from(raw.map_path),
            map_meta: raw.grid,
            label: raw.label,
            scale_km: raw.scale_km,
        }
    }
}

/// Per-item validation outcome paired with the item.
#[derive(Debug)]
pub struct LoadedDataset {
    pub items: Vec<DatasetItem>,
    /// (item id, violations) for items that failed validation. Those
    /// items are still present in `items` so callers can inspect them.
    pub failures: Vec<(String, Vec<String>)>,
}

/// Loads the dataset JSON file. Malformed JSON is fatal; per-item
/// invariant violations are collected, never aborting the batch.
pub fn load_dataset(path: &Path) -> Result<LoadedDataset> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Record(format!("reading {}: {e}", path.display())))?;
    let file: DatasetFile = serde_json::from_str(&text)
        .map_err(|e| Error::Record(format!("parsing {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut items = Vec::new();
    let mut failures = Vec::new();
    for raw in file.items {
        let mut item: DatasetItem = raw.into();
        // Resolve map paths relative to the dataset file.
        if !item.map_path.as_os_str().is_empty() && item.map_path.is_relative() {
            item.map_path = base.join(&item.map_path);
        }
        let report = validate_item(&item);
        if !report.is_empty() {
            failures.push((item.record.id.clone(), report));
        }
        items.push(item);
    }
    Ok(LoadedDataset { items, failures })
}

pub fn save_dataset(path: &Path, items: &[DatasetItem]) -> Result<()> {
    let file = DatasetFile {
        items: items.iter().cloned().map(DatasetItemRaw::from).collect(),
    };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::Record(format!("serializing dataset: {e}")))?;
    fs::write(path, json).map_err(|e| Error::Record(format!("writing {}: {e}", path.display())))
}

/// Checks every DatasetItem invariant, returning the list of violations
/// (empty when the item is valid). Never throws: unreadable images are
/// reported as violations.
pub fn validate_item(item: &DatasetItem) -> Vec<String> {
    let mut report = Vec::new();
    if let Err(e) = item.record.validate() {
        report.push(e.to_string());
    }
    if !(item.scale_km > 0.0) {
        report.push("scale must be positive".into());
    }
    let cell = match index_for_label(&item.map_meta.grid, &item.label) {
        Ok(c) => Some(c),
        Err(_) => {
            report.push(format!("label outside grid: {:?}", item.label));
            None
        }
    };
    match item.record.ground_truth {
        None => report.push("ground truth missing".into()),
        Some(p) => {
            if !item.map_meta.extent.contains(p) {
                report.push("location outside extent".into());
            } else if let (Some(expected), Ok(actual)) = (cell, point_to_cell(&item.map_meta, p)) {
                if expected != actual {
                    report.push(format!(
                        "label {:?} does not contain ground truth (point is in {},{})",
                        item.label, actual.x, actual.y
                    ));
                }
            }
        }
    }
    if !item.map_path.as_os_str().is_empty() {
        match fs::read(&item.map_path) {
            Err(e) => report.push(format!("map image unreadable: {e}")),
            Ok(bytes) => {
                if image::load_from_memory(&bytes).is_err() {
                    report.push("map image undecodable".into());
                }
            }
        }
    }
    report
}

/// Retains records whose trimmed text is at least `min_length` Unicode
/// scalar values long. Order is preserved.
pub fn filter_records(records: &[CollectionRecord], min_length: usize) -> Vec<CollectionRecord> {
    records
        .iter()
        .filter(|r| r.text.trim().chars().count() >= min_length)
        .cloned()
        .collect()
}

/// Imports raw records from CSV with header `id,text,country,region,lat,lon`.
/// Empty lat/lon cells yield records without ground truth.
pub fn import_csv(path: &Path) -> Result<Vec<CollectionRecord>> {
    #[derive(Deserialize)]
    struct Row {
        id: String,
        text: String,
        country: String,
        region: String,
        lat: Option<f64>,
        lon: Option<f64>,
    }
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Record(format!("opening {}: {e}", path.display())))?;
    let mut records = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::Record(format!("{} row {}: {e}", path.display(), i + 2)))?;
        let ground_truth = match (row.lat, row.lon) {
            (Some(lat), Some(lon)) => Some(GeoPoint::new(lat, lon)),
            _ => None,
        };
        let record = CollectionRecord {
            id: row.id,
            text: row.text,
            country: row.country,
            region: row.region,
            ground_truth,
        };
        record.validate()?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapgen::{GridSpec, MapExtent, PROJECTION_ID};

    fn rec(id: &str, text: &str) -> CollectionRecord {
        CollectionRecord {
            id: id.into(),
            text: text.into(),
            country: "New Zealand".into(),
            region: "Wellington".into(),
            ground_truth: None,
        }
    }

    fn fixture_meta() -> MapGeoreference {
        MapGeoreference {
            extent: MapExtent::new(-41.40, 175.10, -41.30, 175.23).unwrap(),
            grid: GridSpec::new(10, 10, 1.0).unwrap(),
            image_width_px: 100,
            image_height_px: 100,
            projection: PROJECTION_ID.into(),
        }
    }

    fn fixture_item() -> DatasetItem {
        let meta = fixture_meta();
        let truth = GeoPoint::new(-41.35, 175.16);
        let cell = point_to_cell(&meta, truth).unwrap();
        let label = crate::mapgen::label_for_index(&meta.grid, cell).unwrap();
        DatasetItem {
            record: CollectionRecord { ground_truth: Some(truth), ..rec("x1", "Near the lake.") },
            map_path: PathBuf::new(), // no image on disk; image checks skipped
            map_meta: meta,
            label,
            scale_km: 1.0,
        }
    }

    #[test]
    fn filter_by_length() {
        let records = vec![
            rec("a", &"x".repeat(10)),
            rec("b", &"y".repeat(60)),
            rec("c", &"z".repeat(120)),
        ];
        let kept = filter_records(&records, 60);
        assert_eq!(kept.len(), 2);
        assert_eq!(kept[0].id, "b");
        // 59 chars excluded at min_length 60.
        assert!(filter_records(&[rec("d", &"q".repeat(59))], 60).is_empty());
        // min_length 0 is the identity.
        assert_eq!(filter_records(&records, 0), records);
        // Idempotent.
        assert_eq!(filter_records(&kept, 60), kept);
        // Trimmed before counting.
        let padded = rec("e", &format!("   {}   ", "w".repeat(59)));
        assert!(filter_records(&[padded], 60).is_empty());
    }

    #[test]
    fn valid_item_passes() {
        assert!(validate_item(&fixture_item()).is_empty());
    }

    #[test]
    fn zero_scale_flagged() {
        let mut item = fixture_item();
        item.scale_km = 0.0;
        let report = validate_item(&item);
        assert!(report.iter().any(|v| v.contains("scale must be positive")), "{report:?}");
    }

    #[test]
    fn label_outside_grid_flagged() {
        let mut item = fixture_item();
        item.label = "Z99".into();
        let report = validate_item(&item);
        assert!(report.iter().any(|v| v.contains("label outside grid")), "{report:?}");
    }

    #[test]
    fn location_outside_extent_flagged() {
        let mut item = fixture_item();
        // Offset a valid location by one degree.
        let p = item.record.ground_truth.unwrap();
        item.record.ground_truth = Some(GeoPoint::new(p.lat + 1.0, p.lon));
        let report = validate_item(&item);
        assert!(report.iter().any(|v| v.contains("location outside extent")), "{report:?}");
    }

    #[test]
    fn wrong_label_flagged() {
        let mut item = fixture_item();
        item.label = if item.label == "A1" { "B2".into() } else { "A1".into() };
        let report = validate_item(&item);
        assert!(report.iter().any(|v| v.contains("does not contain ground truth")), "{report:?}");
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dataset.json");
        let items = vec![fixture_item()];
        save_dataset(&path, &items).unwrap();
        let loaded = load_dataset(&path).unwrap();
        assert_eq!(loaded.items, items);
        assert!(loaded.failures.is_empty());
        // Round-trip again: structurally identical.
        save_dataset(&path, &loaded.items).unwrap();
        assert_eq!(load_dataset(&path).unwrap().items, items);
    }

    #[test]
    fn empty_dataset_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.json");
        fs::write(&path, r#"{"items":[]}"#).unwrap();
        let loaded = load_dataset(&path).unwrap();
        assert!(loaded.items.is_empty());
        assert!(loaded.failures.is_empty());
    }

    #[test]
    fn malformed_dataset_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        fs::write(&path, "{not json").unwrap();
        assert!(load_dataset(&path).is_err());
    }

    #[test]
    fn invalid_item_collected_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dataset.json");
        let mut bad = fixture_item();
        let p = bad.record.ground_truth.unwrap();
        bad.record.ground_truth = Some(GeoPoint::new(p.lat + 1.0, p.lon));
        save_dataset(&path, &[fixture_item(), bad]).unwrap();
        let loaded = load_dataset(&path).unwrap();
        assert_eq!(loaded.items.len(), 2);
        assert_eq!(loaded.failures.len(), 1);
        assert!(loaded.failures[0].1.iter().any(|v| v.contains("location outside extent")));
    }

    #[test]
    fn csv_import() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.csv");
        fs::write(
            &path,
            "id,text,country,region,lat,lon\n\
             r1,\"Ca 2km north of Puketi.\",New Zealand,Northland,-35.23,173.74\n\
             r2,\"No coordinates here\",New Zealand,Otago,,\n",
        )
        .unwrap();
        let records = import_csv(&path).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].ground_truth, Some(GeoPoint::new(-35.23, 173.74)));
        assert_eq!(records[1].ground_truth, None);
    }
}
