//! Distance-error metrics over grid cells and coordinates, accuracy-at-radius,
//! and report aggregation.

use serde::{Deserialize, Serialize};

use crate::geo::{haversine_km, GeoPoint};
use crate::mapgen::CellIndex;
use crate::scalar::GeoScalar;
use crate::{Error, Result};

fn cell_delta<F: GeoScalar>(a: CellIndex, b: CellIndex) -> (F, F) {
    let dx = (i64::from(b.x) - i64::from(a.x)).abs();
    let dy = (i64::from(b.y) - i64::from(a.y)).abs();
    (F::from_i64(dx).unwrap(), F::from_i64(dy).unwrap())
}

/// Euclidean distance between the two cell centroids, scaled to km.
pub fn centroid_distance<F: GeoScalar>(a: CellIndex, b: CellIndex, scale_km: F) -> F {
    let (dx, dy) = cell_delta::<F>(a, b);
    (dx * dx + dy * dy).sqrt() * scale_km
}

/// Worst-case distance: between the two farthest corners of the cells.
/// Same cell still scores sqrt(2) * scale.
pub fn max_distance<F: GeoScalar>(a: CellIndex, b: CellIndex, scale_km: F) -> F {
    let (dx, dy) = cell_delta::<F>(a, b);
    let one = F::one();
    ((dx + one).powi(2) + (dy + one).powi(2)).sqrt() * scale_km
}

/// Best-case distance: minimum separation of the two cell squares.
/// Zero for identical or adjacent cells (including diagonal).
pub fn min_distance<F: GeoScalar>(a: CellIndex, b: CellIndex, scale_km: F) -> F {
    let (dx, dy) = cell_delta::<F>(a, b);
    let one = F::one();
    let mx = (dx - one).abs().min(dx);
    let my = (dy - one).abs().min(dy);
    (mx * mx + my * my).sqrt() * scale_km
}

/// Simple Accuracy Error: great-circle distance in km.
pub fn sae(pred: GeoPoint, truth: GeoPoint) -> f64 {
    haversine_km(pred, truth)
}

/// Radius for accuracy-at-r: one shared radius or a per-item one (acc@scale).
pub enum Radius<'a> {
    Constant(f64),
    PerItem(&'a [f64]),
}

/// Percentage of scores strictly below the radius. `None` when there are
/// no scored items.
pub fn acc_at(scores: &[f64], radius: Radius<'_>) -> Option<f64> {
    if scores.is_empty() {
        return None;
    }
    let hits = match radius {
        Radius::Constant(r) => scores.iter().filter(|&&s| s < r).count(),
        Radius::PerItem(rs) => {
            assert_eq!(rs.len(), scores.len(), "per-item radii must align with scores");
            scores.iter().zip(rs).filter(|(&s, &r)| s < r).count()
        }
    };
    Some(100.0 * hits as f64 / scores.len() as f64)
}

/// Per-item distance errors. Grid metrics absent when the prediction was
/// empty; sae_km absent for grid methods.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ItemScore {
    pub item_id: String,
    pub centroid_km: Option<f64>,
    pub max_km: Option<f64>,
    pub min_km: Option<f64>,
    pub sae_km: Option<f64>,
}

/// One aggregated report row (one Table-1-style line).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub method: String,
    pub average_km: Option<f64>,
    pub acc_1km: Option<f64>,
    pub acc_3km: Option<f64>,
    pub acc_10km: Option<f64>,
    pub acc_scale: Option<f64>,
    pub n_items: usize,
    pub n_unparseable: usize,
}

/// Ground truth for one grid-scored item.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridEvalItem {
    pub item_id: String,
    pub truth: CellIndex,
    pub scale_km: f64,
    pub cols: u32,
    pub rows: u32,
}

/// Predicted primary cell for one item; `None` when unparseable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridEvalPrediction {
    pub item_id: String,
    pub predicted: Option<CellIndex>,
}

/// Ground truth for one coordinate-scored item.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoordEvalItem {
    pub item_id: String,
    pub truth: GeoPoint,
    pub scale_km: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoordEvalPrediction {
    pub item_id: String,
    pub predicted: Option<GeoPoint>,
}

/// How unparseable predictions enter the averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnparseableMode {
    /// Excluded from averages, counted in n_unparseable.
    #[default]
    Exclude,
    /// Imputed with the worst score over the whole grid.
    WorstCase,
}

fn worst_case_cell(item: &GridEvalItem) -> CellIndex {
    // Farthest grid corner from the truth cell.
    let corners = [
        CellIndex::new(1, 1),
        CellIndex::new(item.cols, 1),
        CellIndex::new(1, item.rows),
        CellIndex::new(item.cols, item.rows),
    ];
    corners
        .into_iter()
        .max_by(|a, b| {
            centroid_distance(item.truth, *a, item.scale_km)
                .total_cmp(&centroid_distance(item.truth, *b, item.scale_km))
        })
        .unwrap()
}

/// Scores grid predictions and aggregates min/max/centroid rows.
///
/// Predictions must align with items by id; order may differ.
pub fn aggregate_grid_report(
    items: &[GridEvalItem],
    predictions: &[GridEvalPrediction],
    method: &str,
    mode: UnparseableMode,
) -> Result<(Vec<ItemScore>, Vec<MetricReport>)> {
    let mut scores = Vec::with_capacity(items.len());
    let mut centroid = Vec::new();
    let mut maxd = Vec::new();
    let mut mind = Vec::new();
    let mut scales = Vec::new();
    let mut n_unparseable = 0usize;

    for item in items {
        let pred = predictions
            .iter()
            .find(|p| p.item_id == item.item_id)
            .ok_or_else(|| Error::Eval(format!("no prediction for item {:?}", item.item_id)))?;
        let effective = match (pred.predicted, mode) {
            (Some(c), _) => Some(c),
            (None, UnparseableMode::WorstCase) => {
                n_unparseable += 1;
                Some(worst_case_cell(item))
            }
            (None, UnparseableMode::Exclude) => {
                n_unparseable += 1;
                None
            }
        };
        match effective {
            Some(cell) => {
                let c = centroid_distance(item.truth, cell, item.scale_km);
                let mx = max_distance(item.truth, cell, item.scale_km);
                let mn = min_distance(item.truth, cell, item.scale_km);
                centroid.push(c);
                maxd.push(mx);
                mind.push(mn);
                scales.push(item.scale_km);
                scores.push(ItemScore {
                    item_id: item.item_id.clone(),
                    centroid_km: Some(c),
                    max_km: Some(mx),
                    min_km: Some(mn),
                    sae_km: None,
                });
            }
            None => scores.push(ItemScore {
                item_id: item.item_id.clone(),
                centroid_km: None,
                max_km: None,
                min_km: None,
                sae_km: None,
            }),
        }
    }

    let row = |metric: &str, vals: &[f64]| MetricReport {
        method: format!("{method}_{metric}"),
        average_km: mean(vals),
        acc_1km: acc_at(vals, Radius::Constant(1.0)),
        acc_3km: acc_at(vals, Radius::Constant(3.0)),
        acc_10km: acc_at(vals, Radius::Constant(10.0)),
        acc_scale: acc_at(vals, Radius::PerItem(&scales)),
        n_items: items.len(),
        n_unparseable,
    };
    let reports = vec![row("min", &mind), row("max", &maxd), row("centroid", &centroid)];
    Ok((scores, reports))
}

/// Scores coordinate predictions into a single SAE row.
pub fn aggregate_coord_report(
    items: &[CoordEvalItem],
    predictions: &[CoordEvalPrediction],
    method: &str,
) -> Result<(Vec<ItemScore>, MetricReport)> {
    let mut scores = Vec::with_capacity(items.len());
    let mut errors = Vec::new();
    let mut scales = Vec::new();
    let mut n_unparseable = 0usize;
    for item in items {
        let pred = predictions
            .iter()
            .find(|p| p.item_id == item.item_id)
            .ok_or_else(|| Error::Eval(format!("no prediction for item {:?}", item.item_id)))?;
        let sae_km = pred.predicted.map(|p| sae(p, item.truth));
        match sae_km {
            Some(e) => {
                errors.push(e);
                scales.push(item.scale_km);
            }
            None => n_unparseable += 1,
        }
        scores.push(ItemScore {
            item_id: item.item_id.clone(),
            centroid_km: None,
            max_km: None,
            min_km: None,
            sae_km,
        });
    }
    let report = MetricReport {
        method: method.to_string(),
        average_km: mean(&errors),
        acc_1km: acc_at(&errors, Radius::Constant(1.0)),
        acc_3km: acc_at(&errors, Radius::Constant(3.0)),
        acc_10km: acc_at(&errors, Radius::Constant(10.0)),
        acc_scale: acc_at(&errors, Radius::PerItem(&scales)),
        n_items: items.len(),
        n_unparseable,
    };
    Ok((scores, report))
}

fn mean(vals: &[f64]) -> Option<f64> {
    if vals.is_empty() {
        None
    } else {
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

/// Serializes reports as CSV mirroring the Table 1 columns. Distances are
/// rounded to 2 decimals here; the JSON output keeps full precision.
pub fn reports_to_csv(reports: &[MetricReport]) -> String {
    let mut out = String::from("method,average_km,acc_1km,acc_3km,acc_10km,acc_scale,n_items,n_unparseable\n");
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_default();
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.method,
            fmt(r.average_km),
            fmt(r.acc_1km),
            fmt(r.acc_3km),
            fmt(r.acc_10km),
            fmt(r.acc_scale),
            r.n_items,
            r.n_unparseable
        ));
    }
    out
}
