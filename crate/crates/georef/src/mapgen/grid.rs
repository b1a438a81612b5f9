//! The labeled square grid: extent geometry, cell indexing, the
//! spreadsheet labeling scheme and cell/coordinate mappings.

use serde::{Deserialize, Serialize};

use crate::geo::{haversine_km, mercator_project, mercator_unproject, GeoPoint, MERCATOR_MAX_LAT};
use crate::{Error, Result};

/// Geographic extent of one map excerpt. Never crosses the antimeridian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapExtent {
    pub min_lat: f64,
    pub min_lon: f64,
    pub max_lat: f64,
    pub max_lon: f64,
}

impl MapExtent {
    pub fn new(min_lat: f64, min_lon: f64, max_lat: f64, max_lon: f64) -> Result<Self> {
        if !(min_lat < max_lat && min_lon < max_lon) {
            return Err(Error::Extent(format!(
                "degenerate extent: [{min_lat},{min_lon}]..[{max_lat},{max_lon}]"
            )));
        }
        if min_lon < -180.0 || max_lon > 180.0 {
            return Err(Error::Extent(
                "extent crosses the antimeridian; not supported".into(),
            ));
        }
        if min_lat < -MERCATOR_MAX_LAT || max_lat > MERCATOR_MAX_LAT {
            return Err(Error::Extent("extent outside Web Mercator latitude range".into()));
        }
        Ok(Self { min_lat, min_lon, max_lat, max_lon })
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        p.lat >= self.min_lat && p.lat <= self.max_lat && p.lon >= self.min_lon && p.lon <= self.max_lon
    }

    pub fn center(&self) -> GeoPoint {
        GeoPoint::new((self.min_lat + self.max_lat) / 2.0, (self.min_lon + self.max_lon) / 2.0)
    }

    /// Projected corners (min_x, min_y, max_x, max_y) in Web Mercator metres.
    pub fn projected(&self) -> (f64, f64, f64, f64) {
        let (min_x, min_y) = mercator_project(GeoPoint::new(self.min_lat, self.min_lon));
        let (max_x, max_y) = mercator_project(GeoPoint::new(self.max_lat, self.max_lon));
        (min_x, min_y, max_x, max_y)
    }

    /// Geodesic width along the central parallel, km.
    pub fn width_km(&self) -> f64 {
        let lat = self.center().lat;
        haversine_km(GeoPoint::new(lat, self.min_lon), GeoPoint::new(lat, self.max_lon))
    }
}

/// Maximum grid columns: labels run A..ZZ.
pub const MAX_COLS: u32 = 702;
/// Maximum grid rows: labels carry a two-digit row number.
pub const MAX_ROWS: u32 = 99;

/// Grid geometry over a map excerpt. Cells are square in Web Mercator
/// space; `cell_km` is the geodesic side length measured along the
/// extent's central parallel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub cols: u32,
    pub rows: u32,
    pub cell_km: f64,
    pub labeling: LabelScheme,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LabelScheme {
    /// Columns A, B, .., Z, AA, ..; rows 1..rows; label = column + row ("C7").
    #[default]
    Spreadsheet,
}

/// One grid cell, 1-based: x from the west edge, y from the north edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellIndex {
    pub x: u32,
    pub y: u32,
}

impl CellIndex {
    pub fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }
}

impl GridSpec {
    pub fn new(cols: u32, rows: u32, cell_km: f64) -> Result<Self> {
        if cols == 0 || cols > MAX_COLS || rows == 0 || rows > MAX_ROWS {
            return Err(Error::Grid(format!("grid dimensions {cols}x{rows} out of range")));
        }
        if !(cell_km > 0.0) {
            return Err(Error::Grid("cell_km must be positive".into()));
        }
        Ok(Self { cols, rows, cell_km, labeling: LabelScheme::Spreadsheet })
    }

    pub fn contains(&self, cell: CellIndex) -> bool {
        (1..=self.cols).contains(&cell.x) && (1..=self.rows).contains(&cell.y)
    }
}

/// Column number (1-based) to bijective base-26 letters: 1 -> "A", 27 -> "AA".
fn column_letters(mut col: u32) -> String {
    let mut out = Vec::new();
    while col > 0 {
        let rem = (col - 1) % 26;
        out.push((b'A' + rem as u8) as char);
        col = (col - 1) / 26;
    }
    out.iter().rev().collect()
}

fn letters_to_column(letters: &str) -> Option<u32> {
    if letters.is_empty() {
        return None;
    }
    let mut col: u32 = 0;
    for c in letters.chars() {
        if !c.is_ascii_uppercase() {
            return None;
        }
        col = col.checked_mul(26)?.checked_add((c as u32) - ('A' as u32) + 1)?;
    }
    Some(col)
}

pub fn label_for_index(grid: &GridSpec, cell: CellIndex) -> Result<String> {
    if !grid.contains(cell) {
        return Err(Error::Grid(format!(
            "cell ({},{}) outside {}x{} grid",
            cell.x, cell.y, grid.cols, grid.rows
        )));
    }
    Ok(format!("{}{}", column_letters(cell.x), cell.y))
}

pub fn index_for_label(grid: &GridSpec, label: &str) -> Result<CellIndex> {
    let cell = parse_label(label)
        .ok_or_else(|| Error::Grid(format!("malformed cell label {label:?}")))?;
    if !grid.contains(cell) {
        return Err(Error::Grid(format!(
            "label {label:?} outside {}x{} grid",
            grid.cols, grid.rows
        )));
    }
    Ok(cell)
}

/// Parses a label into a cell index without bounds checking.
pub fn parse_label(label: &str) -> Option<CellIndex> {
    let split = label.find(|c: char| c.is_ascii_digit())?;
    let (letters, digits) = label.split_at(split);
    let x = letters_to_column(letters)?;
    let y: u32 = digits.parse().ok()?;
    if y == 0 {
        return None;
    }
    Some(CellIndex::new(x, y))
}

/// Georeference metadata for one rendered map excerpt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapGeoreference {
    pub extent: MapExtent,
    pub grid: GridSpec,
    pub image_width_px: u32,
    pub image_height_px: u32,
    pub projection: String,
}

pub const PROJECTION_ID: &str = "web-mercator";

impl MapGeoreference {
    /// Projected side length of one cell in Mercator metres.
    pub fn cell_side_m(&self) -> f64 {
        let (min_x, _, max_x, _) = self.extent.projected();
        (max_x - min_x) / self.grid.cols as f64
    }
}

/// Builds the grid for an extent, expanding the extent eastward and
/// southward so that `cols x rows` square cells tile it exactly.
///
/// Returns the expanded extent alongside the grid.
pub fn make_grid(
    extent: &MapExtent,
    target_cell_km: f64,
    max_cells_per_axis: u32,
) -> Result<(MapExtent, GridSpec)> {
    if !(target_cell_km > 0.0) {
        return Err(Error::Grid("target_cell_km must be positive".into()));
    }
    if max_cells_per_axis == 0 {
        return Err(Error::Grid("max_cells_per_axis must be positive".into()));
    }
    let (min_x, min_y, max_x, max_y) = extent.projected();
    let width_m = max_x - min_x;
    let height_m = max_y - min_y;
    let width_km = extent.width_km();
    // Mercator metres per geodesic kilometre at the central parallel.
    let m_per_km = width_m / width_km;
    let mut side_m = target_cell_km * m_per_km;
    let needed = (width_m / side_m).max(height_m / side_m).ceil() as u32;
    if needed > max_cells_per_axis {
        side_m = width_m.max(height_m) / max_cells_per_axis as f64;
    }
    let cols = (width_m / side_m).ceil().max(1.0) as u32;
    let rows = (height_m / side_m).ceil().max(1.0) as u32;
    let new_max_x = min_x + cols as f64 * side_m;
    let new_min_y = max_y - rows as f64 * side_m;
    let east = mercator_unproject(new_max_x, max_y);
    let south = mercator_unproject(min_x, new_min_y);
    let expanded = MapExtent::new(south.lat, extent.min_lon, extent.max_lat, east.lon)?;
    let cell_km = expanded.width_km() / cols as f64;
    if cell_km < 0.01 {
        return Err(Error::Grid(format!("degenerate extent: cell_km {cell_km} < 0.01")));
    }
    let grid = GridSpec::new(cols, rows, cell_km)?;
    Ok((expanded, grid))
}

/// Maps a point to the cell containing it. Points exactly on an interior
/// gridline belong to the cell east/south of the line.
pub fn point_to_cell(georef: &MapGeoreference, p: GeoPoint) -> Result<CellIndex> {
    if !georef.extent.contains(p) {
        return Err(Error::Grid(format!(
            "point ({}, {}) outside map extent",
            p.lat, p.lon
        )));
    }
    let (min_x, _, max_x, max_y) = georef.extent.projected();
    let side = (max_x - min_x) / georef.grid.cols as f64;
    let (px, py) = mercator_project(p);
    let x = ((px - min_x) / side).floor() as i64 + 1;
    let y = ((max_y - py) / side).floor() as i64 + 1;
    let x = x.clamp(1, georef.grid.cols as i64) as u32;
    let y = y.clamp(1, georef.grid.rows as i64) as u32;
    Ok(CellIndex::new(x, y))
}

/// Geographic centre of a cell (inverse projection of the projected-space
/// cell centre).
pub fn cell_centroid(georef: &MapGeoreference, cell: CellIndex) -> Result<GeoPoint> {
    if !georef.grid.contains(cell) {
        return Err(Error::Grid(format!(
            "cell ({},{}) outside {}x{} grid",
            cell.x, cell.y, georef.grid.cols, georef.grid.rows
        )));
    }
    let (min_x, _, max_x, max_y) = georef.extent.projected();
    let side = (max_x - min_x) / georef.grid.cols as f64;
    let cx = min_x + (cell.x as f64 - 0.5) * side;
    let cy = max_y - (cell.y as f64 - 0.5) * side;
    Ok(mercator_unproject(cx, cy))
}
