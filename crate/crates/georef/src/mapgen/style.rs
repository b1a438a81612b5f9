//! Rendering style: JSON file mapping geometry kind to stroke, fill and
//! label settings.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_STYLE: &str = include_str!("../../assets/style.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStyle {
    /// RGB stroke color.
    pub stroke: [u8; 3],
    pub stroke_width: u32,
    /// RGBA fill; alpha < 255 blends over the basemap.
    pub fill: Option<[u8; 4]>,
    /// Integer scale of the built-in 5x7 font.
    pub label_size: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridStyle {
    pub color: [u8; 4],
    pub label_size: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Style {
    pub background: [u8; 3],
    pub polygon: LayerStyle,
    pub line: LayerStyle,
    pub point: LayerStyle,
    pub grid: GridStyle,
    /// Pixel spacing of repeated labels along linear features.
    pub line_label_interval_px: u32,
}

impl Default for Style {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_STYLE).expect("shipped style is well-formed")
    }
}

impl Style {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Render(format!("reading style {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Render(format!("invalid style file: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_style_parses() {
        let s = Style::default();
        assert!(s.polygon.fill.is_some());
        assert!(s.grid.label_size >= 1);
    }
}
