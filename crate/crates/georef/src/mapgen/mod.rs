//! Map excerpt generation: extent planning, grid construction, and raster
//! rendering with a labeled grid overlay.

pub mod extent;
pub mod font;
pub mod grid;
pub mod render;
pub mod style;
pub mod tiles;

pub use extent::{compute_extent, plan_extent, ExtentOptions, FeatureMap};
pub use grid::{
    cell_centroid, index_for_label, label_for_index, make_grid, parse_label, point_to_cell,
    CellIndex, GridSpec, LabelScheme, MapExtent, MapGeoreference, PROJECTION_ID,
};
pub use render::{render_map, Basemap, MapExcerpt};
pub use style::Style;
pub use tiles::TileFetcher;
