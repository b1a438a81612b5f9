//! Raster rendering of map excerpts: basemap compositing, styled feature
//! overlays, and the labeled grid.

use std::collections::HashMap;

use image::{Rgba, RgbaImage};

use crate::gazetteer::Geometry;
use crate::geo::{mercator_project, GeoPoint};
use crate::{Error, Result};

use super::extent::FeatureMap;
use super::font;
use super::grid::{label_for_index, CellIndex, MapGeoreference};
use super::style::{LayerStyle, Style};
use super::tiles::{zoom_for_extent, TileFetcher, TILE_SIZE};

/// A rendered, georeferenced map excerpt.
#[derive(Debug, Clone)]
pub struct MapExcerpt {
    /// PNG-encoded image.
    pub image: Vec<u8>,
    pub georef: MapGeoreference,
    pub features_drawn: Vec<String>,
    pub unresolved_names: Vec<String>,
    /// Set when the base tiles were unavailable and the excerpt was
    /// rendered on the blank basemap instead.
    pub no_basemap: bool,
}

pub enum Basemap<'a> {
    /// Offline flat-color basemap; byte-deterministic.
    Blank,
    Tiles(&'a TileFetcher),
}

struct PixelMapper {
    min_x: f64,
    max_y: f64,
    px_per_m: f64,
}

impl PixelMapper {
    fn new(georef: &MapGeoreference) -> Self {
        let (min_x, _, max_x, max_y) = georef.extent.projected();
        Self {
            min_x,
            max_y,
            px_per_m: f64::from(georef.image_width_px) / (max_x - min_x),
        }
    }

    fn to_px(&self, p: GeoPoint) -> (f64, f64) {
        let (x, y) = mercator_project(p);
        ((x - self.min_x) * self.px_per_m, (self.max_y - y) * self.px_per_m)
    }
}

fn blend(img: &mut RgbaImage, x: i64, y: i64, color: [u8; 4]) {
    if x < 0 || y < 0 || x >= i64::from(img.width()) || y >= i64::from(img.height()) {
        return;
    }
    let px = img.get_pixel_mut(x as u32, y as u32);
    let a = f64::from(color[3]) / 255.0;
    for i in 0..3 {
        px.0[i] = (f64::from(color[i]) * a + f64::from(px.0[i]) * (1.0 - a)).round() as u8;
    }
    px.0[3] = 255;
}

fn draw_disc(img: &mut RgbaImage, cx: f64, cy: f64, r: f64, color: [u8; 4]) {
    let r_i = r.ceil() as i64;
    for dy in -r_i..=r_i {
        for dx in -r_i..=r_i {
            if (dx * dx + dy * dy) as f64 <= r * r {
                blend(img, cx.round() as i64 + dx, cy.round() as i64 + dy, color);
            }
        }
    }
}

fn draw_line_px(img: &mut RgbaImage, a: (f64, f64), b: (f64, f64), width: u32, color: [u8; 4]) {
    let (x0, y0) = a;
    let (x1, y1) = b;
    let steps = ((x1 - x0).abs().max((y1 - y0).abs()).ceil() as usize).max(1);
    let half = f64::from(width) / 2.0;
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let x = x0 + (x1 - x0) * t;
        let y = y0 + (y1 - y0) * t;
        if width <= 1 {
            blend(img, x.round() as i64, y.round() as i64, color);
        } else {
            draw_disc(img, x, y, half, color);
        }
    }
}

fn fill_polygon_px(img: &mut RgbaImage, rings: &[Vec<(f64, f64)>], color: [u8; 4]) {
    let min_y = rings
        .iter()
        .flatten()
        .map(|p| p.1)
        .fold(f64::INFINITY, f64::min)
        .floor()
        .max(0.0) as i64;
    let max_y = rings
        .iter()
        .flatten()
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max)
        .ceil()
        .min(f64::from(img.height())) as i64;
    for y in min_y..max_y {
        let scan = y as f64 + 0.5;
        let mut crossings: Vec<f64> = Vec::new();
        for ring in rings {
            for w in ring.windows(2) {
                let (ax, ay) = w[0];
                let (bx, by) = w[1];
                if (ay > scan) != (by > scan) {
                    crossings.push(ax + (scan - ay) / (by - ay) * (bx - ax));
                }
            }
        }
        crossings.sort_by(f64::total_cmp);
        for pair in crossings.chunks(2) {
            if let [start, end] = pair {
                let x0 = start.ceil().max(0.0) as i64;
                let x1 = end.floor().min(f64::from(img.width())) as i64;
                for x in x0..x1 {
                    blend(img, x, y, color);
                }
            }
        }
    }
}

fn draw_label(img: &mut RgbaImage, text: &str, x: i64, y: i64, scale: u32, color: [u8; 4]) {
    let text = text.to_uppercase();
    // Halo for legibility against any basemap.
    for (dx, dy) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
        font::draw_text(&text, x + dx, y + dy, scale, &mut |px, py| {
            blend(img, px, py, [255, 255, 255, 230]);
        });
    }
    font::draw_text(&text, x, y, scale, &mut |px, py| blend(img, px, py, color));
}

fn render_basemap(georef: &MapGeoreference, style: &Style, basemap: &Basemap<'_>) -> (RgbaImage, bool) {
    let (w, h) = (georef.image_width_px, georef.image_height_px);
    let bg = Rgba([style.background[0], style.background[1], style.background[2], 255]);
    let blank = RgbaImage::from_pixel(w, h, bg);
    match basemap {
        Basemap::Blank => (blank, false),
        Basemap::Tiles(fetcher) => match composite_tiles(georef, fetcher) {
            Ok(img) => (img, false),
            Err(e) => {
                eprintln!("warning: basemap unavailable ({e}); rendering on blank basemap");
                (blank, true)
            }
        },
    }
}

fn composite_tiles(georef: &MapGeoreference, fetcher: &TileFetcher) -> Result<RgbaImage> {
    let (min_x, min_y, max_x, max_y) = georef.extent.projected();
    let world_m = 2.0 * std::f64::consts::PI * 6378137.0;
    let frac = (max_x - min_x) / world_m;
    let zoom = zoom_for_extent(frac, georef.image_width_px);
    let world_px = f64::from(TILE_SIZE) * 2f64.powi(i32::from(zoom));
    let to_global = |mx: f64, my: f64| {
        (
            (mx / world_m + 0.5) * world_px,
            (0.5 - my / world_m) * world_px,
        )
    };
    let (gx0, gy0) = to_global(min_x, max_y);
    let (gx1, gy1) = to_global(max_x, min_y);
    let mut tiles: HashMap<(u64, u64), RgbaImage> = HashMap::new();
    let n = 1u64 << zoom;
    let mut img = RgbaImage::new(georef.image_width_px, georef.image_height_px);
    for py in 0..georef.image_height_px {
        for px in 0..georef.image_width_px {
            let gx = gx0 + (gx1 - gx0) * (f64::from(px) + 0.5) / f64::from(georef.image_width_px);
            let gy = gy0 + (gy1 - gy0) * (f64::from(py) + 0.5) / f64::from(georef.image_height_px);
            let tx = ((gx / f64::from(TILE_SIZE)).floor() as i64).clamp(0, n as i64 - 1) as u64;
            let ty = ((gy / f64::from(TILE_SIZE)).floor() as i64).clamp(0, n as i64 - 1) as u64;
            if !tiles.contains_key(&(tx, ty)) {
                let tile = fetcher.fetch(zoom, tx, ty)?;
                tiles.insert((tx, ty), tile);
            }
            let tile = &tiles[&(tx, ty)];
            let ox = ((gx - tx as f64 * f64::from(TILE_SIZE)) as u32).min(TILE_SIZE - 1);
            let oy = ((gy - ty as f64 * f64::from(TILE_SIZE)) as u32).min(TILE_SIZE - 1);
            img.put_pixel(px, py, *tile.get_pixel(ox, oy));
        }
    }
    Ok(img)
}

fn stroke_color(s: &LayerStyle) -> [u8; 4] {
    [s.stroke[0], s.stroke[1], s.stroke[2], 255]
}

fn draw_geometry(
    img: &mut RgbaImage,
    mapper: &PixelMapper,
    name: &str,
    geom: &Geometry,
    style: &Style,
) {
    match geom {
        Geometry::Point { coord } => {
            let (x, y) = mapper.to_px(*coord);
            let ls = &style.point;
            let fill = ls.fill.unwrap_or(stroke_color(ls));
            draw_disc(img, x, y, f64::from(ls.stroke_width), fill);
            draw_label(
                img,
                name,
                x.round() as i64 + i64::from(ls.stroke_width) + 3,
                y.round() as i64 - i64::from(font::text_height(ls.label_size)) / 2,
                ls.label_size,
                stroke_color(ls),
            );
        }
        Geometry::Line { coords } => {
            let ls = &style.line;
            let px: Vec<(f64, f64)> = coords.iter().map(|p| mapper.to_px(*p)).collect();
            for w in px.windows(2) {
                draw_line_px(img, w[0], w[1], ls.stroke_width, stroke_color(ls));
            }
            // Repeated labels along the line so continuity survives
            // junctions.
            let mut acc = 0.0;
            let mut next_label = f64::from(style.line_label_interval_px) / 2.0;
            for w in px.windows(2) {
                let seg = ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt();
                while acc + seg >= next_label {
                    let t = (next_label - acc) / seg;
                    let x = w[0].0 + (w[1].0 - w[0].0) * t;
                    let y = w[0].1 + (w[1].1 - w[0].1) * t;
                    draw_label(
                        img,
                        name,
                        x.round() as i64 + 4,
                        y.round() as i64 + 4,
                        ls.label_size,
                        stroke_color(ls),
                    );
                    next_label += f64::from(style.line_label_interval_px);
                }
                acc += seg;
            }
        }
        Geometry::Polygon { rings } => {
            let ls = &style.polygon;
            let px_rings: Vec<Vec<(f64, f64)>> = rings
                .iter()
                .map(|r| r.iter().map(|p| mapper.to_px(*p)).collect())
                .collect();
            if let Some(fill) = ls.fill {
                fill_polygon_px(img, &px_rings, fill);
            }
            for ring in &px_rings {
                for w in ring.windows(2) {
                    draw_line_px(img, w[0], w[1], ls.stroke_width, stroke_color(ls));
                }
            }
            if let Some(outer) = px_rings.first() {
                let n = outer.len().max(1) as f64;
                let cx = outer.iter().map(|p| p.0).sum::<f64>() / n;
                let cy = outer.iter().map(|p| p.1).sum::<f64>() / n;
                let tw = i64::from(font::text_width(name, ls.label_size));
                draw_label(img, name, cx.round() as i64 - tw / 2, cy.round() as i64, ls.label_size, stroke_color(ls));
            }
        }
        Geometry::Multi { parts } => {
            for part in parts {
                draw_geometry(img, mapper, name, part, style);
            }
        }
    }
}

fn draw_grid(img: &mut RgbaImage, georef: &MapGeoreference, style: &Style) -> Result<()> {
    let grid = &georef.grid;
    let w = f64::from(georef.image_width_px);
    let h = f64::from(georef.image_height_px);
    let cell_w = w / f64::from(grid.cols);
    let cell_h = h / f64::from(grid.rows);
    for c in 0..=grid.cols {
        let x = f64::from(c) * cell_w;
        draw_line_px(img, (x, 0.0), (x, h), 1, style.grid.color);
    }
    for r in 0..=grid.rows {
        let y = f64::from(r) * cell_h;
        draw_line_px(img, (0.0, y), (w, y), 1, style.grid.color);
    }
    let rgb = [style.grid.color[0], style.grid.color[1], style.grid.color[2], 255];
    for y in 1..=grid.rows {
        for x in 1..=grid.cols {
            let label = label_for_index(grid, CellIndex::new(x, y))?;
            let px = f64::from(x - 1) * cell_w;
            let py = f64::from(y - 1) * cell_h;
            draw_label(
                img,
                &label,
                px.round() as i64 + 3,
                py.round() as i64 + 3,
                style.grid.label_size,
                rgb,
            );
        }
    }
    Ok(())
}

/// Renders one map excerpt: basemap, styled features, labeled grid.
///
/// Iteration order is fixed (features sorted by name) so rendering is
/// byte-deterministic for a given style and basemap.
pub fn render_map(
    georef: &MapGeoreference,
    features: &FeatureMap,
    unresolved_names: &[String],
    style: &Style,
    basemap: Basemap<'_>,
) -> Result<MapExcerpt> {
    if georef.image_width_px == 0 || georef.image_height_px == 0 {
        return Err(Error::Render("image dimensions must be positive".into()));
    }
    let (mut img, no_basemap) = render_basemap(georef, style, &basemap);
    let mapper = PixelMapper::new(georef);

    let mut names: Vec<&String> = features.keys().collect();
    names.sort();
    let mut features_drawn = Vec::new();
    for name in names {
        let f = &features[name];
        draw_geometry(&mut img, &mapper, &f.name, &f.geometry, style);
        features_drawn.push(name.clone());
    }
    draw_grid(&mut img, georef, style)?;

    let mut png = Vec::new();
    let encoder = image::codecs::png::PngEncoder::new(&mut png);
    image::ImageEncoder::write_image(
        encoder,
        img.as_raw(),
        img.width(),
        img.height(),
        image::ExtendedColorType::Rgba8,
    )
    .map_err(|e| Error::Render(format!("encoding PNG: {e}")))?;

    Ok(MapExcerpt {
        image: png,
        georef: georef.clone(),
        features_drawn,
        unresolved_names: unresolved_names.to_vec(),
        no_basemap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gazetteer::GazetteerFeature;
    use crate::mapgen::grid::{GridSpec, MapExtent, PROJECTION_ID};
    use sha2::{Digest, Sha256};

    fn fixture_georef() -> MapGeoreference {
        let extent = MapExtent::new(-41.40, 175.10, -41.30, 175.23).unwrap();
        MapGeoreference {
            extent,
            grid: GridSpec::new(12, 12, 0.9).unwrap(),
            image_width_px: 300,
            image_height_px: 300,
            projection: PROJECTION_ID.into(),
        }
    }

    fn fixture_features() -> FeatureMap {
        let mut m = FeatureMap::new();
        m.insert(
            "Lake Test".into(),
            GazetteerFeature {
                name: "Lake Test".into(),
                source: "t".into(),
                authority_rank: 0,
                geometry: Geometry::Polygon {
                    rings: vec![vec![
                        GeoPoint::new(-41.38, 175.12),
                        GeoPoint::new(-41.38, 175.18),
                        GeoPoint::new(-41.33, 175.18),
                        GeoPoint::new(-41.33, 175.12),
                        GeoPoint::new(-41.38, 175.12),
                    ]],
                },
                category: "lake".into(),
                country: None,
                region: None,
            },
        );
        m.insert(
            "Spot".into(),
            GazetteerFeature {
                name: "Spot".into(),
                source: "t".into(),
                authority_rank: 0,
                geometry: Geometry::Point { coord: GeoPoint::new(-41.35, 175.21) },
                category: "locality".into(),
                country: None,
                region: None,
            },
        );
        m
    }

    #[test]
    fn offline_render_is_deterministic() {
        let georef = fixture_georef();
        let features = fixture_features();
        let style = Style::default();
        let a = render_map(&georef, &features, &[], &style, Basemap::Blank).unwrap();
        let b = render_map(&georef, &features, &[], &style, Basemap::Blank).unwrap();
        assert_eq!(a.image, b.image);
        assert_eq!(a.features_drawn.len(), 2);
        let hash = hex::encode(Sha256::digest(&a.image));
        // Frozen golden hash of the fixture render.
        let frozen = include_str!("../../tests/golden/render_fixture.sha256").trim();
        if frozen != "unset" {
            assert_eq!(hash, frozen, "fixture render changed");
        } else {
            eprintln!("render fixture hash: {hash}");
        }
    }

    #[test]
    fn unresolved_names_flow_through() {
        let georef = fixture_georef();
        let features = fixture_features();
        let ex = render_map(
            &georef,
            &features,
            &["J.K. Donald Wildlife Reserve".to_string()],
            &Style::default(),
            Basemap::Blank,
        )
        .unwrap();
        assert_eq!(ex.unresolved_names.len(), 1);
        assert!(!ex.features_drawn.contains(&"J.K. Donald Wildlife Reserve".to_string()));
    }

    #[test]
    fn image_decodes_with_correct_dims() {
        let georef = fixture_georef();
        let ex = render_map(&georef, &FeatureMap::new(), &[], &Style::default(), Basemap::Blank).unwrap();
        let img = image::load_from_memory(&ex.image).unwrap();
        assert_eq!(img.width(), georef.image_width_px);
        assert_eq!(img.height(), georef.image_height_px);
    }

    #[test]
    fn grid_labels_rendered_for_all_cells() {
        // 144 labels on a 12x12 grid: every top-left corner region must
        // contain lit label pixels distinct from the background.
        let georef = fixture_georef();
        let ex = render_map(&georef, &FeatureMap::new(), &[], &Style::default(), Basemap::Blank).unwrap();
        let img = image::load_from_memory(&ex.image).unwrap().to_rgba8();
        let style = Style::default();
        let bg = [style.background[0], style.background[1], style.background[2]];
        let cell = 300.0 / 12.0;
        let mut labeled = 0;
        for y in 0..12 {
            for x in 0..12 {
                let x0 = (x as f64 * cell) as u32 + 2;
                let y0 = (y as f64 * cell) as u32 + 2;
                let mut found = false;
                'probe: for dy in 0..16 {
                    for dx in 0..20 {
                        let p = img.get_pixel(x0 + dx, y0 + dy).0;
                        if [p[0], p[1], p[2]] != bg {
                            found = true;
                            break 'probe;
                        }
                    }
                }
                if found {
                    labeled += 1;
                }
            }
        }
        assert_eq!(labeled, 144);
    }
}
