//! Slippy-map tile fetching with an on-disk cache.

use std::fs;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use image::RgbaImage;

use crate::{Error, Result};

pub const TILE_SIZE: u32 = 256;

/// Fetches z/x/y PNG tiles from a slippy-map server, caching them on
/// disk keyed by (server, zoom, x, y).
pub struct TileFetcher {
    /// URL template with `{z}`, `{x}`, `{y}` placeholders.
    pub url_template: String,
    cache_dir: PathBuf,
    client: reqwest::blocking::Client,
    last_request: Mutex<Option<Instant>>,
    min_interval: Duration,
}

impl TileFetcher {
    pub fn new(url_template: &str, cache_dir: impl Into<PathBuf>, user_agent: &str) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .user_agent(user_agent.to_string())
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| Error::Render(format!("building tile client: {e}")))?;
        Ok(Self {
            url_template: url_template.to_string(),
            cache_dir: cache_dir.into(),
            client,
            last_request: Mutex::new(None),
            min_interval: Duration::from_millis(500),
        })
    }

    fn cache_path(&self, z: u8, x: u64, y: u64) -> PathBuf {
        let server: String = self
            .url_template
            .chars()
            .map(|c| if c.is_alphanumeric() { c } else { '_' })
            .collect();
        self.cache_dir.join(server).join(format!("{z}_{x}_{y}.png"))
    }

    pub fn fetch(&self, z: u8, x: u64, y: u64) -> Result<RgbaImage> {
        let path = self.cache_path(z, x, y);
        if let Ok(bytes) = fs::read(&path) {
            if let Ok(img) = image::load_from_memory(&bytes) {
                return Ok(img.to_rgba8());
            }
        }
        {
            let mut last = self.last_request.lock().unwrap();
            if let Some(t) = *last {
                let elapsed = t.elapsed();
                if elapsed < self.min_interval {
                    std::thread::sleep(self.min_interval - elapsed);
                }
            }
            *last = Some(Instant::now());
        }
        let url = self
            .url_template
            .replace("{z}", &z.to_string())
            .replace("{x}", &x.to_string())
            .replace("{y}", &y.to_string());
        let resp = self
            .client
            .get(&url)
            .send()
            .map_err(|e| Error::Render(format!("tile {z}/{x}/{y}: {e}")))?;
        if !resp.status().is_success() {
            return Err(Error::Render(format!("tile {z}/{x}/{y}: HTTP {}", resp.status())));
        }
        let bytes = resp
            .bytes()
            .map_err(|e| Error::Render(format!("tile {z}/{x}/{y}: {e}")))?;
        let img = image::load_from_memory(&bytes)
            .map_err(|e| Error::Render(format!("tile {z}/{x}/{y}: decode: {e}")))?
            .to_rgba8();
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).ok();
        }
        fs::write(&path, &bytes).ok();
        Ok(img)
    }
}

/// Zoom level at which the extent spans at least `target_px` pixels.
pub fn zoom_for_extent(extent_frac_of_world: f64, target_px: u32) -> u8 {
    let mut z = 0u8;
    while z < 19 {
        let world_px = f64::from(TILE_SIZE) * 2f64.powi(i32::from(z));
        if world_px * extent_frac_of_world >= f64::from(target_px) {
            break;
        }
        z += 1;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zoom_selection() {
        // Whole world at 256 px needs zoom 0.
        assert_eq!(zoom_for_extent(1.0, 256), 0);
        // A 1/1024 slice at 1024 px needs 2^z * 256 / 1024 >= 1024 -> z = 12.
        assert_eq!(zoom_for_extent(1.0 / 1024.0, 1024), 12);
    }
}
