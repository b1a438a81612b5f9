//! Model-provider abstraction: one chat-completions HTTP adapter, a
//! deterministic mock for offline runs, and an on-disk response cache.

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// One request to a vision-capable model.
#[derive(Debug, Clone)]
pub struct LmmRequest {
    pub prompt_text: String,
    /// PNG bytes; present iff the template is a gridded template.
    pub image: Option<Vec<u8>>,
    pub model_id: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl LmmRequest {
    /// Content hash identifying this request for caching and audit.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.model_id.as_bytes());
        hasher.update([0]);
        hasher.update(self.temperature.to_le_bytes());
        hasher.update(self.max_output_tokens.to_le_bytes());
        hasher.update([0]);
        hasher.update(self.prompt_text.as_bytes());
        hasher.update([0]);
        if let Some(img) = &self.image {
            hasher.update(img);
        }
        hex::encode(hasher.finalize())
    }
}

/// Sends one request, returns the model's text response.
pub trait Provider: Send + Sync {
    fn id(&self) -> &str;
    fn send(&self, request: &LmmRequest) -> Result<String>;
}

/// Chat-completions wire format over HTTP. The API key is read from the
/// environment variable named in the config and never stored.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub id: String,
    pub endpoint: String,
    pub api_key_env: String,
    pub model_id: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_output_tokens: u32,
    /// Minimum seconds between requests.
    #[serde(default = "default_interval")]
    pub min_interval_s: f64,
}

fn default_temperature() -> f64 {
    0.0
}
fn default_max_tokens() -> u32 {
    1024
}
fn default_interval() -> f64 {
    1.0
}

pub struct HttpProvider {
    config: ProviderConfig,
    api_key: String,
    client: reqwest::blocking::Client,
    last_request: Mutex<Option<Instant>>,
}

impl HttpProvider {
    pub fn new(config: ProviderConfig) -> Result<Self> {
        let api_key = std::env::var(&config.api_key_env).map_err(|_| {
            Error::Provider(format!(
                "environment variable {} (API key for provider {}) is not set",
                config.api_key_env, config.id
            ))
        })?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| Error::Provider(format!("building HTTP client: {e}")))?;
        Ok(Self { config, api_key, client, last_request: Mutex::new(None) })
    }

    pub fn model_id(&self) -> &str {
        &self.config.model_id
    }

    fn throttle(&self) {
        let mut last = self.last_request.lock().unwrap();
        let min = Duration::from_secs_f64(self.config.min_interval_s);
        if let Some(t) = *last {
            let elapsed = t.elapsed();
            if elapsed < min {
                std::thread::sleep(min - elapsed);
            }
        }
        *last = Some(Instant::now());
    }
}

impl Provider for HttpProvider {
    fn id(&self) -> &str {
        &self.config.id
    }

    fn send(&self, request: &LmmRequest) -> Result<String> {
        self.throttle();
        let mut content = vec![serde_json::json!({
            "type": "text",
            "text": request.prompt_text,
        })];
        if let Some(image) = &request.image {
            let b64 = base64::engine::general_purpose::STANDARD.encode(image);
            content.push(serde_json::json!({
                "type": "image_url",
                "image_url": {"url": format!("data:image/png;base64,{b64}")},
            }));
        }
        let body = serde_json::json!({
            "model": request.model_id,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
            "messages": [{"role": "user", "content": content}],
        });
        let resp = self
            .client
            .post(&self.config.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| Error::Provider(format!("{}: {e}", self.config.id)))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| Error::Provider(format!("{}: reading body: {e}", self.config.id)))?;
        if !status.is_success() {
            return Err(Error::Provider(format!("{}: HTTP {status}: {text}", self.config.id)));
        }
        let json: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::Provider(format!("{}: invalid JSON response: {e}", self.config.id)))?;
        json["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                Error::Provider(format!("{}: response missing message content", self.config.id))
            })
    }
}

/// How a mock fixture is matched against an incoming request.
#[derive(Debug, Clone)]
pub enum MockKey {
    /// Exact request fingerprint.
    Fingerprint(String),
    /// Substring of the prompt text (items are usually distinguishable
    /// by their description).
    PromptContains(String),
    /// Matches every request; useful as a final fallback.
    Any,
}

/// Deterministic offline provider answering from canned fixtures and
/// counting how many calls reach it.
pub struct MockProvider {
    fixtures: Vec<(MockKey, String)>,
    calls: AtomicUsize,
}

impl MockProvider {
    pub fn new(fixtures: Vec<(MockKey, String)>) -> Self {
        Self { fixtures, calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Provider for MockProvider {
    fn id(&self) -> &str {
        "mock"
    }

    fn send(&self, request: &LmmRequest) -> Result<String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let fingerprint = request.fingerprint();
        for (key, response) in &self.fixtures {
            let hit = match key {
                MockKey::Fingerprint(f) => *f == fingerprint,
                MockKey::PromptContains(s) => request.prompt_text.contains(s),
                MockKey::Any => true,
            };
            if hit {
                return Ok(response.clone());
            }
        }
        Err(Error::Provider(format!("mock provider: no fixture for request {fingerprint}")))
    }
}

/// Mock fixture file: JSON map from prompt substring to canned response.
pub fn load_mock_fixtures(path: &std::path::Path) -> Result<MockProvider> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Provider(format!("reading {}: {e}", path.display())))?;
    let map: HashMap<String, String> = serde_json::from_str(&text)
        .map_err(|e| Error::Provider(format!("parsing {}: {e}", path.display())))?;
    let mut entries: Vec<(String, String)> = map.into_iter().collect();
    // Longest key first so the most specific substring wins.
    entries.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));
    Ok(MockProvider::new(
        entries
            .into_iter()
            .map(|(k, v)| (MockKey::PromptContains(k), v))
            .collect(),
    ))
}

/// On-disk response cache keyed by request fingerprint.
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)
            .map_err(|e| Error::Provider(format!("creating cache dir {}: {e}", dir.display())))?;
        Ok(Self { dir })
    }

    fn path(&self, fingerprint: &str) -> PathBuf {
        self.dir.join(format!("{fingerprint}.txt"))
    }

    pub fn get(&self, fingerprint: &str) -> Option<String> {
        fs::read_to_string(self.path(fingerprint)).ok()
    }

    pub fn put(&self, fingerprint: &str, response: &str) -> Result<()> {
        // Write-then-rename keeps concurrent readers from seeing a
        // partial entry.
        let tmp = self.dir.join(format!(".{fingerprint}.tmp-{}", std::process::id()));
        fs::write(&tmp, response)
            .map_err(|e| Error::Provider(format!("writing cache entry: {e}")))?;
        fs::rename(&tmp, self.path(fingerprint))
            .map_err(|e| Error::Provider(format!("committing cache entry: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(prompt: &str) -> LmmRequest {
        LmmRequest {
            prompt_text: prompt.into(),
            image: None,
            model_id: "m".into(),
            temperature: 0.0,
            max_output_tokens: 16,
        }
    }

    #[test]
    fn fingerprints_distinguish_inputs() {
        let a = req("one").fingerprint();
        let b = req("two").fingerprint();
        assert_ne!(a, b);
        let mut with_img = req("one");
        with_img.image = Some(vec![1, 2, 3]);
        assert_ne!(a, with_img.fingerprint());
        assert_eq!(a, req("one").fingerprint());
    }

    #[test]
    fn mock_matches_and_counts() {
        let mock = MockProvider::new(vec![
            (MockKey::PromptContains("Puketi".into()), "Cell C7.".into()),
            (MockKey::Any, "fallback".into()),
        ]);
        assert_eq!(mock.send(&req("north of Puketi")).unwrap(), "Cell C7.");
        assert_eq!(mock.send(&req("elsewhere")).unwrap(), "fallback");
        assert_eq!(mock.calls(), 2);
    }

    #[test]
    fn mock_miss_is_explicit() {
        let mock = MockProvider::new(vec![(MockKey::PromptContains("x".into()), "y".into())]);
        let err = mock.send(&req("zzz")).unwrap_err().to_string();
        assert!(err.contains("no fixture"), "{err}");
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path()).unwrap();
        assert_eq!(cache.get("abc"), None);
        cache.put("abc", "hello").unwrap();
        assert_eq!(cache.get("abc").as_deref(), Some("hello"));
    }

    #[test]
    fn missing_api_key_env_is_config_error() {
        let config = ProviderConfig {
            id: "p".into(),
            endpoint: "http://localhost/v1/chat/completions".into(),
            api_key_env: "GEOREF_TEST_KEY_THAT_IS_NOT_SET".into(),
            model_id: "m".into(),
            temperature: 0.0,
            max_output_tokens: 16,
            min_interval_s: 0.0,
        };
        assert!(HttpProvider::new(config).is_err());
    }
}
