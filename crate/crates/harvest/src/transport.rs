//! Request execution: live HTTP with rate limiting, or replay from a
//! fixture directory keyed by a stable hash of the request.

use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

use crate::HarvestError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Get,
    Post,
}

impl Method {
    fn as_str(self) -> &'static str {
        match self {
            Method::Get => "GET",
            Method::Post => "POST",
        }
    }
}

/// One request as seen by the transport. Headers (e.g. API keys) are carried
/// separately and excluded from the fixture key so replay never depends on
/// secrets.
#[derive(Debug, Clone)]
pub struct WireRequest {
    pub method: Method,
    pub url: String,
    pub body: Option<String>,
    pub headers: Vec<(String, String)>,
}

impl WireRequest {
    pub fn get(url: String) -> WireRequest {
        WireRequest { method: Method::Get, url, body: None, headers: Vec::new() }
    }

    pub fn post(url: String, body: String) -> WireRequest {
        WireRequest { method: Method::Post, url, body: Some(body), headers: Vec::new() }
    }

    fn canonical(&self) -> String {
        format!("{} {}\n{}", self.method.as_str(), self.url, self.body.as_deref().unwrap_or(""))
    }

    /// Stable fixture file name for this request.
    pub fn fixture_file_name(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        format!("{}.resp", &hex::encode(digest)[..32])
    }
}

#[derive(Debug, Clone)]
pub struct WireResponse {
    pub status: u16,
    pub body: String,
    /// Parsed Retry-After header (seconds), when the server sent one.
    pub retry_after: Option<u64>,
}

pub trait Transport {
    fn execute(&self, request: &WireRequest) -> Result<WireResponse, HarvestError>;
}

/// Live HTTP transport. A mutex serializes requests (one in flight at a
/// time) and enforces the minimum spacing between request starts.
pub struct HttpTransport {
    agent: ureq::Agent,
    min_interval: Duration,
    last_request: Mutex<Option<Instant>>,
}

impl HttpTransport {
    pub fn new(min_interval: Duration) -> HttpTransport {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .build();
        HttpTransport {
            agent: ureq::Agent::new_with_config(config),
            min_interval,
            last_request: Mutex::new(None),
        }
    }
}

impl HttpTransport {
    /// Block until the configured spacing from the previous request start
    /// has passed, then claim the next slot. Holding the lock across the
    /// request keeps at most one in flight.
    fn pace(&self) -> std::sync::MutexGuard<'_, Option<Instant>> {
        let mut last = self.last_request.lock().expect("transport mutex");
        if let Some(started) = *last {
            let elapsed = started.elapsed();
            if elapsed < self.min_interval {
                std::thread::sleep(self.min_interval - elapsed);
            }
        }
        *last = Some(Instant::now());
        last
    }
}

impl Transport for HttpTransport {
    fn execute(&self, request: &WireRequest) -> Result<WireResponse, HarvestError> {
        let _slot = self.pace();

        let result = match request.method {
            Method::Get => {
                let mut req = self.agent.get(&request.url);
                for (name, value) in &request.headers {
                    req = req.header(name, value);
                }
                req.call()
            }
            Method::Post => {
                let mut req = self.agent.post(&request.url).header("content-type", "application/json");
                for (name, value) in &request.headers {
                    req = req.header(name, value);
                }
                req.send(request.body.as_deref().unwrap_or(""))
            }
        };
        let mut response =
            result.map_err(|e| HarvestError::Transport { message: e.to_string() })?;
        let status = response.status().as_u16();
        let retry_after = response
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok());
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| HarvestError::Transport { message: e.to_string() })?;
        Ok(WireResponse { status, body, retry_after })
    }
}

/// Replay transport: responses come from `<dir>/<request hash>.resp`.
/// Replaying the same directory yields byte-identical results.
pub struct FixtureTransport {
    dir: PathBuf,
}

impl FixtureTransport {
    pub fn new(dir: impl Into<PathBuf>) -> FixtureTransport {
        FixtureTransport { dir: dir.into() }
    }
}

impl Transport for FixtureTransport {
    fn execute(&self, request: &WireRequest) -> Result<WireResponse, HarvestError> {
        let path = self.dir.join(request.fixture_file_name());
        let body = std::fs::read_to_string(&path).map_err(|_| HarvestError::MissingFixture {
            path: format!("{} (for {})", path.display(), request.url),
        })?;
        Ok(WireResponse { status: 200, body, retry_after: None })
    }
}

/// Record a response body under the fixture key of `request`.
pub fn install_fixture(
    dir: &Path,
    request: &WireRequest,
    body: &str,
) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(request.fixture_file_name());
    std::fs::write(&path, body)?;
    Ok(path)
}
