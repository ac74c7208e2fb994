//! External-service clients for paper metadata (Atom feed) and citation
//! records (batched JSON lookups), with rate limiting, bounded retry,
//! resumable cursors, and a fixture-replay mode for hermetic tests.

mod atom;
mod citations;
mod metadata;
mod transport;

pub use atom::{parse_feed, AtomEntry, AtomFeed};
pub use citations::CitationGroup;
pub use metadata::{Harvest, HarvestCursor, RawPaperRecord, Source};
pub use transport::{
    install_fixture, FixtureTransport, HttpTransport, Method, Transport, WireRequest,
    WireResponse,
};

use std::time::Duration;

use thiserror::Error;

/// Environment variable holding the citation-index API key.
pub const API_KEY_ENV: &str = "SCIEVO_S2_API_KEY";

#[derive(Debug, Error)]
pub enum HarvestError {
    #[error("transport failure: {message}")]
    Transport { message: String },
    #[error("http status {status} from {url}")]
    Http { status: u16, url: String },
    #[error("retry budget exhausted after {attempts} attempts: {context}")]
    RetryBudgetExhausted { attempts: u32, context: String },
    #[error("parse_failure at page token {token}: {message}")]
    ParseFailure { token: String, message: String },
    #[error("no fixture recorded for this request: {path}")]
    MissingFixture { path: String },
    #[error("batch is empty")]
    EmptyBatch,
    #[error("batch of {got} exceeds the configured maximum {max}")]
    BatchTooLarge { got: usize, max: usize },
    #[error("cursor was issued for query {expected:?}, not {got:?}")]
    CursorMismatch { expected: String, got: String },
    #[error("malformed response: {0}")]
    BadResponse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Exponential backoff: base * factor^attempt, capped by `max_attempts`.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub base: Duration,
    pub factor: f64,
    pub max_attempts: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { base: Duration::from_secs(1), factor: 2.0, max_attempts: 5 }
    }
}

impl RetryPolicy {
    pub fn delay(&self, attempt: u32) -> Duration {
        self.base.mul_f64(self.factor.powi(attempt as i32))
    }
}

#[derive(Debug, Clone)]
pub struct HarvestConfig {
    pub metadata_endpoint: String,
    pub citation_endpoint: String,
    /// Minimum spacing between requests in network mode.
    pub min_request_interval: Duration,
    /// Entries requested per metadata page.
    pub page_size: usize,
    /// Maximum ids per citation batch.
    pub max_batch: usize,
    pub retry: RetryPolicy,
    pub api_key: Option<String>,
}

impl Default for HarvestConfig {
    fn default() -> Self {
        HarvestConfig {
            metadata_endpoint: "https://export.arxiv.org/api/query".into(),
            citation_endpoint: "https://api.semanticscholar.org/graph/v1/paper/batch".into(),
            min_request_interval: Duration::from_secs(3),
            page_size: 100,
            max_batch: 100,
            retry: RetryPolicy::default(),
            api_key: std::env::var(API_KEY_ENV).ok(),
        }
    }
}

/// Client over an injectable transport: [`HttpTransport`] for network mode,
/// [`FixtureTransport`] for hermetic replay.
pub struct Harvester<T: Transport> {
    transport: T,
    config: HarvestConfig,
}

impl<T: Transport> Harvester<T> {
    pub fn new(transport: T, config: HarvestConfig) -> Self {
        Harvester { transport, config }
    }

    pub fn config(&self) -> &HarvestConfig {
        &self.config
    }

    /// Execute with retry: 429 and 5xx responses and transport errors back
    /// off exponentially (honoring Retry-After) until the budget runs out.
    fn request(&self, request: &WireRequest) -> Result<WireResponse, HarvestError> {
        let policy = &self.config.retry;
        let mut last_error = String::new();
        for attempt in 0..policy.max_attempts {
            match self.transport.execute(request) {
                Ok(response) if response.status == 200 => return Ok(response),
                Ok(response) if response.status == 429 || response.status >= 500 => {
                    let delay = response
                        .retry_after
                        .map(Duration::from_secs)
                        .unwrap_or_else(|| policy.delay(attempt));
                    last_error = format!("http status {}", response.status);
                    log::warn!(
                        "attempt {} of {} got {last_error}; backing off {delay:?}",
                        attempt + 1,
                        policy.max_attempts
                    );
                    std::thread::sleep(delay);
                }
                Ok(response) => {
                    return Err(HarvestError::Http {
                        status: response.status,
                        url: request.url.clone(),
                    })
                }
                Err(HarvestError::MissingFixture { path }) => {
                    // Fixture gaps are configuration errors; retrying cannot help.
                    return Err(HarvestError::MissingFixture { path });
                }
                Err(e) => {
                    last_error = e.to_string();
                    std::thread::sleep(policy.delay(attempt));
                }
            }
        }
        Err(HarvestError::RetryBudgetExhausted {
            attempts: policy.max_attempts,
            context: format!("{last_error} ({})", request.url),
        })
    }
}
