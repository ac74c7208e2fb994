//! Paged metadata harvesting with a resumable cursor.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use url::Url;

use crate::atom::parse_feed;
use crate::transport::{Transport, WireRequest};
use crate::{HarvestError, Harvester};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Arxiv,
    CitationIndex,
}

/// Resumption state: `last_token` is the next record offset. Resuming with
/// an unchanged query never re-emits delivered records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarvestCursor {
    pub source: Source,
    pub query: String,
    pub last_token: String,
    pub fetched_count: u64,
}

impl HarvestCursor {
    pub fn save(&self, path: &std::path::Path) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(self).expect("cursor serializes");
        std::fs::write(path, json + "\n")
    }

    pub fn load(path: &std::path::Path) -> Result<HarvestCursor, HarvestError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| HarvestError::BadResponse(e.to_string()))
    }
}

/// Source payload fields as returned, untouched by validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPaperRecord {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub categories: Vec<String>,
    pub published_at: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub updated_at: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Harvest {
    pub records: Vec<RawPaperRecord>,
    pub cursor: HarvestCursor,
    /// True when the service reported no further records.
    pub exhausted: bool,
}

/// Strip the feed's URL wrapper from an entry id.
fn entry_paper_id(raw: &str) -> String {
    match raw.rsplit_once("/abs/") {
        Some((_, id)) => id.to_owned(),
        None => raw.to_owned(),
    }
}

impl<T: Transport> Harvester<T> {
    fn search_expression(query: &str, window: (NaiveDate, NaiveDate)) -> String {
        format!(
            "({query}) AND submittedDate:[{}0000 TO {}2359]",
            window.0.format("%Y%m%d"),
            window.1.format("%Y%m%d")
        )
    }

    fn metadata_page_url(&self, expression: &str, start: u64) -> Result<String, HarvestError> {
        let mut url = Url::parse(&self.config().metadata_endpoint)
            .map_err(|e| HarvestError::BadResponse(format!("bad endpoint: {e}")))?;
        url.query_pairs_mut()
            .append_pair("search_query", expression)
            .append_pair("start", &start.to_string())
            .append_pair("max_results", &self.config().page_size.to_string())
            .append_pair("sortBy", "submittedDate")
            .append_pair("sortOrder", "ascending");
        Ok(url.into())
    }

    /// Fetch metadata pages in service order, starting from `cursor` when
    /// given, stopping after `max_pages` pages (resume later with the
    /// returned cursor) or when the service runs out of records.
    pub fn harvest_metadata(
        &self,
        query: &str,
        window: (NaiveDate, NaiveDate),
        cursor: Option<HarvestCursor>,
        max_pages: Option<usize>,
    ) -> Result<Harvest, HarvestError> {
        let expression = Self::search_expression(query, window);
        let mut start: u64 = match &cursor {
            Some(cursor) => {
                if cursor.query != expression {
                    return Err(HarvestError::CursorMismatch {
                        expected: cursor.query.clone(),
                        got: expression,
                    });
                }
                cursor
                    .last_token
                    .parse()
                    .map_err(|_| HarvestError::BadResponse("bad cursor token".into()))?
            }
            None => 0,
        };

        let mut records = Vec::new();
        let mut exhausted = false;
        let mut pages = 0usize;
        loop {
            if max_pages.is_some_and(|limit| pages >= limit) {
                break;
            }
            let url = self.metadata_page_url(&expression, start)?;
            let response = self.request(&WireRequest::get(url))?;
            let feed = parse_feed(&response.body).map_err(|message| {
                HarvestError::ParseFailure { token: start.to_string(), message }
            })?;
            pages += 1;
            if feed.entries.is_empty() {
                exhausted = true;
                break;
            }
            let page_len = feed.entries.len();
            for entry in feed.entries {
                records.push(RawPaperRecord {
                    id: entry_paper_id(&entry.id),
                    title: entry.title,
                    abstract_text: entry.summary,
                    categories: entry.categories,
                    published_at: entry.published,
                    updated_at: if entry.updated.is_empty() {
                        None
                    } else {
                        Some(entry.updated)
                    },
                });
            }
            start += page_len as u64;
            if page_len < self.config().page_size {
                exhausted = true;
                break;
            }
        }

        Ok(Harvest {
            records,
            cursor: HarvestCursor {
                source: Source::Arxiv,
                query: expression,
                last_token: start.to_string(),
                fetched_count: start,
            },
            exhausted,
        })
    }
}
