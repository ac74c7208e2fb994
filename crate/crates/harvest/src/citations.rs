//! Batched citation lookups: for each paper id, the references with their
//! publication years and field-of-study labels.

use std::collections::BTreeSet;

use serde::Deserialize;

use scievo_core::corpus::{CitationEdge, PaperId};

use crate::transport::{Transport, WireRequest};
use crate::{HarvestError, Harvester};

/// References of one requested paper; `found` is false when the index has
/// no entry for the id.
#[derive(Debug, Clone)]
pub struct CitationGroup {
    pub paper_id: String,
    pub found: bool,
    pub edges: Vec<CitationEdge>,
}

#[derive(Deserialize)]
struct WirePaper {
    #[serde(default)]
    references: Vec<WireReference>,
}

#[derive(Deserialize)]
struct WireReference {
    #[serde(rename = "paperId")]
    paper_id: Option<String>,
    year: Option<i32>,
    #[serde(rename = "fieldsOfStudy", default)]
    fields_of_study: Option<Vec<String>>,
    #[serde(rename = "s2FieldsOfStudy", default)]
    s2_fields_of_study: Option<Vec<WireS2Field>>,
}

#[derive(Deserialize)]
struct WireS2Field {
    category: String,
}

impl WireReference {
    fn fields(&self) -> BTreeSet<String> {
        if let Some(fields) = &self.fields_of_study {
            return fields.iter().cloned().collect();
        }
        if let Some(fields) = &self.s2_fields_of_study {
            return fields.iter().map(|f| f.category.clone()).collect();
        }
        BTreeSet::new()
    }
}

impl<T: Transport> Harvester<T> {
    /// Look up references for a batch of ids (at most `max_batch`).
    /// Missing papers yield an empty group flagged `found: false`.
    pub fn fetch_citations(&self, ids: &[String]) -> Result<Vec<CitationGroup>, HarvestError> {
        if ids.is_empty() {
            return Err(HarvestError::EmptyBatch);
        }
        let max = self.config().max_batch;
        if ids.len() > max {
            return Err(HarvestError::BatchTooLarge { got: ids.len(), max });
        }

        let url = format!(
            "{}?fields=references.paperId,references.year,references.fieldsOfStudy",
            self.config().citation_endpoint
        );
        let body = serde_json::json!({ "ids": ids }).to_string();
        let mut request = WireRequest::post(url, body);
        if let Some(key) = &self.config().api_key {
            request.headers.push(("x-api-key".into(), key.clone()));
        }
        let response = self.request(&request)?;

        let parsed: Vec<Option<WirePaper>> = serde_json::from_str(&response.body)
            .map_err(|e| HarvestError::BadResponse(format!("citation batch: {e}")))?;
        if parsed.len() != ids.len() {
            return Err(HarvestError::BadResponse(format!(
                "citation batch returned {} entries for {} ids",
                parsed.len(),
                ids.len()
            )));
        }

        let groups = ids
            .iter()
            .zip(parsed)
            .map(|(id, paper)| match paper {
                None => CitationGroup { paper_id: id.clone(), found: false, edges: Vec::new() },
                Some(paper) => {
                    let edges = paper
                        .references
                        .iter()
                        .enumerate()
                        .filter_map(|(idx, reference)| {
                            let fields = reference.fields();
                            let cited = match &reference.paper_id {
                                Some(pid) => pid.clone(),
                                // Keep id-less references when they still
                                // carry a year or fields; both feed metrics.
                                None if reference.year.is_some() || !fields.is_empty() => {
                                    format!("{id}#ref{idx}")
                                }
                                None => return None,
                            };
                            Some(CitationEdge {
                                citing: PaperId(id.clone()),
                                cited,
                                cited_year: reference.year,
                                cited_fields: fields,
                            })
                        })
                        .collect();
                    CitationGroup { paper_id: id.clone(), found: true, edges }
                }
            })
            .collect();
        Ok(groups)
    }
}
