//! Per-topic dataset files: merging per-language outputs, canonical
//! serialization, validation, and the read-only HTTP service.

mod server;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::title_slug;
use crate::enrich::{decode_highlight_link, PresentedFact};

pub use server::{router, spawn_server, DatasetIndex, ServerHandle, DEFAULT_PORT};

pub const SCHEMA_VERSION: u32 = 1;

/// Provenance key holding the per-language cap the dataset was built with.
pub const CAP_KEY: &str = "selection.cap";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{language} was built against English revision {found}, expected {expected}")]
    RevisionMismatch {
        language: String,
        expected: String,
        found: String,
    },
    #[error("{language} output belongs to topic {found:?}, expected {expected:?}")]
    TopicMismatch {
        language: String,
        expected: String,
        found: String,
    },
    #[error("duplicate fact id {0}")]
    DuplicateFactId(String),
    #[error("{language} has {count} facts, above the cap of {cap}")]
    CapExceeded {
        language: String,
        count: usize,
        cap: usize,
    },
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
}

/// The unified per-topic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicDataset {
    pub schema_version: u32,
    /// English article title.
    pub topic: String,
    pub english_revision: String,
    pub generated_at: String,
    pub languages: Vec<String>,
    pub facts: IndexMap<String, Vec<PresentedFact>>,
    pub provenance: BTreeMap<String, String>,
}

/// One language's enrichment output.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguageOutput {
    pub language_code: String,
    pub topic: String,
    pub english_revision: String,
    pub facts: Vec<PresentedFact>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MergeMetadata {
    pub generated_at: String,
    pub cap: usize,
    /// Preferred language order; unlisted languages follow alphabetically.
    pub language_order: Vec<String>,
    pub provenance: BTreeMap<String, String>,
}

/// Merges per-language outputs into one dataset.
pub fn merge_language_outputs(
    topic: &str,
    english_revision: &str,
    outputs: Vec<LanguageOutput>,
    metadata: MergeMetadata,
) -> Result<TopicDataset, DatasetError> {
    let mut seen = HashSet::new();
    for out in &outputs {
        if out.topic != topic {
            return Err(DatasetError::TopicMismatch {
                language: out.language_code.clone(),
                expected: topic.to_string(),
                found: out.topic.clone(),
            });
        }
        if out.english_revision != english_revision {
            return Err(DatasetError::RevisionMismatch {
                language: out.language_code.clone(),
                expected: english_revision.to_string(),
                found: out.english_revision.clone(),
            });
        }
        if out.facts.len() > metadata.cap {
            return Err(DatasetError::CapExceeded {
                language: out.language_code.clone(),
                count: out.facts.len(),
                cap: metadata.cap,
            });
        }
        for f in &out.facts {
            if !seen.insert(f.id.clone()) {
                return Err(DatasetError::DuplicateFactId(f.id.clone()));
            }
        }
    }

    let rank = |lang: &str| {
        metadata
            .language_order
            .iter()
            .position(|l| l == lang)
            .unwrap_or(usize::MAX)
    };
    let mut outputs = outputs;
    outputs.sort_by(|a, b| {
        rank(&a.language_code)
            .cmp(&rank(&b.language_code))
            .then_with(|| a.language_code.cmp(&b.language_code))
    });

    let mut facts = IndexMap::new();
    for out in outputs {
        if facts.insert(out.language_code.clone(), out.facts).is_some() {
            return Err(DatasetError::Schema(format!(
                "language {} given twice",
                out.language_code
            )));
        }
    }
    let mut provenance = metadata.provenance;
    provenance.insert(CAP_KEY.to_string(), metadata.cap.to_string());
    let ds = TopicDataset {
        schema_version: SCHEMA_VERSION,
        topic: topic.to_string(),
        english_revision: english_revision.to_string(),
        generated_at: metadata.generated_at,
        languages: facts.keys().cloned().collect(),
        facts,
        provenance,
    };
    ds.validate()?;
    Ok(ds)
}

impl TopicDataset {
    pub fn fact_count(&self) -> usize {
        self.facts.values().map(Vec::len).sum()
    }

    pub fn cap(&self) -> Option<usize> {
        self.provenance.get(CAP_KEY).and_then(|c| c.parse().ok())
    }

    /// `<topic with underscores>.json`
    pub fn file_name(&self) -> String {
        format!("{}.json", title_slug(&self.topic))
    }

    /// Checks every dataset invariant beyond the field types.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let fail = |m: String| Err(DatasetError::Schema(m));
        if self.schema_version != SCHEMA_VERSION {
            return fail(format!(
                "unsupported schema_version {}",
                self.schema_version
            ));
        }
        if self.topic.trim().is_empty() {
            return fail("empty topic".into());
        }
        if self.english_revision.trim().is_empty() {
            return fail("empty english_revision".into());
        }
        if chrono::DateTime::parse_from_rfc3339(&self.generated_at).is_err() {
            return fail(format!(
                "generated_at {:?} is not ISO-8601",
                self.generated_at
            ));
        }
        let keys: Vec<&String> = self.facts.keys().collect();
        if self.languages.iter().collect::<Vec<_>>() != keys {
            return fail("languages must list the fact groups in order".into());
        }
        if let Some(raw) = self.provenance.get(CAP_KEY) {
            if raw.parse::<usize>().is_err() {
                return fail(format!("{CAP_KEY} {raw:?} is not an integer"));
            }
        }
        let mut ids = HashSet::new();
        for (lang, facts) in &self.facts {
            if let Some(cap) = self.cap() {
                if facts.len() > cap {
                    return fail(format!("{lang} has {} facts, cap is {cap}", facts.len()));
                }
            }
            for f in facts {
                if &f.language_code != lang {
                    return fail(format!(
                        "fact {} is {} but filed under {lang}",
                        f.id, f.language_code
                    ));
                }
                if f.id.is_empty() || !ids.insert(f.id.as_str()) {
                    return fail(format!("fact id {:?} is empty or repeated", f.id));
                }
                if f.text_en.trim().is_empty() || f.text_src.trim().is_empty() {
                    return fail(format!("fact {} has empty text", f.id));
                }
                if f.anchor_sentence_en.trim().is_empty() {
                    return fail(format!("fact {} has no anchor", f.id));
                }
                if url::Url::parse(&f.source_link_url).is_err()
                    || decode_highlight_link(&f.source_link_url).is_none_or(|t| t.is_empty())
                {
                    return fail(format!("fact {} has a malformed source link", f.id));
                }
                if !f.similarity.is_finite() || f.similarity.abs() > 1.0 {
                    return fail(format!(
                        "fact {} similarity {} out of range",
                        f.id, f.similarity
                    ));
                }
            }
        }
        Ok(())
    }

    /// Canonical bytes: pretty JSON in declared field order plus a newline.
    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("dataset serializes");
        out.push(b'\n');
        out
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, DatasetError> {
        let ds: TopicDataset =
            serde_json::from_slice(bytes).map_err(|e| DatasetError::Schema(e.to_string()))?;
        ds.validate()?;
        Ok(ds)
    }
}

/// Validates and writes `ds` into `dir`, returning the file path.
pub fn write_dataset(ds: &TopicDataset, dir: &Path) -> Result<PathBuf, DatasetError> {
    ds.validate()?;
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| DatasetError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let path = dir.join(ds.file_name());
    let tmp = dir.join(format!(".{}.tmp", ds.file_name()));
    fs::write(&tmp, ds.to_canonical_bytes()).map_err(io(&tmp))?;
    fs::rename(&tmp, &path).map_err(io(&path))?;
    Ok(path)
}

pub fn read_dataset(path: &Path) -> Result<TopicDataset, DatasetError> {
    let bytes = fs::read(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    TopicDataset::from_slice(&bytes)
}
