//! Wikipedia articles across language editions: fetching, caching,
//! interlanguage resolution and segmentation into sections, paragraphs and
//! sentences.

mod cache;
mod extract;
mod fixture;
mod segment;
mod wiki;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{title_slug, DiskCache};
pub use extract::parse_extract;
pub use fixture::{bundled_fixture, FixtureWiki};
pub use segment::{segment, split_paragraphs, split_sentences, uses_cjk_rules};
pub use wiki::HttpWiki;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("no such page: {language_code}:{title}")]
    NotFound {
        title: String,
        language_code: String,
    },
    #[error("network error: {0}")]
    Network(String),
    #[error("could not extract page body for {title}: {reason}")]
    Parse { title: String, reason: String },
    #[error("{title} ({source_lang}) has no interlanguage link to {target_lang}")]
    NoLanglink {
        title: String,
        source_lang: String,
        target_lang: String,
    },
    #[error("language {0} is not configured")]
    UnsupportedLanguage(String),
    #[error("cache error at {path}: {reason}")]
    Cache { path: PathBuf, reason: String },
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub index: usize,
    /// Empty for the lead section.
    pub heading: String,
    pub level: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: usize,
    pub text: String,
    /// Half-open byte offsets into the paragraph text.
    pub char_span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub index: usize,
    pub section_index: usize,
    pub text: String,
    pub sentences: Vec<Sentence>,
}

impl Paragraph {
    pub fn new(index: usize, section_index: usize, text: String, language_code: &str) -> Self {
        let sentences = split_sentences(&text, language_code);
        Self {
            index,
            section_index,
            text,
            sentences,
        }
    }
}

/// One language edition's page, segmented.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub language_code: String,
    pub title: String,
    pub revision_id: String,
    pub canonical_url: String,
    pub sections: Vec<Section>,
    pub paragraphs: Vec<Paragraph>,
}

impl Article {
    pub fn paragraph(&self, index: usize) -> Option<&Paragraph> {
        self.paragraphs.get(index)
    }

    pub fn sentence_count(&self) -> usize {
        self.paragraphs.iter().map(|p| p.sentences.len()).sum()
    }

    /// First sentence of the lead section, if the article has one.
    pub fn first_lead_sentence(&self) -> Option<(&Sentence, usize)> {
        self.paragraphs
            .iter()
            .filter(|p| p.section_index == 0)
            .chain(self.paragraphs.iter())
            .find_map(|p| p.sentences.first().map(|s| (s, p.index)))
    }

    /// Checks the structural invariants; returns a description of the first
    /// violation.
    pub fn check(&self) -> std::result::Result<(), String> {
        for (i, s) in self.sections.iter().enumerate() {
            if s.index != i {
                return Err(format!("section {i} carries index {}", s.index));
            }
        }
        for (i, p) in self.paragraphs.iter().enumerate() {
            if p.index != i {
                return Err(format!("paragraph {i} carries index {}", p.index));
            }
            if p.section_index >= self.sections.len() {
                return Err(format!(
                    "paragraph {i} references missing section {}",
                    p.section_index
                ));
            }
            let mut last = 0;
            for s in &p.sentences {
                let (a, b) = s.char_span;
                if a < last || b <= a || p.text.get(a..b) != Some(s.text.as_str()) {
                    return Err(format!("paragraph {i} sentence {} has a bad span", s.index));
                }
                last = b;
            }
            if !p.text.trim().is_empty() && p.sentences.is_empty() {
                return Err(format!("paragraph {i} has text but no sentences"));
            }
        }
        let host = url::Url::parse(&self.canonical_url)
            .ok()
            .and_then(|u| u.host_str().map(str::to_owned))
            .ok_or_else(|| format!("canonical url {} is not absolute", self.canonical_url))?;
        if !host.starts_with(&format!("{}.", self.language_code)) {
            return Err(format!("host {host} does not match {}", self.language_code));
        }
        Ok(())
    }
}

/// A page as delivered by a wiki source, before segmentation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPage {
    pub title: String,
    pub language_code: String,
    pub revision_id: String,
    pub canonical_url: String,
    /// Plain-text extract with `== Heading ==` section markers.
    pub extract: String,
}

/// Read-only access to language editions.
pub trait WikiSource: Send + Sync {
    fn fetch_page(&self, title: &str, language_code: &str) -> Result<RawPage>;

    /// The linked title in `target_lang`, or `None` when the edition lacks
    /// the topic.
    fn langlink(&self, title: &str, source_lang: &str, target_lang: &str)
        -> Result<Option<String>>;
}

/// A wiki source fronted by an optional on-disk article cache.
pub struct Corpus<W> {
    source: W,
    cache: Option<DiskCache>,
    languages: Vec<String>,
}

impl<W: WikiSource> Corpus<W> {
    pub fn new(source: W, languages: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            source,
            cache: None,
            languages: languages.into_iter().map(Into::into).collect(),
        }
    }

    pub fn with_cache(mut self, cache: DiskCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn source(&self) -> &W {
        &self.source
    }

    fn check_language(&self, language_code: &str) -> Result<()> {
        if self.languages.iter().any(|l| l == language_code) {
            Ok(())
        } else {
            Err(CorpusError::UnsupportedLanguage(language_code.to_string()))
        }
    }

    /// Fetches and segments an article. A warm cache entry for
    /// `(language_code, title)` is returned without touching the source.
    pub fn fetch_article(&self, title: &str, language_code: &str) -> Result<Article> {
        if title.trim().is_empty() {
            return Err(CorpusError::NotFound {
                title: title.to_string(),
                language_code: language_code.to_string(),
            });
        }
        self.check_language(language_code)?;
        if let Some(cache) = &self.cache {
            if let Some(article) = cache.load_latest(language_code, title)? {
                log::debug!("cache hit for {language_code}:{title}");
                return Ok(article);
            }
        }
        let raw = self.source.fetch_page(title, language_code)?;
        let article = parse_extract(&raw)?;
        if let Some(cache) = &self.cache {
            cache.store(title, &article)?;
        }
        Ok(article)
    }

    pub fn resolve_interlanguage(
        &self,
        title: &str,
        source_lang: &str,
        target_lang: &str,
    ) -> Result<String> {
        if source_lang == target_lang {
            return Ok(title.to_string());
        }
        self.source
            .langlink(title, source_lang, target_lang)?
            .ok_or_else(|| CorpusError::NoLanglink {
                title: title.to_string(),
                source_lang: source_lang.to_string(),
                target_lang: target_lang.to_string(),
            })
    }
}
