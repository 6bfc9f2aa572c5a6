//! End-to-end build: corpus, decompose, align, gapselect, enrich, datastore.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use indexmap::IndexMap;
use thiserror::Error;

use crate::align::{classify_article_pair, AlignError};
use crate::config::{ConfigError, PipelineConfig};
use crate::corpus::{
    bundled_fixture, Corpus, CorpusError, DiskCache, FixtureWiki, HttpWiki, WikiSource,
};
use crate::datastore::{
    merge_language_outputs, write_dataset, DatasetError, LanguageOutput, MergeMetadata,
    TopicDataset,
};
use crate::decompose::{decompose_article, DecomposeError};
use crate::enrich::{enrich_selection, EnrichError};
use crate::gapselect::{select_for_topic, GapInventory, SelectError};
use crate::prompts::prompt_hash;
use crate::provider::{
    ChatProvider, EmbeddingProvider, HttpChat, HttpChatConfig, HttpEmbedder, InFlight, MockChat,
    MockEmbedder, ProviderError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("provider setup: {0}")]
    ProviderSetup(#[source] ProviderError),
    #[error("corpus: {0}")]
    Corpus(#[source] CorpusError),
    #[error("decompose ({language}): {source}")]
    Decompose {
        language: String,
        #[source]
        source: DecomposeError,
    },
    #[error("align ({language}): {source}")]
    Align {
        language: String,
        #[source]
        source: AlignError,
    },
    #[error("gapselect: {0}")]
    Select(#[source] SelectError),
    #[error("enrich: {0}")]
    Enrich(#[source] EnrichError),
    #[error("datastore: {0}")]
    Datastore(#[source] DatasetError),
}

impl PipelineError {
    pub fn stage(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::ProviderSetup(_) => "provider",
            Self::Corpus(_) => "corpus",
            Self::Decompose { .. } => "decompose",
            Self::Align { .. } => "align",
            Self::Select(_) => "gapselect",
            Self::Enrich(_) => "enrich",
            Self::Datastore(_) => "datastore",
        }
    }

    /// Whether the failure came from a model or network provider.
    pub fn is_provider_failure(&self) -> bool {
        match self {
            Self::ProviderSetup(_) => true,
            Self::Corpus(e) => matches!(e, CorpusError::Network(_)),
            Self::Decompose { source, .. } => {
                matches!(
                    source,
                    DecomposeError::Provider { .. } | DecomposeError::Format { .. }
                )
            }
            Self::Align { source, .. } => matches!(
                source,
                AlignError::Provider { .. } | AlignError::Embedding(_) | AlignError::Format { .. }
            ),
            Self::Enrich(e) => matches!(
                e.root(),
                EnrichError::Provider(_) | EnrichError::Format(_) | EnrichError::Embedding(_)
            ),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LanguageSummary {
    pub language_code: String,
    /// Target-language title, `None` when the language was skipped.
    pub title: Option<String>,
    pub facts: usize,
    pub gaps: usize,
    pub selected: usize,
}

#[derive(Debug, Clone)]
pub struct BuildReport {
    pub path: PathBuf,
    pub dataset: TopicDataset,
    pub languages: Vec<LanguageSummary>,
    pub english_facts: usize,
}

/// Builds `topic` with providers and article source chosen by `config`.
pub fn build(topic: &str, config: &PipelineConfig) -> Result<BuildReport, PipelineError> {
    config.validate()?;
    if config.mock_mode {
        let wiki = match &config.fixtures_dir {
            Some(dir) => FixtureWiki::from_dir(dir).map_err(PipelineError::Corpus)?,
            None => bundled_fixture(),
        };
        let corpus = Corpus::new(wiki, config.languages());
        let embedder: MockEmbedder<f64> = MockEmbedder::default();
        return build_with(topic, config, &corpus, &MockChat, &MockChat, &embedder);
    }

    let llm_url = config
        .llm
        .url
        .clone()
        .ok_or(ConfigError::Missing("llm.url"))?;
    let emb_url = config
        .embedding
        .url
        .clone()
        .ok_or(ConfigError::Missing("embedding.url"))?;
    let chat = HttpChat::new(HttpChatConfig {
        url: llm_url.clone(),
        model: config.llm.model.clone(),
        api_key: config.llm.api_key.clone(),
        temperature: config.llm.temperature,
        request_budget: config.llm.request_budget,
    })
    .map_err(PipelineError::ProviderSetup)?;
    let translator = HttpChat::new(HttpChatConfig {
        url: config.translate.url.clone().unwrap_or(llm_url),
        model: config.translate.model.clone(),
        api_key: config
            .translate
            .api_key
            .clone()
            .or_else(|| config.llm.api_key.clone()),
        temperature: config.translate.temperature,
        request_budget: config.translate.request_budget,
    })
    .map_err(PipelineError::ProviderSetup)?;
    let embedder: HttpEmbedder<f64> = HttpEmbedder::new(
        emb_url,
        config.embedding.model.clone(),
        config
            .embedding
            .api_key
            .clone()
            .or_else(|| config.llm.api_key.clone()),
    )
    .map_err(PipelineError::ProviderSetup)?;
    let mut corpus = Corpus::new(
        HttpWiki::new().map_err(PipelineError::Corpus)?,
        config.languages(),
    );
    if let Some(dir) = &config.cache_dir {
        corpus = corpus.with_cache(DiskCache::new(dir));
    }
    build_with(topic, config, &corpus, &chat, &translator, &embedder)
}

/// [`build`] with explicit collaborators.
pub fn build_with<W, C, T, E>(
    topic: &str,
    config: &PipelineConfig,
    corpus: &Corpus<W>,
    chat: &C,
    translator: &T,
    embedder: &E,
) -> Result<BuildReport, PipelineError>
where
    W: WikiSource,
    C: ChatProvider + ?Sized,
    T: ChatProvider + ?Sized,
    E: EmbeddingProvider + ?Sized,
{
    config.validate()?;
    let in_flight = InFlight::new(config.in_flight);
    let source_lang = config.source_lang.as_str();

    let english = corpus
        .fetch_article(topic, source_lang)
        .map_err(PipelineError::Corpus)?;
    let english_facts = decompose_article(&english, chat, &in_flight).map_err(|source| {
        PipelineError::Decompose {
            language: source_lang.to_string(),
            source,
        }
    })?;
    log::info!(
        "{source_lang}: {} facts in {:?}",
        english_facts.len(),
        english.title
    );

    let mut summaries = Vec::new();
    let mut inventories = IndexMap::new();
    let mut targets = HashMap::new();
    let mut revisions = BTreeMap::new();
    for lang in &config.target_langs {
        let title = match corpus.resolve_interlanguage(&english.title, source_lang, lang) {
            Ok(t) => t,
            Err(CorpusError::NoLanglink { .. }) => {
                log::warn!(
                    "{lang}: no article linked from {:?}, skipping",
                    english.title
                );
                summaries.push(LanguageSummary {
                    language_code: lang.clone(),
                    title: None,
                    facts: 0,
                    gaps: 0,
                    selected: 0,
                });
                continue;
            }
            Err(e) => return Err(PipelineError::Corpus(e)),
        };
        let article = corpus
            .fetch_article(&title, lang)
            .map_err(PipelineError::Corpus)?;
        let facts = decompose_article(&article, chat, &in_flight).map_err(|source| {
            PipelineError::Decompose {
                language: lang.clone(),
                source,
            }
        })?;
        let alignment =
            classify_article_pair(&english_facts, &facts, chat, embedder, config.k, &in_flight)
                .map_err(|source| PipelineError::Align {
                    language: lang.clone(),
                    source,
                })?;
        log::info!(
            "{lang}: {} facts, {} gaps",
            facts.len(),
            alignment.gaps.len()
        );
        summaries.push(LanguageSummary {
            language_code: lang.clone(),
            title: Some(article.title.clone()),
            facts: facts.len(),
            gaps: alignment.gaps.len(),
            selected: 0,
        });
        inventories.insert(
            lang.clone(),
            GapInventory::new(lang.clone(), english.title.clone(), alignment.gaps),
        );
        revisions.insert(format!("revision.{lang}"), article.revision_id.clone());
        targets.insert(lang.clone(), article);
    }

    let selected = select_for_topic(&inventories, config.cap).map_err(PipelineError::Select)?;
    for s in &mut summaries {
        s.selected = selected.get(&s.language_code).map_or(0, Vec::len);
    }
    let presented = enrich_selection(
        &selected,
        &english,
        &english_facts,
        &targets,
        translator,
        embedder,
        &in_flight,
    )
    .map_err(PipelineError::Enrich)?;

    let outputs = presented
        .into_iter()
        .map(|(lang, facts)| LanguageOutput {
            language_code: lang,
            topic: english.title.clone(),
            english_revision: english.revision_id.clone(),
            facts,
        })
        .collect();
    let mut provenance = BTreeMap::from([
        ("llm.model".to_string(), chat.model()),
        ("translate.model".to_string(), translator.model()),
        ("embedding.model".to_string(), embedder.model()),
        ("prompt_hash".to_string(), prompt_hash()),
        ("selection.k".to_string(), config.k.to_string()),
        ("source_lang".to_string(), source_lang.to_string()),
        (
            "mode".to_string(),
            if config.mock_mode { "mock" } else { "live" }.to_string(),
        ),
    ]);
    provenance.extend(revisions);
    let metadata = MergeMetadata {
        generated_at: config.fake_now.clone().unwrap_or_else(now_rfc3339),
        cap: config.cap,
        language_order: config.target_langs.clone(),
        provenance,
    };
    let dataset = merge_language_outputs(&english.title, &english.revision_id, outputs, metadata)
        .map_err(PipelineError::Datastore)?;
    let path = write_dataset(&dataset, &config.output_dir).map_err(PipelineError::Datastore)?;
    Ok(BuildReport {
        path,
        dataset,
        languages: summaries,
        english_facts: english_facts.len(),
    })
}

fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}
