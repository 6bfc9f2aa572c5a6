//! Turns selected gaps into presentable facts: English translation, an
//! anchor sentence in the English article, and a link that highlights the
//! original sentence in the target-language article.

mod fragment;

use std::collections::HashMap;

use indexmap::IndexMap;
use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{cosine, embed, AlignError, GapFact};
use crate::corpus::{Article, Paragraph, Sentence};
use crate::decompose::AtomicFact;
use crate::prompts;
use crate::provider::{
    ChatProvider, ChatRequest, EmbeddingProvider, InFlight, Message, ProviderError, Role, Task,
};

pub use fragment::{
    build_highlight_link, decode_highlight_link, decode_text_directive, encode_text_directive,
    link_text, FRAGMENT_DIRECTIVE, LONG_SENTENCE_BYTES, PREFIX_BYTES,
};

#[derive(Debug, Error)]
pub enum EnrichError {
    #[error("text must be nonempty")]
    EmptyText,
    #[error("invalid url {0}")]
    InvalidUrl(String),
    #[error("translation provider failed: {0}")]
    Provider(#[source] ProviderError),
    #[error("unusable translation output: {0:?}")]
    Format(String),
    #[error("{0}")]
    MissingParagraph(String),
    #[error("embedding failed: {0}")]
    Embedding(#[source] AlignError),
    #[error("no article for language {0}")]
    MissingArticle(String),
    #[error("fact {fact_id}: {source}")]
    ForFact {
        fact_id: String,
        #[source]
        source: Box<EnrichError>,
    },
}

impl EnrichError {
    fn for_fact(self, fact_id: &str) -> Self {
        match self {
            e @ Self::ForFact { .. } => e,
            e => Self::ForFact {
                fact_id: fact_id.to_string(),
                source: Box::new(e),
            },
        }
    }

    /// The innermost error, past any fact context.
    pub fn root(&self) -> &EnrichError {
        match self {
            Self::ForFact { source, .. } => source.root(),
            e => e,
        }
    }
}

/// A gap fact ready for display.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresentedFact {
    pub id: String,
    pub language_code: String,
    pub text_en: String,
    pub text_src: String,
    pub source_title: String,
    pub source_link_url: String,
    pub anchor_sentence_en: String,
    pub anchor_paragraph_index: usize,
    /// Cosine of the closest English fact; 0 when there was none.
    pub similarity: f64,
    pub section_index: usize,
}

/// Translates `text` into English with one format retry.
pub fn translate<P: ChatProvider + ?Sized>(
    text: &str,
    source_lang: &str,
    provider: &P,
) -> Result<String, EnrichError> {
    if text.trim().is_empty() {
        return Err(EnrichError::EmptyText);
    }
    let messages = prompts::render("translate", &[("source_lang", source_lang), ("text", text)])
        .unwrap_or_default();
    let mut request = ChatRequest {
        task: Task::Translate {
            text: text.to_string(),
            source_lang: source_lang.to_string(),
        },
        messages,
        retry: false,
    };
    let first_line = |content: &str| {
        content
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty())
            .map(str::to_owned)
    };
    let content = provider
        .complete(&request)
        .map_err(EnrichError::Provider)?
        .content;
    if let Some(line) = first_line(&content) {
        return Ok(line);
    }
    request.messages.push(Message {
        role: Role::Assistant,
        content,
    });
    request.messages.push(prompts::retry_message("translate"));
    request.retry = true;
    let content = provider
        .complete(&request)
        .map_err(EnrichError::Provider)?
        .content;
    first_line(&content).ok_or(EnrichError::Format(content))
}

/// The sentence of `paragraph` closest to `text` by embedding cosine;
/// earlier sentences win ties.
fn closest_sentence<'a, E: EmbeddingProvider + ?Sized>(
    text: &str,
    paragraph: &'a Paragraph,
    embedder: &E,
) -> Result<&'a Sentence, EnrichError> {
    match paragraph.sentences.as_slice() {
        [] => Err(EnrichError::MissingParagraph(format!(
            "paragraph {} has no sentences",
            paragraph.index
        ))),
        [only] => Ok(only),
        sentences => {
            let mut texts = vec![text];
            texts.extend(sentences.iter().map(|s| s.text.as_str()));
            let vecs = embed(&texts, embedder).map_err(EnrichError::Embedding)?;
            let mut best = 0;
            let mut best_score = None;
            for (i, v) in vecs[1..].iter().enumerate() {
                let score = cosine(&vecs[0], v).map_err(EnrichError::Embedding)?;
                if best_score.is_none_or(|b| score > b) {
                    best = i;
                    best_score = Some(score);
                }
            }
            Ok(&sentences[best])
        }
    }
}

/// English anchor for a gap: within the paragraph of the closest English
/// fact, the sentence most similar to the gap fact. Without neighbors the
/// first lead sentence is used.
pub fn anchor_for<S: Float, E: EmbeddingProvider + ?Sized>(
    gap: &GapFact<S>,
    english_article: &Article,
    english_facts: &[AtomicFact],
    embedder: &E,
) -> Result<(String, usize), EnrichError> {
    let Some(top) = gap.neighbors.top() else {
        return english_article
            .first_lead_sentence()
            .map(|(s, p)| (s.text.clone(), p))
            .ok_or_else(|| {
                EnrichError::MissingParagraph("English article has no sentences".into())
            });
    };
    let source = english_facts
        .iter()
        .find(|f| f.id == top.source_fact_id)
        .ok_or_else(|| {
            EnrichError::MissingParagraph(format!("unknown English fact {}", top.source_fact_id))
        })?;
    let paragraph = english_article
        .paragraph(source.paragraph_index)
        .ok_or_else(|| {
            EnrichError::MissingParagraph(format!(
                "English paragraph {} not in revision {}",
                source.paragraph_index, english_article.revision_id
            ))
        })?;
    let sentence = closest_sentence(&gap.fact.text, paragraph, embedder)?;
    Ok((sentence.text.clone(), paragraph.index))
}

/// The target-article sentence a gap fact came from: the reported source
/// sentence when known, otherwise the paragraph sentence closest to the fact.
pub fn source_sentence_for<'a, E: EmbeddingProvider + ?Sized>(
    fact: &AtomicFact,
    target_article: &'a Article,
    embedder: &E,
) -> Result<&'a Sentence, EnrichError> {
    let paragraph = target_article
        .paragraph(fact.paragraph_index)
        .ok_or_else(|| {
            EnrichError::MissingParagraph(format!(
                "{} paragraph {} not in revision {}",
                target_article.language_code, fact.paragraph_index, target_article.revision_id
            ))
        })?;
    if let Some(s) = fact
        .source_sentence_index
        .and_then(|i| paragraph.sentences.get(i))
    {
        return Ok(s);
    }
    closest_sentence(&fact.text, paragraph, embedder)
}

fn present<S, C, E>(
    gap: &GapFact<S>,
    english: &Article,
    english_facts: &[AtomicFact],
    target: &Article,
    translator: &C,
    embedder: &E,
) -> Result<PresentedFact, EnrichError>
where
    S: Float,
    C: ChatProvider + ?Sized,
    E: EmbeddingProvider + ?Sized,
{
    let fact = &gap.fact;
    let text_en = translate(&fact.text, &fact.language_code, translator)?;
    let (anchor_sentence_en, anchor_paragraph_index) =
        anchor_for(gap, english, english_facts, embedder)?;
    let source_sentence = source_sentence_for(fact, target, embedder)?;
    let source_link_url = build_highlight_link(&target.canonical_url, &source_sentence.text)?;
    Ok(PresentedFact {
        id: fact.id.clone(),
        language_code: fact.language_code.clone(),
        text_en,
        text_src: fact.text.clone(),
        source_title: target.title.clone(),
        source_link_url,
        anchor_sentence_en,
        anchor_paragraph_index,
        similarity: gap
            .neighbors
            .top()
            .and_then(|n| n.cosine.to_f64())
            .unwrap_or(0.0),
        section_index: fact.section_index,
    })
}

/// One presented fact per selected gap, keeping language and fact order.
pub fn enrich_selection<S, C, E>(
    selected: &IndexMap<String, Vec<GapFact<S>>>,
    english: &Article,
    english_facts: &[AtomicFact],
    targets: &HashMap<String, Article>,
    translator: &C,
    embedder: &E,
    in_flight: &InFlight,
) -> Result<IndexMap<String, Vec<PresentedFact>>, EnrichError>
where
    S: Float + Send + Sync,
    C: ChatProvider + ?Sized,
    E: EmbeddingProvider + ?Sized,
{
    let mut out = IndexMap::new();
    for (language, gaps) in selected {
        let target = targets
            .get(language)
            .ok_or_else(|| EnrichError::MissingArticle(language.clone()))?;
        let presented = in_flight.map(gaps, |_, gap| {
            present(gap, english, english_facts, target, translator, embedder)
                .map_err(|e| e.for_fact(&gap.fact.id))
        })?;
        out.insert(language.clone(), presented);
    }
    Ok(out)
}

/// Checks the invariants a presented fact must satisfy against the articles
/// it was built from.
pub fn check_presented(
    fact: &PresentedFact,
    english: &Article,
    source: &Article,
) -> Result<(), String> {
    if fact.text_en.trim().is_empty() {
        return Err(format!("{}: empty translation", fact.id));
    }
    url::Url::parse(&fact.source_link_url).map_err(|e| format!("{}: {e}", fact.id))?;
    let linked = decode_highlight_link(&fact.source_link_url)
        .ok_or_else(|| format!("{}: no decodable text directive", fact.id))?;
    if !source.paragraphs.iter().any(|p| p.text.contains(&linked)) {
        return Err(format!("{}: linked text not in source article", fact.id));
    }
    let anchored = english
        .paragraph(fact.anchor_paragraph_index)
        .is_some_and(|p| {
            p.sentences
                .iter()
                .any(|s| s.text == fact.anchor_sentence_en)
        });
    if !anchored {
        return Err(format!(
            "{}: anchor is not a sentence of its paragraph",
            fact.id
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::{Neighbor, NeighborSet};
    use crate::corpus::{bundled_fixture, Corpus};
    use crate::decompose::decompose_article;
    use crate::provider::{MockChat, MockEmbedder};

    fn corpus() -> Corpus<crate::corpus::FixtureWiki> {
        Corpus::new(bundled_fixture(), ["en", "fr", "ru", "zh"])
    }

    /// Embeds by keyword: texts mentioning the Ming dynasty or Cixi share a
    /// direction, everything else points elsewhere.
    struct Keyword;
    impl EmbeddingProvider for Keyword {
        type Scalar = f64;
        fn embed_raw(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, ProviderError> {
            Ok(texts
                .iter()
                .map(|t| {
                    let imperial = ["Ming", "Cixi", "impératrice", "Yuan"]
                        .iter()
                        .filter(|k| t.contains(*k))
                        .count() as f64;
                    let late = if t.contains("later") || t.contains("Cixi") {
                        1.0
                    } else {
                        0.0
                    };
                    vec![imperial, late, 0.5]
                })
                .collect())
        }
        fn model(&self) -> String {
            "keyword".into()
        }
    }

    #[test]
    fn translate_mock_marks_and_rejects_empty() {
        assert_eq!(
            translate("Already English.", "en", &MockChat).unwrap(),
            "[en] Already English."
        );
        assert_eq!(
            translate(
                "Le plat devint l'un des mets favoris de l'impératrice douairière Cixi.",
                "fr",
                &MockChat
            )
            .unwrap(),
            "[fr] Le plat devint l'un des mets favoris de l'impératrice douairière Cixi."
        );
        assert!(matches!(
            translate("", "fr", &MockChat),
            Err(EnrichError::EmptyText)
        ));
    }

    #[test]
    fn cixi_fact_anchors_to_ming_sentence() {
        let c = corpus();
        let en = c.fetch_article("Peking duck", "en").unwrap();
        let fr = c.fetch_article("Canard laqué de Pékin", "fr").unwrap();
        let en_facts = decompose_article(&en, &MockChat, &InFlight::new(2)).unwrap();
        let fr_facts = decompose_article(&fr, &MockChat, &InFlight::new(2)).unwrap();
        let cixi = fr_facts
            .iter()
            .find(|f| f.text.contains("Cixi"))
            .unwrap()
            .clone();
        // the closest English fact lives in the History paragraph
        let yuan = en_facts
            .iter()
            .find(|f| f.text.contains("Yuan dynasty"))
            .unwrap();
        let gap = GapFact {
            neighbors: NeighborSet {
                target_fact_id: cixi.id.clone(),
                neighbors: vec![Neighbor {
                    source_fact_id: yuan.id.clone(),
                    cosine: 0.71,
                }],
            },
            fact: cixi,
        };
        let (anchor, para) = anchor_for(&gap, &en, &en_facts, &Keyword).unwrap();
        assert_eq!(
            anchor,
            "The Peking roast duck that came to be associated with the term was fully developed during the later Ming dynasty."
        );
        assert_eq!(para, yuan.paragraph_index);
    }

    #[test]
    fn single_sentence_paragraph_and_fallback() {
        let c = corpus();
        let en = c.fetch_article("Peking duck", "en").unwrap();
        let en_facts = decompose_article(&en, &MockChat, &InFlight::new(2)).unwrap();
        let quanjude = en_facts
            .iter()
            .find(|f| f.text.starts_with("Quanjude"))
            .unwrap();
        let target = en_facts[0].clone();
        let gap = GapFact {
            neighbors: NeighborSet {
                target_fact_id: target.id.clone(),
                neighbors: vec![Neighbor {
                    source_fact_id: quanjude.id.clone(),
                    cosine: 0.2,
                }],
            },
            fact: target.clone(),
        };
        let (anchor, _) =
            anchor_for(&gap, &en, &en_facts, &MockEmbedder::<f64>::default()).unwrap();
        assert_eq!(anchor, quanjude.text);

        let lonely = GapFact {
            neighbors: NeighborSet::<f64>::empty(&target.id),
            fact: target,
        };
        let (anchor, para) =
            anchor_for(&lonely, &en, &en_facts, &MockEmbedder::<f64>::default()).unwrap();
        assert_eq!(anchor, en.paragraphs[0].sentences[0].text);
        assert_eq!(para, 0);
    }

    #[test]
    fn stale_indices_are_reported() {
        let c = corpus();
        let en = c.fetch_article("Peking duck", "en").unwrap();
        let mut stale = decompose_article(&en, &MockChat, &InFlight::new(1)).unwrap();
        stale[0].paragraph_index = 999;
        let gap = GapFact {
            neighbors: NeighborSet {
                target_fact_id: "x".into(),
                neighbors: vec![Neighbor {
                    source_fact_id: stale[0].id.clone(),
                    cosine: 0.9,
                }],
            },
            fact: stale[1].clone(),
        };
        let err = anchor_for(&gap, &en, &stale, &MockEmbedder::<f64>::default()).unwrap_err();
        assert!(matches!(err, EnrichError::MissingParagraph(_)));
    }

    #[test]
    fn empty_selection() {
        let c = corpus();
        let en = c.fetch_article("Peking duck", "en").unwrap();
        let out = enrich_selection::<f64, _, _>(
            &IndexMap::new(),
            &en,
            &[],
            &HashMap::new(),
            &MockChat,
            &MockEmbedder::<f64>::default(),
            &InFlight::new(1),
        )
        .unwrap();
        assert!(out.is_empty());
    }
}
