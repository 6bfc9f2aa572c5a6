//! Paragraph-level decomposition into atomic facts through a chat provider.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{split_sentences, Article, Paragraph};
use crate::prompts;
use crate::provider::{ChatProvider, ChatRequest, InFlight, Message, ProviderError, Role, Task};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomicFact {
    pub id: String,
    pub text: String,
    pub language_code: String,
    pub paragraph_index: usize,
    pub section_index: usize,
    /// Position within the paragraph's decomposition output.
    pub ordinal: usize,
    /// Only known under the mock provider.
    pub source_sentence_index: Option<usize>,
}

#[derive(Debug, Error)]
pub enum DecomposeError {
    #[error("no decomposition prompt for language {0}")]
    MissingTemplate(String),
    #[error("provider failed on paragraph {paragraph}: {source}")]
    Provider {
        paragraph: usize,
        #[source]
        source: ProviderError,
    },
    #[error("unusable provider output for paragraph {paragraph}: {reason}")]
    Format { paragraph: usize, reason: String },
    #[error("duplicate fact id {0}")]
    DuplicateId(String),
}

impl DecomposeError {
    pub fn paragraph(&self) -> Option<usize> {
        match self {
            Self::Provider { paragraph, .. } | Self::Format { paragraph, .. } => Some(*paragraph),
            _ => None,
        }
    }
}

/// `<lang>-` followed by 16 hex digits of a SHA-256 over the
/// length-delimited fields.
pub fn fact_id(language_code: &str, paragraph_index: usize, ordinal: usize, text: &str) -> String {
    let mut h = Sha256::new();
    for field in [
        language_code.as_bytes(),
        &(paragraph_index as u64).to_le_bytes(),
        &(ordinal as u64).to_le_bytes(),
        text.as_bytes(),
    ] {
        h.update((field.len() as u64).to_le_bytes());
        h.update(field);
    }
    let digest = h.finalize();
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    format!("{language_code}-{hex}")
}

fn strip_list_marker(line: &str) -> &str {
    let t = line.trim();
    for bullet in ["- ", "* ", "• ", "– "] {
        if let Some(rest) = t.strip_prefix(bullet) {
            return rest.trim();
        }
    }
    let digits = t.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &t[digits..];
        if let Some(r) = rest.strip_prefix(". ").or_else(|| rest.strip_prefix(") ")) {
            return r.trim();
        }
    }
    t
}

/// Parses line-per-fact output. Every fact must be a single sentence.
pub fn parse_fact_lines(content: &str, language_code: &str) -> Result<Vec<String>, String> {
    let mut facts = Vec::new();
    for line in content.lines() {
        let fact = strip_list_marker(line);
        if fact.is_empty() || fact.starts_with("```") {
            continue;
        }
        let n = split_sentences(fact, language_code).len();
        if n > 1 {
            return Err(format!("line holds {n} sentences: {fact:?}"));
        }
        facts.push(fact.to_string());
    }
    if facts.is_empty() {
        return Err("no facts in output".into());
    }
    Ok(facts)
}

/// Decomposes one paragraph, retrying once with a stricter reminder when
/// the output cannot be parsed.
pub fn decompose_paragraph<P: ChatProvider + ?Sized>(
    paragraph: &Paragraph,
    language_code: &str,
    title: &str,
    provider: &P,
) -> Result<Vec<AtomicFact>, DecomposeError> {
    if paragraph.text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let template = format!("decompose.{language_code}");
    let messages = prompts::render(
        &template,
        &[("title", title), ("paragraph", &paragraph.text)],
    )
    .ok_or_else(|| DecomposeError::MissingTemplate(language_code.to_string()))?;
    let mut request = ChatRequest {
        task: Task::Decompose {
            language_code: language_code.to_string(),
            title: title.to_string(),
            paragraph: paragraph.text.clone(),
        },
        messages,
        retry: false,
    };
    let provider_err = |source| DecomposeError::Provider {
        paragraph: paragraph.index,
        source,
    };

    let mut response = provider.complete(&request).map_err(provider_err)?;
    let mut parsed = parse_fact_lines(&response.content, language_code);
    if let Err(reason) = &parsed {
        log::warn!(
            "paragraph {} ({language_code}) output unusable ({reason}), retrying",
            paragraph.index
        );
        request.messages.push(Message {
            role: Role::Assistant,
            content: response.content.clone(),
        });
        request.messages.push(prompts::retry_message("decompose"));
        request.retry = true;
        response = provider.complete(&request).map_err(provider_err)?;
        parsed = parse_fact_lines(&response.content, language_code);
    }
    let texts = parsed.map_err(|reason| DecomposeError::Format {
        paragraph: paragraph.index,
        reason,
    })?;
    log::trace!(
        "paragraph {} raw decomposition: {:?}",
        paragraph.index,
        response.content
    );

    let sentence_hints = response
        .source_sentences
        .filter(|hints| hints.len() == texts.len());
    Ok(texts
        .into_iter()
        .enumerate()
        .map(|(ordinal, text)| AtomicFact {
            id: fact_id(language_code, paragraph.index, ordinal, &text),
            language_code: language_code.to_string(),
            paragraph_index: paragraph.index,
            section_index: paragraph.section_index,
            ordinal,
            source_sentence_index: sentence_hints.as_ref().map(|h| h[ordinal]),
            text,
        })
        .collect())
}

/// Decomposes every paragraph; results are concatenated in paragraph order.
pub fn decompose_article<P: ChatProvider + ?Sized>(
    article: &Article,
    provider: &P,
    in_flight: &InFlight,
) -> Result<Vec<AtomicFact>, DecomposeError> {
    if !prompts::has_decompose_template(&article.language_code) {
        return Err(DecomposeError::MissingTemplate(
            article.language_code.clone(),
        ));
    }
    let per_paragraph = in_flight.map(&article.paragraphs, |_, p| {
        decompose_paragraph(p, &article.language_code, &article.title, provider)
    })?;
    let facts: Vec<AtomicFact> = per_paragraph.into_iter().flatten().collect();
    let mut seen = HashSet::new();
    for f in &facts {
        if !seen.insert(f.id.as_str()) {
            return Err(DecomposeError::DuplicateId(f.id.clone()));
        }
    }
    Ok(facts)
}
