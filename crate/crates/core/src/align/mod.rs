//! Cross-lingual fact alignment: embed facts, retrieve the nearest source
//! facts for every target fact, and ask a verifier whether the target fact
//! is inferable from any of them. Target facts that are not become gaps.

mod vector;

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decompose::AtomicFact;
use crate::prompts;
use crate::provider::{
    ChatProvider, ChatRequest, EmbeddingProvider, InFlight, Message, ProviderError, Role, Task,
};

pub use vector::{cosine, top_k_indices, EmbeddingVector};

/// Neighbor count used by the pipeline.
pub const DEFAULT_K: usize = 3;

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("provider returned {got} vectors for {expected} texts")]
    CountMismatch { expected: usize, got: usize },
    #[error("cannot embed empty text at position {0}")]
    EmptyText(usize),
    #[error("embedding has zero or non-finite norm")]
    DegenerateVector,
    #[error("neighbor count k must be at least 1")]
    InvalidK,
    #[error("neighbor facts do not match the neighbor set of {0}")]
    NeighborMismatch(String),
    #[error("provider failed for fact {fact_id}: {source}")]
    Provider {
        fact_id: String,
        #[source]
        source: ProviderError,
    },
    #[error("embedding provider failed: {0}")]
    Embedding(#[source] ProviderError),
    #[error("unusable verifier output for fact {fact_id}: {content:?}")]
    Format { fact_id: String, content: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor<S> {
    pub source_fact_id: String,
    pub cosine: S,
}

/// Retrieved source facts for one target fact, most similar first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborSet<S> {
    pub target_fact_id: String,
    pub neighbors: Vec<Neighbor<S>>,
}

impl<S: Float> NeighborSet<S> {
    pub fn empty(target_fact_id: impl Into<String>) -> Self {
        Self {
            target_fact_id: target_fact_id.into(),
            neighbors: Vec::new(),
        }
    }

    pub fn top(&self) -> Option<&Neighbor<S>> {
        self.neighbors.first()
    }

    pub fn contains(&self, source_fact_id: &str) -> bool {
        self.neighbors
            .iter()
            .any(|n| n.source_fact_id == source_fact_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum AlignmentStatus {
    Aligned { source_fact_id: String },
    Gap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentVerdict<S> {
    pub target_fact_id: String,
    pub status: AlignmentStatus,
    pub neighbor_set: NeighborSet<S>,
}

impl<S> AlignmentVerdict<S> {
    pub fn is_gap(&self) -> bool {
        self.status == AlignmentStatus::Gap
    }
}

/// A target fact with no inferable source fact, with its neighbors kept for
/// anchoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapFact<S> {
    pub fact: AtomicFact,
    pub neighbors: NeighborSet<S>,
}

/// Partition of a target article's facts.
#[derive(Debug, Clone, PartialEq)]
pub struct ArticleAlignment<S> {
    pub aligned: Vec<(AtomicFact, AlignmentVerdict<S>)>,
    pub gaps: Vec<GapFact<S>>,
}

/// Embeds `texts` in one provider call and normalizes every vector.
pub fn embed<P: EmbeddingProvider + ?Sized>(
    texts: &[&str],
    provider: &P,
) -> Result<Vec<EmbeddingVector<P::Scalar>>, AlignError> {
    if let Some(i) = texts.iter().position(|t| t.is_empty()) {
        return Err(AlignError::EmptyText(i));
    }
    if texts.is_empty() {
        return Ok(Vec::new());
    }
    let raw = provider.embed_raw(texts).map_err(AlignError::Embedding)?;
    if raw.len() != texts.len() {
        return Err(AlignError::CountMismatch {
            expected: texts.len(),
            got: raw.len(),
        });
    }
    let dim = raw[0].len();
    raw.into_iter()
        .map(|values| {
            if values.len() != dim {
                return Err(AlignError::DimensionMismatch {
                    expected: dim,
                    got: values.len(),
                });
            }
            EmbeddingVector::normalized(values)
        })
        .collect()
}

/// Embeds in batches of `batch` texts, concurrently under `in_flight`.
pub fn embed_batched<P: EmbeddingProvider + ?Sized>(
    texts: &[&str],
    provider: &P,
    in_flight: &InFlight,
    batch: usize,
) -> Result<Vec<EmbeddingVector<P::Scalar>>, AlignError> {
    let chunks: Vec<&[&str]> = texts.chunks(batch.max(1)).collect();
    let out: Vec<EmbeddingVector<P::Scalar>> = in_flight
        .map(&chunks, |i, chunk| {
            embed(chunk, provider).map_err(|e| match e {
                AlignError::EmptyText(j) => AlignError::EmptyText(i * batch.max(1) + j),
                e => e,
            })
        })?
        .into_iter()
        .flatten()
        .collect();
    if let Some(first) = out.first() {
        if let Some(bad) = out.iter().find(|v| v.dim() != first.dim()) {
            return Err(AlignError::DimensionMismatch {
                expected: first.dim(),
                got: bad.dim(),
            });
        }
    }
    Ok(out)
}

/// Exact top-`k` neighbors of each target among `sources`. Facts and
/// vectors are paired by position.
pub fn top_k_neighbors<S: Float>(
    targets: &[(&AtomicFact, &EmbeddingVector<S>)],
    sources: &[(&AtomicFact, &EmbeddingVector<S>)],
    k: usize,
) -> Result<Vec<NeighborSet<S>>, AlignError> {
    let target_vecs: Vec<_> = targets.iter().map(|(_, v)| (*v).clone()).collect();
    let source_vecs: Vec<_> = sources.iter().map(|(_, v)| (*v).clone()).collect();
    let ranked = top_k_indices(&target_vecs, &source_vecs, k)?;
    Ok(targets
        .iter()
        .zip(ranked)
        .map(|((fact, _), ranks)| NeighborSet {
            target_fact_id: fact.id.clone(),
            neighbors: ranks
                .into_iter()
                .map(|(j, cosine)| Neighbor {
                    source_fact_id: sources[j].0.id.clone(),
                    cosine,
                })
                .collect(),
        })
        .collect())
}

/// A verifier reply that names neither a neighbor nor NONE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnreadableVerdict;

/// Reads `ANSWER: <n>` or `ANSWER: NONE`; returns the zero-based neighbor
/// index, or `None` for no match.
pub fn parse_verdict(
    content: &str,
    neighbor_count: usize,
) -> Result<Option<usize>, UnreadableVerdict> {
    let lower = content.to_lowercase();
    let answer = match lower.rfind("answer:") {
        Some(i) => &lower[i + "answer:".len()..],
        None => lower.as_str(),
    };
    let token: String = answer
        .trim()
        .chars()
        .take_while(|c| c.is_alphanumeric())
        .collect();
    match token.as_str() {
        "none" | "no" | "0" => Ok(None),
        t => match t.parse::<usize>() {
            Ok(n) if (1..=neighbor_count).contains(&n) => Ok(Some(n - 1)),
            _ => Err(UnreadableVerdict),
        },
    }
}

fn numbered(neighbors: &[&AtomicFact]) -> String {
    neighbors
        .iter()
        .enumerate()
        .map(|(i, f)| format!("{}. {}", i + 1, f.text))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Asks the verifier whether `target` is inferable from any neighbor, all
/// neighbors in one request. `neighbor_facts` follows the order of
/// `neighbor_set`. An empty neighbor set is a gap without a provider call.
pub fn verify_alignment<S: Float, P: ChatProvider + ?Sized>(
    target: &AtomicFact,
    neighbor_set: NeighborSet<S>,
    neighbor_facts: &[&AtomicFact],
    provider: &P,
) -> Result<AlignmentVerdict<S>, AlignError> {
    let consistent = neighbor_set.target_fact_id == target.id
        && neighbor_facts.len() == neighbor_set.neighbors.len()
        && neighbor_facts
            .iter()
            .zip(&neighbor_set.neighbors)
            .all(|(f, n)| f.id == n.source_fact_id);
    if !consistent {
        return Err(AlignError::NeighborMismatch(target.id.clone()));
    }
    let verdict = |status| AlignmentVerdict {
        target_fact_id: target.id.clone(),
        status,
        neighbor_set: neighbor_set.clone(),
    };
    if neighbor_facts.is_empty() {
        return Ok(verdict(AlignmentStatus::Gap));
    }

    let source_lang = neighbor_facts[0].language_code.as_str();
    let listing = numbered(neighbor_facts);
    let messages = prompts::render(
        "verify",
        &[
            ("target", &target.text),
            ("target_lang", &target.language_code),
            ("source_lang", source_lang),
            ("neighbors", &listing),
        ],
    )
    .unwrap_or_default();
    let mut request = ChatRequest {
        task: Task::Verify {
            target: target.text.clone(),
            neighbors: neighbor_facts.iter().map(|f| f.text.clone()).collect(),
        },
        messages,
        retry: false,
    };
    let provider_err = |source| AlignError::Provider {
        fact_id: target.id.clone(),
        source,
    };

    let mut content = provider.complete(&request).map_err(provider_err)?.content;
    let mut parsed = parse_verdict(&content, neighbor_facts.len());
    if parsed.is_err() {
        log::warn!(
            "verifier output for {} unusable, retrying: {content:?}",
            target.id
        );
        request.messages.push(Message {
            role: Role::Assistant,
            content: content.clone(),
        });
        request.messages.push(prompts::retry_message("verify"));
        request.retry = true;
        content = provider.complete(&request).map_err(provider_err)?.content;
        parsed = parse_verdict(&content, neighbor_facts.len());
    }
    let choice = parsed.map_err(|_| AlignError::Format {
        fact_id: target.id.clone(),
        content,
    })?;
    Ok(verdict(match choice {
        Some(i) => AlignmentStatus::Aligned {
            source_fact_id: neighbor_facts[i].id.clone(),
        },
        None => AlignmentStatus::Gap,
    }))
}

/// Classifies every target fact as aligned or gap. The output preserves
/// target fact order regardless of call completion order.
pub fn classify_article_pair<S, C, E>(
    source_facts: &[AtomicFact],
    target_facts: &[AtomicFact],
    chat: &C,
    embedder: &E,
    k: usize,
    in_flight: &InFlight,
) -> Result<ArticleAlignment<S>, AlignError>
where
    S: Float + Send + Sync,
    C: ChatProvider + ?Sized,
    E: EmbeddingProvider<Scalar = S> + ?Sized,
{
    if k == 0 {
        return Err(AlignError::InvalidK);
    }
    let mut out = ArticleAlignment {
        aligned: Vec::new(),
        gaps: Vec::new(),
    };
    if target_facts.is_empty() {
        return Ok(out);
    }

    let neighbor_sets: Vec<NeighborSet<S>> = if source_facts.is_empty() {
        target_facts
            .iter()
            .map(|f| NeighborSet::empty(&f.id))
            .collect()
    } else {
        const BATCH: usize = 64;
        fn texts(facts: &[AtomicFact]) -> Vec<&str> {
            facts.iter().map(|f| f.text.as_str()).collect()
        }
        let source_vecs = embed_batched(&texts(source_facts), embedder, in_flight, BATCH)?;
        let target_vecs = embed_batched(&texts(target_facts), embedder, in_flight, BATCH)?;
        let sources: Vec<_> = source_facts.iter().zip(&source_vecs).collect();
        let targets: Vec<_> = target_facts.iter().zip(&target_vecs).collect();
        top_k_neighbors(&targets, &sources, k)?
    };

    let by_id: std::collections::HashMap<&str, &AtomicFact> =
        source_facts.iter().map(|f| (f.id.as_str(), f)).collect();
    let jobs: Vec<(&AtomicFact, NeighborSet<S>)> = target_facts.iter().zip(neighbor_sets).collect();
    let verdicts = in_flight.map(&jobs, |_, (target, set)| {
        let facts: Vec<&AtomicFact> = set
            .neighbors
            .iter()
            .map(|n| by_id[n.source_fact_id.as_str()])
            .collect();
        verify_alignment(target, set.clone(), &facts, chat)
    })?;

    for ((fact, _), verdict) in jobs.into_iter().zip(verdicts) {
        if verdict.is_gap() {
            out.gaps.push(GapFact {
                fact: fact.clone(),
                neighbors: verdict.neighbor_set,
            });
        } else {
            out.aligned.push((fact.clone(), verdict));
        }
    }
    Ok(out)
}
