use std::marker::PhantomData;

use num_traits::Float;

use super::{ChatProvider, ChatRequest, ChatResponse, EmbeddingProvider, ProviderError, Task};
use crate::corpus::split_sentences;

/// Casefolds, strips punctuation and collapses whitespace.
pub fn normalize_for_containment(text: &str) -> String {
    let cleaned: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Deterministic chat provider.
///
/// * decomposition returns the paragraph's sentences, one per line;
/// * verification answers with the first neighbor whose normalized text
///   contains the normalized target, or is contained by it;
/// * translation prefixes the text with a `[<lang>] ` marker.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockChat;

impl MockChat {
    pub fn translation_marker(source_lang: &str) -> String {
        format!("[{source_lang}] ")
    }

    /// Index of the first neighbor the target is inferable from.
    pub fn inferable_from(target: &str, neighbors: &[String]) -> Option<usize> {
        let t = normalize_for_containment(target);
        neighbors.iter().position(|n| {
            let n = normalize_for_containment(n);
            !t.is_empty() && !n.is_empty() && (n.contains(&t) || t.contains(&n))
        })
    }
}

impl ChatProvider for MockChat {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        Ok(match &request.task {
            Task::Decompose {
                language_code,
                paragraph,
                ..
            } => {
                let sentences = split_sentences(paragraph, language_code);
                ChatResponse {
                    content: sentences
                        .iter()
                        .map(|s| s.text.replace(['\n', '\r'], " "))
                        .collect::<Vec<_>>()
                        .join("\n"),
                    source_sentences: Some(sentences.iter().map(|s| s.index).collect()),
                }
            }
            Task::Verify { target, neighbors } => {
                let answer = match Self::inferable_from(target, neighbors) {
                    Some(i) => format!("ANSWER: {}", i + 1),
                    None => "ANSWER: NONE".to_string(),
                };
                ChatResponse::text(answer)
            }
            Task::Translate { text, source_lang } => {
                ChatResponse::text(format!("{}{}", Self::translation_marker(source_lang), text))
            }
        })
    }

    fn model(&self) -> String {
        "mock-chat".into()
    }
}

/// Deterministic, language-blind embedder: feature hashing of casefolded
/// character trigrams into `dim` count buckets. Counts never cancel, so any
/// nonempty text yields a nonzero vector.
#[derive(Debug, Clone, Copy)]
pub struct MockEmbedder<S = f64> {
    dim: usize,
    seed: u64,
    _scalar: PhantomData<S>,
}

impl<S> MockEmbedder<S> {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self {
            dim,
            seed,
            _scalar: PhantomData,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl<S> Default for MockEmbedder<S> {
    fn default() -> Self {
        Self::new(64, 0x9e37_79b9_7f4a_7c15)
    }
}

fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325 ^ seed;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    // final avalanche so low bits depend on every input byte
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^ (h >> 33)
}

impl<S: Float + Send + Sync> MockEmbedder<S> {
    fn embed_one(&self, text: &str) -> Vec<S> {
        let padded: Vec<char> = std::iter::once(' ')
            .chain(text.chars().flat_map(char::to_lowercase))
            .chain(std::iter::once(' '))
            .collect();
        let mut v = vec![S::zero(); self.dim];
        let mut buf = String::new();
        for gram in padded.windows(3) {
            buf.clear();
            buf.extend(gram);
            let h = fnv1a(self.seed, buf.as_bytes());
            let slot = (h % self.dim as u64) as usize;
            v[slot] = v[slot] + S::one();
        }
        v
    }
}

impl<S: Float + Send + Sync> EmbeddingProvider for MockEmbedder<S> {
    type Scalar = S;

    fn embed_raw(&self, texts: &[&str]) -> Result<Vec<Vec<S>>, ProviderError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }

    fn model(&self) -> String {
        format!("mock-trigram-hash-{}", self.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        assert_eq!(
            normalize_for_containment("  Oolong, is  A tea! "),
            "oolong is a tea"
        );
        assert_eq!(normalize_for_containment("北京烤鸭。"), "北京烤鸭");
    }

    #[test]
    fn containment_either_way() {
        let n = vec![
            "Something else.".to_string(),
            "Oolong is a semi-oxidized Chinese tea.".to_string(),
        ];
        assert_eq!(
            MockChat::inferable_from("oolong is a semi oxidized", &n),
            Some(1)
        );
        assert_eq!(
            MockChat::inferable_from(
                "Oolong is a semi-oxidized Chinese tea, grown in Fujian.",
                &n
            ),
            Some(1)
        );
        assert_eq!(MockChat::inferable_from("Green tea.", &n), None);
        assert_eq!(MockChat::inferable_from("...", &n), None);
    }

    #[test]
    fn embedder_is_deterministic_and_dimensioned() {
        let e = MockEmbedder::<f64>::default();
        let a = e.embed_raw(&["a", "a", "b"]).unwrap();
        assert_eq!(a[0], a[1]);
        assert_ne!(a[0], a[2]);
        assert!(a.iter().all(|v| v.len() == 64));
        let f = MockEmbedder::<f32>::new(16, 1).embed_raw(&["a"]).unwrap();
        assert_eq!(f[0].len(), 16);
    }
}
