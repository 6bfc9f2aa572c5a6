//! Chat and embedding provider abstractions.
//!
//! Every request carries a [`Task`] describing what is being asked alongside
//! the rendered chat messages. HTTP providers send only the messages; the
//! mock providers answer from the task so that tests are deterministic and
//! oracle-checkable.

mod http;
mod mock;

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{HttpChat, HttpChatConfig, HttpEmbedder};
pub use mock::{normalize_for_containment, MockChat, MockEmbedder};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("quota exceeded: {0}")]
    Quota(String),
    #[error("request budget of {0} calls exhausted")]
    BudgetExhausted(usize),
    #[error("malformed provider response: {0}")]
    Response(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Task {
    Decompose {
        language_code: String,
        title: String,
        paragraph: String,
    },
    Verify {
        target: String,
        neighbors: Vec<String>,
    },
    Translate {
        text: String,
        source_lang: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatRequest {
    pub task: Task,
    pub messages: Vec<Message>,
    /// Set on the single retry after a format failure.
    pub retry: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChatResponse {
    pub content: String,
    /// Paragraph sentence index per output line. Only the mock reports this.
    pub source_sentences: Option<Vec<usize>>,
}

impl ChatResponse {
    pub fn text(content: impl Into<String>) -> Self {
        Self {
            content: content.into(),
            source_sentences: None,
        }
    }
}

pub trait ChatProvider: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError>;

    /// Model identifier recorded in dataset provenance.
    fn model(&self) -> String;
}

pub trait EmbeddingProvider: Send + Sync {
    type Scalar: Float + Send + Sync;

    /// Raw, not necessarily normalized, vectors in input order.
    fn embed_raw(&self, texts: &[&str]) -> Result<Vec<Vec<Self::Scalar>>, ProviderError>;

    fn model(&self) -> String;
}

impl<P: ChatProvider + ?Sized> ChatProvider for &P {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        (**self).complete(request)
    }
    fn model(&self) -> String {
        (**self).model()
    }
}

impl<P: ChatProvider + ?Sized> ChatProvider for Box<P> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        (**self).complete(request)
    }
    fn model(&self) -> String {
        (**self).model()
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for &P {
    type Scalar = P::Scalar;
    fn embed_raw(&self, texts: &[&str]) -> Result<Vec<Vec<Self::Scalar>>, ProviderError> {
        (**self).embed_raw(texts)
    }
    fn model(&self) -> String {
        (**self).model()
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    type Scalar = P::Scalar;
    fn embed_raw(&self, texts: &[&str]) -> Result<Vec<Vec<Self::Scalar>>, ProviderError> {
        (**self).embed_raw(texts)
    }
    fn model(&self) -> String {
        (**self).model()
    }
}

/// Bounds the number of provider calls in flight. Results keep input order.
pub struct InFlight {
    pool: rayon::ThreadPool,
}

impl InFlight {
    pub fn new(limit: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(limit.max(1))
            .thread_name(|i| format!("gapforge-call-{i}"))
            .build()
            .expect("thread pool");
        Self { pool }
    }

    pub fn limit(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Applies `f` to every item, returning results in input order or the
    /// error of the lowest-indexed failing item.
    pub fn map<T, R, E, F>(&self, items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(usize, &T) -> Result<R, E> + Sync,
    {
        use rayon::prelude::*;
        let results: Vec<Result<R, E>> = self
            .pool
            .install(|| items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect());
        results.into_iter().collect()
    }
}

impl Default for InFlight {
    fn default() -> Self {
        Self::new(4)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn in_flight_preserves_order_and_first_error() {
        let pool = InFlight::new(3);
        let items: Vec<u32> = (0..50).collect();
        let doubled: Vec<u32> = pool.map(&items, |_, x| Ok::<_, ()>(x * 2)).unwrap();
        assert_eq!(doubled, items.iter().map(|x| x * 2).collect::<Vec<_>>());

        let err = pool
            .map(&items, |i, _| if i % 7 == 3 { Err(i) } else { Ok(i) })
            .unwrap_err();
        assert_eq!(err, 3);
    }
}
