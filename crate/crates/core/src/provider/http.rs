use std::marker::PhantomData;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use num_traits::Float;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{ChatProvider, ChatRequest, ChatResponse, EmbeddingProvider, Message, ProviderError};

#[derive(Debug, Clone, PartialEq)]
pub struct HttpChatConfig {
    /// Base URL of an OpenAI-compatible API, or the full completions URL.
    pub url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub temperature: f32,
    /// Maximum number of requests this provider will issue; `None` is
    /// unlimited.
    pub request_budget: Option<usize>,
}

/// Chat-completion client for OpenAI-compatible endpoints.
pub struct HttpChat {
    client: reqwest::blocking::Client,
    config: HttpChatConfig,
    issued: AtomicUsize,
}

#[derive(Serialize)]
struct CompletionBody<'a> {
    model: &'a str,
    temperature: f32,
    messages: &'a [Message],
}

#[derive(Deserialize)]
struct CompletionReply {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Deserialize)]
struct ReplyMessage {
    content: Option<String>,
}

fn endpoint(base: &str, suffix: &str) -> String {
    let base = base.trim_end_matches('/');
    if base.ends_with(suffix) {
        base.to_string()
    } else {
        format!("{base}{suffix}")
    }
}

fn client() -> Result<reqwest::blocking::Client, ProviderError> {
    reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(120))
        .build()
        .map_err(|e| ProviderError::Transport(e.to_string()))
}

fn send<B: Serialize, R: DeserializeOwned>(
    client: &reqwest::blocking::Client,
    url: &str,
    key: Option<&str>,
    body: &B,
) -> Result<R, ProviderError> {
    let mut req = client.post(url).json(body);
    if let Some(key) = key {
        req = req.bearer_auth(key);
    }
    let resp = req
        .send()
        .map_err(|e| ProviderError::Transport(e.to_string()))?;
    let status = resp.status();
    if status.as_u16() == 429 {
        return Err(ProviderError::Quota(status.to_string()));
    }
    if !status.is_success() {
        let text = resp.text().unwrap_or_default();
        return Err(ProviderError::Transport(format!("{status}: {text}")));
    }
    resp.json()
        .map_err(|e| ProviderError::Response(e.to_string()))
}

impl HttpChat {
    pub fn new(config: HttpChatConfig) -> Result<Self, ProviderError> {
        Ok(Self {
            client: client()?,
            config,
            issued: AtomicUsize::new(0),
        })
    }

    pub fn config(&self) -> &HttpChatConfig {
        &self.config
    }

    fn take_budget(&self) -> Result<(), ProviderError> {
        let n = self.issued.fetch_add(1, Ordering::SeqCst);
        match self.config.request_budget {
            Some(budget) if n >= budget => Err(ProviderError::BudgetExhausted(budget)),
            _ => Ok(()),
        }
    }
}

impl ChatProvider for HttpChat {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        self.take_budget()?;
        let url = endpoint(&self.config.url, "/chat/completions");
        let body = CompletionBody {
            model: &self.config.model,
            temperature: self.config.temperature,
            messages: &request.messages,
        };
        let reply: CompletionReply =
            send(&self.client, &url, self.config.api_key.as_deref(), &body)?;
        let content = reply
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| ProviderError::Response("no choices in reply".into()))?;
        log::debug!("{} raw reply: {content:?}", self.config.model);
        Ok(ChatResponse::text(content))
    }

    fn model(&self) -> String {
        self.config.model.clone()
    }
}

/// Embedding client for OpenAI-compatible `/embeddings` endpoints.
pub struct HttpEmbedder<S = f64> {
    client: reqwest::blocking::Client,
    url: String,
    model: String,
    api_key: Option<String>,
    _scalar: PhantomData<S>,
}

#[derive(Serialize)]
struct EmbeddingBody<'a> {
    model: &'a str,
    input: &'a [&'a str],
}

#[derive(Deserialize)]
#[serde(bound = "S: DeserializeOwned")]
struct EmbeddingReply<S> {
    data: Vec<EmbeddingItem<S>>,
}

#[derive(Deserialize)]
#[serde(bound = "S: DeserializeOwned")]
struct EmbeddingItem<S> {
    #[serde(default)]
    index: Option<usize>,
    embedding: Vec<S>,
}

impl<S> HttpEmbedder<S> {
    pub fn new(
        url: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
    ) -> Result<Self, ProviderError> {
        Ok(Self {
            client: client()?,
            url: url.into(),
            model: model.into(),
            api_key,
            _scalar: PhantomData,
        })
    }
}

impl<S> EmbeddingProvider for HttpEmbedder<S>
where
    S: Float + DeserializeOwned + Send + Sync,
{
    type Scalar = S;

    fn embed_raw(&self, texts: &[&str]) -> Result<Vec<Vec<S>>, ProviderError> {
        let url = endpoint(&self.url, "/embeddings");
        let body = EmbeddingBody {
            model: &self.model,
            input: texts,
        };
        let mut reply: EmbeddingReply<S> =
            send(&self.client, &url, self.api_key.as_deref(), &body)?;
        if reply.data.len() != texts.len() {
            return Err(ProviderError::Response(format!(
                "asked for {} embeddings, got {}",
                texts.len(),
                reply.data.len()
            )));
        }
        reply.data.sort_by_key(|d| d.index.unwrap_or(0));
        Ok(reply.data.into_iter().map(|d| d.embedding).collect())
    }

    fn model(&self) -> String {
        self.model.clone()
    }
}
