use std::time::Duration;

use serde::Deserialize;

use super::{CorpusError, RawPage, Result, WikiSource};

const USER_AGENT: &str = concat!(
    "gapforge/",
    env!("CARGO_PKG_VERSION"),
    " (knowledge-gap research tool)"
);

/// MediaWiki action API client. Plain-text extracts carry `== Heading ==`
/// section markers; infoboxes, tables, references and captions are already
/// dropped by the extract endpoint.
pub struct HttpWiki {
    client: reqwest::blocking::Client,
    /// API URL with a `{lang}` placeholder.
    api_template: String,
}

#[derive(Deserialize)]
struct QueryResponse {
    query: Option<Query>,
}

#[derive(Deserialize)]
struct Query {
    #[serde(default)]
    pages: Vec<Page>,
}

#[derive(Deserialize)]
struct Page {
    title: String,
    #[serde(default)]
    missing: bool,
    #[serde(default)]
    invalid: bool,
    extract: Option<String>,
    canonicalurl: Option<String>,
    fullurl: Option<String>,
    #[serde(default)]
    revisions: Vec<Revision>,
    #[serde(default)]
    langlinks: Vec<Langlink>,
}

#[derive(Deserialize)]
struct Revision {
    revid: u64,
}

#[derive(Deserialize)]
struct Langlink {
    title: String,
}

impl HttpWiki {
    pub fn new() -> Result<Self> {
        Self::with_template("https://{lang}.wikipedia.org/w/api.php")
    }

    pub fn with_template(api_template: impl Into<String>) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .user_agent(USER_AGENT)
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| CorpusError::Network(e.to_string()))?;
        Ok(Self {
            client,
            api_template: api_template.into(),
        })
    }

    fn query(&self, language_code: &str, params: &[(&str, &str)]) -> Result<Page> {
        let url = self.api_template.replace("{lang}", language_code);
        let mut all: Vec<(&str, &str)> = vec![
            ("action", "query"),
            ("format", "json"),
            ("formatversion", "2"),
            ("redirects", "1"),
        ];
        all.extend_from_slice(params);
        let resp = self
            .client
            .get(&url)
            .query(&all)
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| CorpusError::Network(e.to_string()))?;
        let body: QueryResponse = resp.json().map_err(|e| CorpusError::Parse {
            title: params
                .iter()
                .find(|(k, _)| *k == "titles")
                .map(|(_, v)| v.to_string())
                .unwrap_or_default(),
            reason: e.to_string(),
        })?;
        body.query
            .and_then(|q| q.pages.into_iter().next())
            .ok_or_else(|| CorpusError::Parse {
                title: String::new(),
                reason: "response has no pages".into(),
            })
    }
}

impl WikiSource for HttpWiki {
    fn fetch_page(&self, title: &str, language_code: &str) -> Result<RawPage> {
        let page = self.query(
            language_code,
            &[
                ("prop", "extracts|info|revisions"),
                ("explaintext", "1"),
                ("exsectionformat", "wiki"),
                ("inprop", "url"),
                ("rvprop", "ids"),
                ("titles", title),
            ],
        )?;
        if page.missing || page.invalid {
            return Err(CorpusError::NotFound {
                title: title.to_string(),
                language_code: language_code.to_string(),
            });
        }
        let parse_err = |reason: &str| CorpusError::Parse {
            title: page.title.clone(),
            reason: reason.to_string(),
        };
        let revision_id = page
            .revisions
            .first()
            .map(|r| r.revid.to_string())
            .ok_or_else(|| parse_err("no revision id"))?;
        let canonical_url = page
            .canonicalurl
            .clone()
            .or_else(|| page.fullurl.clone())
            .ok_or_else(|| parse_err("no canonical url"))?;
        let extract = page
            .extract
            .clone()
            .ok_or_else(|| parse_err("no extract"))?;
        Ok(RawPage {
            title: page.title,
            language_code: language_code.to_string(),
            revision_id,
            canonical_url,
            extract,
        })
    }

    fn langlink(
        &self,
        title: &str,
        source_lang: &str,
        target_lang: &str,
    ) -> Result<Option<String>> {
        let page = self.query(
            source_lang,
            &[
                ("prop", "langlinks"),
                ("lllang", target_lang),
                ("titles", title),
            ],
        )?;
        if page.missing || page.invalid {
            return Err(CorpusError::NotFound {
                title: title.to_string(),
                language_code: source_lang.to_string(),
            });
        }
        Ok(page.langlinks.into_iter().next().map(|l| l.title))
    }
}
