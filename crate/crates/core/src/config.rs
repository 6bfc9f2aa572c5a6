//! Pipeline configuration. Values are layered: defaults, then a key-value
//! file, then environment variables, then command-line flags.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::align::DEFAULT_K;
use crate::gapselect::DEFAULT_CAP;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("config line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("invalid value {value:?} for {key}: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("{0} must be set outside mock mode")]
    Missing(&'static str),
}

/// Environment variables and the config keys they override.
pub const ENV_KEYS: &[(&str, &str)] = &[
    ("GAPFORGE_LLM_URL", "llm.url"),
    ("GAPFORGE_LLM_MODEL", "llm.model"),
    ("GAPFORGE_LLM_KEY", "llm.key"),
    ("GAPFORGE_EMB_URL", "embedding.url"),
    ("GAPFORGE_EMB_MODEL", "embedding.model"),
    ("GAPFORGE_EMB_KEY", "embedding.key"),
    ("GAPFORGE_TRANSLATE_MODEL", "translate.model"),
    ("GAPFORGE_FAKE_NOW", "fake_now"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ChatSettings {
    pub url: Option<String>,
    pub model: String,
    pub api_key: Option<String>,
    pub temperature: f32,
    pub request_budget: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSettings {
    pub url: Option<String>,
    pub model: String,
    pub api_key: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub source_lang: String,
    pub target_langs: Vec<String>,
    pub k: usize,
    pub cap: usize,
    pub llm: ChatSettings,
    pub embedding: EmbeddingSettings,
    /// Translation reuses the LLM endpoint unless given its own URL.
    pub translate: ChatSettings,
    pub mock_mode: bool,
    /// Article source for mock mode; the bundled fixture when unset.
    pub fixtures_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub in_flight: usize,
    /// RFC 3339 timestamp stamped into datasets instead of the clock.
    pub fake_now: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let chat = |model: &str| ChatSettings {
            url: None,
            model: model.to_string(),
            api_key: None,
            temperature: 0.0,
            request_budget: None,
        };
        PipelineConfig {
            source_lang: "en".into(),
            target_langs: vec!["fr".into(), "ru".into(), "zh".into()],
            k: DEFAULT_K,
            cap: DEFAULT_CAP,
            llm: chat("gpt-4o"),
            embedding: EmbeddingSettings {
                url: None,
                model: "sentence-transformers/LaBSE".into(),
                api_key: None,
            },
            translate: chat("gpt-4o-mini"),
            mock_mode: false,
            fixtures_dir: None,
            cache_dir: Some(PathBuf::from("cache")),
            output_dir: PathBuf::from("datasets"),
            in_flight: 8,
            fake_now: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| ConfigError::InvalidValue {
            key: key.into(),
            value: value.into(),
            reason: e.to_string(),
        })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(ConfigError::InvalidValue {
            key: key.into(),
            value: value.into(),
            reason: "expected a boolean".into(),
        }),
    }
}

fn opt(value: &str) -> Option<String> {
    let v = value.trim();
    (!v.is_empty()).then(|| v.to_string())
}

/// Comma-separated language list, trimmed and lowercased.
pub fn parse_langs(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|l| l.trim().to_ascii_lowercase())
        .filter(|l| !l.is_empty())
        .collect()
}

impl PipelineConfig {
    /// Sets one key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "source_lang" => self.source_lang = value.to_ascii_lowercase(),
            "target_langs" => self.target_langs = parse_langs(value),
            "k" => self.k = parse_num(key, value)?,
            "cap" => self.cap = parse_num(key, value)?,
            "mock" => self.mock_mode = parse_bool(key, value)?,
            "fixtures_dir" => self.fixtures_dir = opt(value).map(PathBuf::from),
            "cache_dir" => self.cache_dir = opt(value).map(PathBuf::from),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "in_flight" => self.in_flight = parse_num(key, value)?,
            "fake_now" => self.fake_now = opt(value),
            "llm.url" => self.llm.url = opt(value),
            "llm.model" => self.llm.model = value.into(),
            "llm.key" => self.llm.api_key = opt(value),
            "llm.temperature" => self.llm.temperature = parse_num(key, value)?,
            "llm.budget" => self.llm.request_budget = Some(parse_num(key, value)?),
            "embedding.url" => self.embedding.url = opt(value),
            "embedding.model" => self.embedding.model = value.into(),
            "embedding.key" => self.embedding.api_key = opt(value),
            "translate.url" => self.translate.url = opt(value),
            "translate.model" => self.translate.model = value.into(),
            "translate.key" => self.translate.api_key = opt(value),
            "translate.temperature" => self.translate.temperature = parse_num(key, value)?,
            "translate.budget" => self.translate.request_budget = Some(parse_num(key, value)?),
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    /// Applies `key = value` lines. `#` starts a comment line.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: line.into(),
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        self.apply_text(&text)
    }

    /// Applies the recognised variables among `vars`.
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<(), ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        for (name, value) in vars {
            if let Some((_, key)) = ENV_KEYS.iter().find(|(n, _)| *n == name.as_ref()) {
                self.set(key, value.as_ref())?;
            }
        }
        Ok(())
    }

    /// Defaults, then `file`, then `env`, then `flags`, then validation.
    pub fn layered<I, K, V>(
        file: Option<&Path>,
        env: I,
        flags: &[(&str, String)],
    ) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut config = PipelineConfig::default();
        if let Some(path) = file {
            config.apply_file(path)?;
        }
        config.apply_env(env)?;
        for (key, value) in flags {
            config.set(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.k < 1 {
            return invalid("k must be at least 1".into());
        }
        if self.in_flight < 1 {
            return invalid("in_flight must be at least 1".into());
        }
        let well_formed =
            |l: &str| !l.is_empty() && l.chars().all(|c| c.is_ascii_alphanumeric() || c == '-');
        if !well_formed(&self.source_lang) {
            return invalid(format!("bad source language {:?}", self.source_lang));
        }
        for (i, lang) in self.target_langs.iter().enumerate() {
            if !well_formed(lang) {
                return invalid(format!("bad target language {lang:?}"));
            }
            if *lang == self.source_lang {
                return invalid(format!("source language {lang} is also a target"));
            }
            if self.target_langs[..i].contains(lang) {
                return invalid(format!("target language {lang} listed twice"));
            }
        }
        if let Some(now) = &self.fake_now {
            if chrono::DateTime::parse_from_rfc3339(now).is_err() {
                return invalid(format!("fake_now {now:?} is not RFC 3339"));
            }
        }
        Ok(())
    }

    /// Source language followed by the targets.
    pub fn languages(&self) -> Vec<String> {
        std::iter::once(self.source_lang.clone())
            .chain(self.target_langs.iter().cloned())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = PipelineConfig::default();
        assert_eq!(c.k, 3);
        assert_eq!(c.cap, 10);
        assert_eq!(c.target_langs, vec!["fr", "ru", "zh"]);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn flags_beat_env_beat_file() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("gapforge.conf");
        std::fs::write(
            &file,
            "# comment\nllm.model = file-model\nembedding.model = file-emb\ncap = 5\ntarget_langs = fr, de\n",
        )
        .unwrap();
        let env = [
            ("GAPFORGE_LLM_MODEL", "env-model"),
            ("GAPFORGE_EMB_MODEL", "env-emb"),
            ("PATH", "/bin"),
        ];
        let c = PipelineConfig::layered(Some(&file), env, &[("llm.model", "flag-model".into())])
            .unwrap();
        assert_eq!(c.llm.model, "flag-model");
        assert_eq!(c.embedding.model, "env-emb");
        assert_eq!(c.cap, 5);
        assert_eq!(c.target_langs, vec!["fr", "de"]);
    }

    #[test]
    fn invariants() {
        let none: [(&str, &str); 0] = [];
        let err = PipelineConfig::layered(None, none, &[("k", "0".into())]).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
        let err =
            PipelineConfig::layered(None, none, &[("target_langs", "fr,en".into())]).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
        assert!(PipelineConfig::layered(None, none, &[("cap", "0".into())]).is_ok());
        assert!(matches!(
            PipelineConfig::layered(None, none, &[("cap", "-1".into())]),
            Err(ConfigError::InvalidValue { .. })
        ));
    }

    #[test]
    fn bad_lines() {
        let mut c = PipelineConfig::default();
        assert_eq!(
            c.apply_text("k 3"),
            Err(ConfigError::Syntax {
                line: 1,
                text: "k 3".into()
            })
        );
        assert_eq!(
            c.apply_text("colour = red"),
            Err(ConfigError::UnknownKey("colour".into()))
        );
    }
}
