//! Offline wiki source backed by page files.
//!
//! A page file is a header of `key: value` lines, a `---` line, then the
//! plain-text extract:
//!
//! ```text
//! title: Peking duck
//! revision_id: 1187000001
//! canonical_url: https://en.wikipedia.org/wiki/Peking_duck
//! langlink.fr: Canard laqué de Pékin
//! ---
//! Peking duck is a dish from Beijing...
//! ```
//!
//! The language code is the name of the directory holding the file.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use super::{CorpusError, RawPage, Result, WikiSource};

#[derive(Debug, Clone)]
struct FixturePage {
    page: RawPage,
    langlinks: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default)]
pub struct FixtureWiki {
    pages: HashMap<(String, String), FixturePage>,
}

const BUNDLED: &[(&str, &str)] = &[
    ("en", include_str!("../../fixtures/wiki/en/Peking_duck.txt")),
    (
        "fr",
        include_str!("../../fixtures/wiki/fr/Canard_laqué_de_Pékin.txt"),
    ),
    (
        "ru",
        include_str!("../../fixtures/wiki/ru/Утка_по-пекински.txt"),
    ),
    ("zh", include_str!("../../fixtures/wiki/zh/北京烤鸭.txt")),
    ("en", include_str!("../../fixtures/wiki/en/Oolong.txt")),
];

/// The pages compiled into the library: "Peking duck" in en/fr/ru/zh and an
/// English-only "Oolong".
pub fn bundled_fixture() -> FixtureWiki {
    let mut wiki = FixtureWiki::default();
    for (lang, body) in BUNDLED {
        wiki.insert_text(lang, body)
            .expect("bundled fixture pages are well-formed");
    }
    wiki
}

fn normalize_title(title: &str) -> String {
    title.trim().replace('_', " ")
}

impl FixtureWiki {
    /// Loads every `<lang>/*.txt` page below `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let io_err = |p: &Path, e: std::io::Error| CorpusError::Cache {
            path: p.to_path_buf(),
            reason: e.to_string(),
        };
        let mut wiki = Self::default();
        for lang_entry in fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
            let lang_dir = lang_entry.map_err(|e| io_err(dir, e))?.path();
            if !lang_dir.is_dir() {
                continue;
            }
            let Some(lang) = lang_dir
                .file_name()
                .and_then(|n| n.to_str())
                .map(str::to_owned)
            else {
                continue;
            };
            let mut files: Vec<_> = fs::read_dir(&lang_dir)
                .map_err(|e| io_err(&lang_dir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "txt"))
                .collect();
            files.sort();
            for file in files {
                let body = fs::read_to_string(&file).map_err(|e| io_err(&file, e))?;
                wiki.insert_text(&lang, &body)?;
            }
        }
        Ok(wiki)
    }

    pub fn insert_text(&mut self, language_code: &str, body: &str) -> Result<()> {
        let (header, extract) = body
            .split_once("\n---\n")
            .ok_or_else(|| CorpusError::Parse {
                title: String::new(),
                reason: "fixture page lacks a --- separator".into(),
            })?;
        let mut fields = BTreeMap::new();
        let mut langlinks = BTreeMap::new();
        for line in header.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once(':').ok_or_else(|| CorpusError::Parse {
                title: String::new(),
                reason: format!("bad fixture header line {line:?}"),
            })?;
            let (k, v) = (k.trim(), v.trim().to_string());
            match k.strip_prefix("langlink.") {
                Some(lang) => {
                    langlinks.insert(lang.to_string(), v);
                }
                None => {
                    fields.insert(k.to_string(), v);
                }
            }
        }
        let mut take = |k: &str| {
            fields.remove(k).ok_or_else(|| CorpusError::Parse {
                title: String::new(),
                reason: format!("fixture header lacks {k}"),
            })
        };
        let page = RawPage {
            title: take("title")?,
            revision_id: take("revision_id")?,
            canonical_url: take("canonical_url")?,
            language_code: language_code.to_string(),
            extract: extract.to_string(),
        };
        self.insert(page, langlinks);
        Ok(())
    }

    pub fn insert(&mut self, page: RawPage, langlinks: BTreeMap<String, String>) {
        let key = (page.language_code.clone(), normalize_title(&page.title));
        self.pages.insert(key, FixturePage { page, langlinks });
    }

    fn get(&self, title: &str, language_code: &str) -> Result<&FixturePage> {
        self.pages
            .get(&(language_code.to_string(), normalize_title(title)))
            .ok_or_else(|| CorpusError::NotFound {
                title: title.to_string(),
                language_code: language_code.to_string(),
            })
    }
}

impl WikiSource for FixtureWiki {
    fn fetch_page(&self, title: &str, language_code: &str) -> Result<RawPage> {
        Ok(self.get(title, language_code)?.page.clone())
    }

    fn langlink(
        &self,
        title: &str,
        source_lang: &str,
        target_lang: &str,
    ) -> Result<Option<String>> {
        Ok(self
            .get(title, source_lang)?
            .langlinks
            .get(target_lang)
            .cloned())
    }
}
