use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use super::{Article, CorpusError, Result};

/// Article cache laid out as `<root>/<lang>/<title-slug>/<revision>.json`.
pub struct DiskCache {
    root: PathBuf,
    locks: Mutex<HashMap<PathBuf, Arc<Mutex<()>>>>,
}

/// Title with spaces as underscores and filesystem-hostile bytes
/// percent-escaped.
pub fn title_slug(title: &str) -> String {
    let mut out = String::with_capacity(title.len());
    for c in title.trim().chars() {
        match c {
            ' ' => out.push('_'),
            '/' | '\\' | ':' | '*' | '?' | '"' | '<' | '>' | '|' | '%' => {
                out.push_str(&format!("%{:02X}", c as u32))
            }
            c if c.is_control() => {
                let mut buf = [0u8; 4];
                for b in c.encode_utf8(&mut buf).bytes() {
                    out.push_str(&format!("%{b:02X}"));
                }
            }
            c => out.push(c),
        }
    }
    out
}

/// Length-then-lexicographic order, which is numeric order for decimal
/// revision ids.
fn revision_key(stem: &str) -> (usize, String) {
    (stem.len(), stem.to_string())
}

impl DiskCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            locks: Mutex::new(HashMap::new()),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn entry_dir(&self, language_code: &str, title: &str) -> PathBuf {
        self.root.join(language_code).join(title_slug(title))
    }

    fn lock_for(&self, dir: &Path) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry(dir.to_path_buf()).or_default().clone()
    }

    fn err(path: &Path, reason: impl ToString) -> CorpusError {
        CorpusError::Cache {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        }
    }

    /// The newest cached revision for `(language_code, title)`.
    pub fn load_latest(&self, language_code: &str, title: &str) -> Result<Option<Article>> {
        let dir = self.entry_dir(language_code, title);
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Self::err(&dir, e)),
        };
        let newest = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .filter_map(|p| {
                let stem = p.file_stem()?.to_str()?.to_string();
                Some((revision_key(&stem), p))
            })
            .max_by(|a, b| a.0.cmp(&b.0));
        let Some((_, path)) = newest else {
            return Ok(None);
        };
        let lock = self.lock_for(&dir);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let bytes = fs::read(&path).map_err(|e| Self::err(&path, e))?;
        let article = serde_json::from_slice(&bytes).map_err(|e| Self::err(&path, e))?;
        Ok(Some(article))
    }

    /// Writes the article under the requested title's slug.
    pub fn store(&self, requested_title: &str, article: &Article) -> Result<PathBuf> {
        let dir = self.entry_dir(&article.language_code, requested_title);
        let lock = self.lock_for(&dir);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        fs::create_dir_all(&dir).map_err(|e| Self::err(&dir, e))?;
        let path = dir.join(format!("{}.json", title_slug(&article.revision_id)));
        let tmp = dir.join(format!(".{}.tmp", title_slug(&article.revision_id)));
        let body = serde_json::to_vec_pretty(article).map_err(|e| Self::err(&path, e))?;
        fs::write(&tmp, body).map_err(|e| Self::err(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Self::err(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs() {
        assert_eq!(title_slug("Peking duck"), "Peking_duck");
        assert_eq!(title_slug("AC/DC"), "AC%2FDC");
        assert_eq!(title_slug("Canard laqué de Pékin"), "Canard_laqué_de_Pékin");
    }

    #[test]
    fn newest_revision_wins() {
        assert!(revision_key("1000") > revision_key("999"));
        assert!(revision_key("1234") > revision_key("1233"));
    }
}
