//! Versioned prompt templates. Templates live in `prompts/` and are compiled
//! in; their combined digest is recorded in every dataset's provenance.

use sha2::{Digest, Sha256};

use crate::provider::{Message, Role};

const TEMPLATES: &[(&str, &str)] = &[
    ("decompose.en", include_str!("../prompts/decompose.en.txt")),
    ("decompose.fr", include_str!("../prompts/decompose.fr.txt")),
    ("decompose.ru", include_str!("../prompts/decompose.ru.txt")),
    ("decompose.zh", include_str!("../prompts/decompose.zh.txt")),
    ("verify", include_str!("../prompts/verify.txt")),
    ("translate", include_str!("../prompts/translate.txt")),
    (
        "retry.decompose",
        include_str!("../prompts/retry.decompose.txt"),
    ),
    ("retry.verify", include_str!("../prompts/retry.verify.txt")),
    (
        "retry.translate",
        include_str!("../prompts/retry.translate.txt"),
    ),
];

pub fn template(name: &str) -> Option<&'static str> {
    TEMPLATES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn has_decompose_template(language_code: &str) -> bool {
    template(&format!("decompose.{language_code}")).is_some()
}

fn fill(text: &str, vars: &[(&str, &str)]) -> String {
    vars.iter().fold(text.to_string(), |acc, (k, v)| {
        acc.replace(&format!("{{{k}}}"), v)
    })
}

/// Renders a `[system]` / `[user]` template into chat messages.
pub fn render(name: &str, vars: &[(&str, &str)]) -> Option<Vec<Message>> {
    let body = template(name)?;
    let mut messages = Vec::new();
    let mut role = None;
    let mut buf = String::new();
    let flush = |role: Option<Role>, buf: &mut String, out: &mut Vec<Message>| {
        if let Some(role) = role {
            out.push(Message {
                role,
                content: fill(buf.trim_end(), vars),
            });
        }
        buf.clear();
    };
    for line in body.lines() {
        let next = match line.trim() {
            "[system]" => Some(Role::System),
            "[user]" => Some(Role::User),
            _ => None,
        };
        if next.is_some() {
            flush(role, &mut buf, &mut messages);
            role = next;
        } else {
            buf.push_str(line);
            buf.push('\n');
        }
    }
    flush(role, &mut buf, &mut messages);
    Some(messages)
}

/// The stricter follow-up message sent on a format retry.
pub fn retry_message(task: &str) -> Message {
    Message {
        role: Role::User,
        content: template(&format!("retry.{task}"))
            .unwrap_or_default()
            .trim()
            .to_string(),
    }
}

/// Hex SHA-256 over every template name and body.
pub fn prompt_hash() -> String {
    let mut hasher = Sha256::new();
    for (name, body) in TEMPLATES {
        hasher.update((name.len() as u64).to_le_bytes());
        hasher.update(name.as_bytes());
        hasher.update((body.len() as u64).to_le_bytes());
        hasher.update(body.as_bytes());
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_languages() {
        for lang in ["en", "fr", "ru", "zh"] {
            assert!(has_decompose_template(lang));
        }
        assert!(!has_decompose_template("de"));
    }

    #[test]
    fn renders_system_and_user() {
        let msgs = render(
            "decompose.en",
            &[("title", "Oolong"), ("paragraph", "Tea.")],
        )
        .unwrap();
        assert_eq!(msgs.len(), 2);
        assert_eq!(msgs[0].role, Role::System);
        assert!(msgs[0].content.contains("\"Oolong\""));
        assert!(msgs[1].content.ends_with("Tea."));
        assert!(!msgs[1].content.contains('{'));
    }

    #[test]
    fn hash_is_stable_hex() {
        let h = prompt_hash();
        assert_eq!(h.len(), 64);
        assert_eq!(h, prompt_hash());
    }
}
