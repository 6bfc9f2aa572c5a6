//! `#:~:text=` link-to-highlight URLs.

use super::EnrichError;

pub const FRAGMENT_DIRECTIVE: &str = "#:~:text=";

/// Sentences longer than this many bytes are linked by a prefix.
pub const LONG_SENTENCE_BYTES: usize = 300;

/// Upper bound on the byte length of a long sentence's prefix.
pub const PREFIX_BYTES: usize = 150;

fn is_unreserved(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'-' | b'.' | b'_' | b'~')
}

/// Percent-encodes every byte outside `A-Z a-z 0-9 - . _ ~`. A dash at
/// either end of the term is escaped too, so it cannot be read as a
/// prefix/suffix marker.
pub fn encode_text_directive(text: &str) -> String {
    let bytes = text.as_bytes();
    let last = bytes.len().saturating_sub(1);
    let mut out = String::with_capacity(bytes.len() * 3);
    for (i, &b) in bytes.iter().enumerate() {
        let edge_dash = b == b'-' && (i == 0 || i == last);
        if is_unreserved(b) && !edge_dash {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

/// Inverse of [`encode_text_directive`]; `None` on malformed escapes or
/// invalid UTF-8.
pub fn decode_text_directive(encoded: &str) -> Option<String> {
    let bytes = encoded.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = encoded.get(i + 1..i + 3)?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).ok()
}

/// The decoded text of a link's fragment directive.
pub fn decode_highlight_link(url: &str) -> Option<String> {
    let (_, encoded) = url.split_once(FRAGMENT_DIRECTIVE)?;
    decode_text_directive(encoded)
}

/// The text a sentence is linked by: the sentence itself, or for long
/// sentences its longest prefix of at most [`PREFIX_BYTES`] bytes ending
/// before whitespace. Text without whitespace in that window is cut at the
/// last character boundary.
pub fn link_text(sentence: &str) -> &str {
    if sentence.len() <= LONG_SENTENCE_BYTES {
        return sentence;
    }
    let word_cut = sentence
        .char_indices()
        .take_while(|(i, _)| *i <= PREFIX_BYTES)
        .filter(|(i, c)| *i > 0 && c.is_whitespace())
        .map(|(i, _)| i)
        .last();
    let cut = word_cut.unwrap_or_else(|| {
        (0..=PREFIX_BYTES)
            .rev()
            .find(|&i| sentence.is_char_boundary(i))
            .unwrap_or(0)
    });
    let prefix = sentence[..cut].trim_end();
    if prefix.is_empty() {
        &sentence[..cut]
    } else {
        prefix
    }
}

/// `base_url` (fragment dropped) followed by a text directive for
/// `sentence`.
pub fn build_highlight_link(base_url: &str, sentence: &str) -> Result<String, EnrichError> {
    if sentence.trim().is_empty() {
        return Err(EnrichError::EmptyText);
    }
    let parsed = url::Url::parse(base_url)
        .map_err(|e| EnrichError::InvalidUrl(format!("{base_url}: {e}")))?;
    if parsed.host_str().is_none() {
        return Err(EnrichError::InvalidUrl(format!("{base_url}: no host")));
    }
    let base = base_url.split('#').next().unwrap_or(base_url);
    Ok(format!(
        "{base}{FRAGMENT_DIRECTIVE}{}",
        encode_text_directive(link_text(sentence))
    ))
}
