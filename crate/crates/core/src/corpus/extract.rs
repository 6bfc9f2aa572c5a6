use super::{Article, CorpusError, Paragraph, RawPage, Result, Section};

/// Heading level and text for a `== Heading ==` line.
fn heading(line: &str) -> Option<(usize, &str)> {
    let t = line.trim();
    let open = t.chars().take_while(|&c| c == '=').count();
    let close = t.chars().rev().take_while(|&c| c == '=').count();
    if open < 2 || open != close || t.len() <= open * 2 {
        return None;
    }
    let inner = t[open..t.len() - close].trim();
    (!inner.is_empty()).then_some((open - 1, inner))
}

/// Builds a segmented article from a plain-text extract.
///
/// Each non-blank line outside a heading is one paragraph, which is how the
/// plain-text extract delivers prose. Paragraphs are indexed globally in
/// document order; text before the first heading forms the lead section.
pub fn parse_extract(raw: &RawPage) -> Result<Article> {
    let parse_err = |reason: &str| CorpusError::Parse {
        title: raw.title.clone(),
        reason: reason.to_string(),
    };
    if raw.extract.trim().is_empty() {
        return Err(parse_err("empty extract"));
    }

    let mut sections = vec![Section {
        index: 0,
        heading: String::new(),
        level: 1,
    }];
    let mut paragraphs = Vec::new();
    for line in raw.extract.lines() {
        if line.trim().is_empty() {
            continue;
        }
        if let Some((level, text)) = heading(line) {
            sections.push(Section {
                index: sections.len(),
                heading: text.to_string(),
                level,
            });
            continue;
        }
        let section_index = sections.len() - 1;
        paragraphs.push(Paragraph::new(
            paragraphs.len(),
            section_index,
            line.trim().to_string(),
            &raw.language_code,
        ));
    }
    if paragraphs.is_empty() {
        return Err(parse_err("no prose paragraphs"));
    }

    let article = Article {
        language_code: raw.language_code.clone(),
        title: raw.title.clone(),
        revision_id: raw.revision_id.clone(),
        canonical_url: raw.canonical_url.clone(),
        sections,
        paragraphs,
    };
    article.check().map_err(|r| parse_err(&r))?;
    Ok(article)
}
