//! Paragraph and sentence segmentation.
//!
//! Chinese text is split on the full-width terminators `。！？；` and on
//! newlines. Other languages split after `.`, `!` or `?` when the terminator
//! run is followed by whitespace or the end of the text; a period that ends a
//! token from the language's abbreviation list does not close a sentence.
//! Abbreviations missing from the lists may over-split.

use std::collections::{HashMap, HashSet};
use std::sync::LazyLock;

use super::{Paragraph, Sentence};

static ABBREVIATIONS: LazyLock<HashMap<&'static str, HashSet<&'static str>>> =
    LazyLock::new(|| {
        let lists = [
            ("en", include_str!("../../abbreviations/en.txt")),
            ("fr", include_str!("../../abbreviations/fr.txt")),
            ("ru", include_str!("../../abbreviations/ru.txt")),
            ("zh", include_str!("../../abbreviations/zh.txt")),
        ];
        lists
            .into_iter()
            .map(|(lang, body)| {
                let set = body
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .collect();
                (lang, set)
            })
            .collect()
    });

const CJK_TERMINATORS: [char; 4] = ['。', '！', '？', '；'];
const LATIN_TERMINATORS: [char; 4] = ['.', '!', '?', '…'];
const CLOSERS: [char; 12] = [
    '"', '\'', ')', ']', '}', '»', '”', '’', '」', '』', '）', '》',
];
const OPENERS: [char; 8] = ['(', '[', '"', '\'', '«', '“', '‘', '¿'];

/// Whether `language_code` uses the full-width terminator rules.
pub fn uses_cjk_rules(language_code: &str) -> bool {
    matches!(language_code, "zh" | "ja")
}

/// Splits raw text into paragraphs on blank lines, then into sentences.
///
/// All returned paragraphs belong to section 0 and are indexed in order.
pub fn segment(raw_text: &str, language_code: &str) -> Vec<Paragraph> {
    split_paragraphs(raw_text)
        .into_iter()
        .enumerate()
        .map(|(index, text)| Paragraph::new(index, 0, text.to_string(), language_code))
        .collect()
}

/// Blocks of text separated by lines that are empty or whitespace-only.
pub fn split_paragraphs(raw_text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let mut end = 0;
    let mut offset = 0;
    for line in raw_text.split_inclusive('\n') {
        let content_end = offset + line.trim_end_matches(['\n', '\r']).len();
        if line.trim().is_empty() {
            if let Some(s) = start.take() {
                out.push(raw_text[s..end].trim());
            }
        } else {
            if start.is_none() {
                start = Some(offset);
            }
            end = content_end;
        }
        offset += line.len();
    }
    if let Some(s) = start {
        out.push(raw_text[s..end].trim());
    }
    out.retain(|p| !p.is_empty());
    out
}

/// Splits one paragraph into sentences with byte spans into `text`.
pub fn split_sentences(text: &str, language_code: &str) -> Vec<Sentence> {
    let cuts = if uses_cjk_rules(language_code) {
        cjk_boundaries(text)
    } else {
        latin_boundaries(text, language_code)
    };

    let mut sentences = Vec::new();
    let mut start = 0;
    for cut in cuts.into_iter().chain(std::iter::once(text.len())) {
        if cut <= start {
            continue;
        }
        if let Some((s, e)) = trimmed_span(text, start, cut) {
            sentences.push(Sentence {
                index: sentences.len(),
                text: text[s..e].to_string(),
                char_span: (s, e),
            });
        }
        start = cut;
    }
    sentences
}

fn trimmed_span(text: &str, start: usize, end: usize) -> Option<(usize, usize)> {
    let slice = &text[start..end];
    let lead = slice.len() - slice.trim_start().len();
    let trail = slice.len() - slice.trim_end().len();
    let (s, e) = (start + lead, end - trail);
    (s < e).then_some((s, e))
}

/// Consumes closing quotes and brackets starting at byte `pos`.
fn skip_closers(text: &str, mut pos: usize) -> usize {
    while let Some(c) = text[pos..].chars().next() {
        if CLOSERS.contains(&c) {
            pos += c.len_utf8();
        } else {
            break;
        }
    }
    pos
}

fn cjk_boundaries(text: &str) -> Vec<usize> {
    let mut cuts = Vec::new();
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if c == '\n' {
            cuts.push(i);
        } else if CJK_TERMINATORS.contains(&c) {
            let mut end = i + c.len_utf8();
            while let Some(&(j, d)) = iter.peek() {
                if CJK_TERMINATORS.contains(&d) {
                    end = j + d.len_utf8();
                    iter.next();
                } else {
                    break;
                }
            }
            let after = skip_closers(text, end);
            while iter.peek().is_some_and(|&(j, _)| j < after) {
                iter.next();
            }
            cuts.push(after);
        }
    }
    cuts
}

fn latin_boundaries(text: &str, language_code: &str) -> Vec<usize> {
    let abbreviations = ABBREVIATIONS.get(language_code);
    let mut cuts = Vec::new();
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if !LATIN_TERMINATORS.contains(&c) {
            continue;
        }
        let mut end = i + c.len_utf8();
        let mut single_period = c == '.';
        while let Some(&(j, d)) = iter.peek() {
            if LATIN_TERMINATORS.contains(&d) {
                end = j + d.len_utf8();
                single_period = false;
                iter.next();
            } else {
                break;
            }
        }
        let after = skip_closers(text, end);
        while iter.peek().is_some_and(|&(j, _)| j < after) {
            iter.next();
        }
        let followed_by_space = text[after..].chars().next().is_none_or(char::is_whitespace);
        if !followed_by_space {
            continue;
        }
        if single_period && after == end {
            if let Some(list) = abbreviations {
                if is_abbreviation(&text[..end], list) {
                    continue;
                }
            }
        }
        cuts.push(after);
    }
    cuts
}

/// `head` ends with the period under test.
fn is_abbreviation(head: &str, list: &HashSet<&str>) -> bool {
    let token_start = head
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_whitespace())
        .map_or(0, |(i, c)| i + c.len_utf8());
    let token = head[token_start..].trim_start_matches(OPENERS);
    list.contains(token.to_lowercase().as_str())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn texts(sentences: &[Sentence]) -> Vec<&str> {
        sentences.iter().map(|s| s.text.as_str()).collect()
    }

    #[test]
    fn chinese_full_width_terminators() {
        let s = split_sentences("北京烤鸭很有名。它起源于明朝。", "zh");
        assert_eq!(texts(&s), vec!["北京烤鸭很有名。", "它起源于明朝。"]);
    }

    #[test]
    fn chinese_newline_and_semicolon() {
        let s = split_sentences("第一句；第二句\n第三句！", "zh");
        assert_eq!(texts(&s), vec!["第一句；", "第二句", "第三句！"]);
    }

    #[test]
    fn chinese_closing_quote_stays_with_sentence() {
        let s = split_sentences("他说：“好吃。”然后走了。", "zh");
        assert_eq!(texts(&s), vec!["他说：“好吃。”", "然后走了。"]);
    }

    #[test]
    fn empty_input_gives_nothing() {
        assert!(segment("", "en").is_empty());
        assert!(segment("  \n\n \n", "fr").is_empty());
        assert!(split_sentences("", "zh").is_empty());
    }

    #[test]
    fn english_abbreviations_do_not_split() {
        let s = split_sentences(
            "Dr. Smith met Mr. Jones in the U.S. capital. They ate duck.",
            "en",
        );
        assert_eq!(
            texts(&s),
            vec![
                "Dr. Smith met Mr. Jones in the U.S. capital.",
                "They ate duck."
            ]
        );
    }

    #[test]
    fn decimals_and_inner_periods_do_not_split() {
        let s = split_sentences("It weighs 2.5 kg. See example.com for more.", "en");
        assert_eq!(
            texts(&s),
            vec!["It weighs 2.5 kg.", "See example.com for more."]
        );
    }

    #[test]
    fn terminator_runs_and_quotes() {
        let s = split_sentences("Really?! He said \"yes.\" Then left...", "en");
        assert_eq!(
            texts(&s),
            vec!["Really?!", "He said \"yes.\"", "Then left..."]
        );
    }

    #[test]
    fn french_and_russian_guards() {
        let s = split_sentences(
            "Le plat date du XVe s. av. J.-C. selon M. Dupont. Il est célèbre.",
            "fr",
        );
        assert_eq!(s.len(), 2, "{:?}", texts(&s));
        let s = split_sentences(
            "Блюдо известно с 1330 г. в Китае. Его подают с блинами.",
            "ru",
        );
        assert_eq!(
            texts(&s),
            vec!["Блюдо известно с 1330 г. в Китае.", "Его подают с блинами."]
        );
    }

    #[test]
    fn paragraphs_split_on_blank_lines() {
        let raw = "First para line one.\nStill first.\n\n  \nSecond para.\n\n\nThird.";
        let paras = segment(raw, "en");
        assert_eq!(paras.len(), 3);
        assert_eq!(paras[0].text, "First para line one.\nStill first.");
        assert_eq!(paras[0].sentences.len(), 2);
        assert_eq!(paras[2].index, 2);
        assert!(paras.iter().all(|p| p.section_index == 0));
    }

    fn squash(s: &str) -> String {
        s.chars().filter(|c| !c.is_whitespace()).collect()
    }

    proptest! {
        #[test]
        fn spans_are_ascending_and_reconstruct(
            text in "[a-zA-Z .!?。！？；\n\"»é鸭Дr]{0,80}",
            lang in prop::sample::select(vec!["en", "fr", "ru", "zh"]),
        ) {
            let sentences = split_sentences(&text, lang);
            let mut last = 0;
            for (i, s) in sentences.iter().enumerate() {
                prop_assert_eq!(s.index, i);
                prop_assert!(s.char_span.0 >= last);
                prop_assert!(s.char_span.0 < s.char_span.1);
                prop_assert_eq!(&text[s.char_span.0..s.char_span.1], s.text.as_str());
                last = s.char_span.1;
            }
            let joined: String = sentences.iter().map(|s| s.text.as_str()).collect();
            prop_assert_eq!(squash(&joined), squash(&text));
            prop_assert_eq!(split_sentences(&text, lang), sentences);
        }
    }
}
