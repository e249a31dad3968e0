//! Small text helpers shared across stages: whitespace handling, lexical
//! tokenization and rule-based sentence segmentation.

use std::ops::Range;

/// Tokens whose trailing period never ends a sentence.
const ABBREVIATIONS: &[&str] = &["et al.", "e.g.", "i.e.", "Fig.", "Eq.", "al."];

/// Collapses every run of whitespace to one ASCII space and trims the ends.
pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Lowercased alphanumeric tokens; everything else separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn is_abbreviation_end(text: &str, dot: usize) -> bool {
    let head = &text[..=dot];
    ABBREVIATIONS.iter().any(|abbr| {
        head.ends_with(abbr) && {
            let start = head.len() - abbr.len();
            // the abbreviation must start at a word boundary
            start == 0
                || !head[..start]
                    .chars()
                    .next_back()
                    .is_some_and(char::is_alphanumeric)
        }
    })
}

/// Splits `text` into sentence byte ranges.
///
/// A sentence ends at `.`, `?` or `!` when followed by whitespace and an
/// uppercase letter, or by end of text. Periods closing a known abbreviation
/// never end a sentence. Ranges cover the sentence text without surrounding
/// whitespace, and together they cover every non-whitespace character.
pub fn sentence_spans(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut start = 0usize;
    let chars: Vec<(usize, char)> = text.char_indices().collect();

    for (i, &(pos, c)) in chars.iter().enumerate() {
        if !matches!(c, '.' | '?' | '!') {
            continue;
        }
        if c == '.' && is_abbreviation_end(text, pos) {
            continue;
        }
        let rest = &chars[i + 1..];
        let ws = rest.iter().take_while(|(_, ch)| ch.is_whitespace()).count();
        let boundary = match rest.get(ws) {
            None => true,
            Some(&(_, next)) => ws > 0 && next.is_uppercase(),
        };
        if boundary {
            let end = pos + c.len_utf8();
            push_trimmed(text, start, end, &mut spans);
            start = end;
        }
    }
    push_trimmed(text, start, text.len(), &mut spans);
    spans
}

fn push_trimmed(text: &str, start: usize, end: usize, spans: &mut Vec<Range<usize>>) {
    let slice = &text[start..end];
    let lead = slice.len() - slice.trim_start().len();
    let trail = slice.len() - slice.trim_end().len();
    if lead + trail < slice.len() {
        spans.push(start + lead..end - trail);
    }
}
