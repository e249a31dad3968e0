//! Citation marker detection and sentence windows around markers.

use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;

use crate::text::{collapse_whitespace, sentence_spans};

/// Sentences kept on each side of the marker sentence.
pub const DEFAULT_WINDOW_RADIUS: usize = 1;

static NUMERIC_MARKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\[\d+(?:\s*[,;\-–]\s*\d+)*\]").expect("valid regex"));

static AUTHOR_YEAR_MARKER: LazyLock<Regex> = LazyLock::new(|| {
    let name = r"[A-Z][\p{L}'\-]+";
    let authors = format!(r"{name}(?: et al\.)?(?:,? (?:and|&) {name})?");
    let one = format!(r"{authors},? \d{{4}}[a-z]?");
    Regex::new(&format!(r"\({one}(?:; {one})*\)")).expect("valid regex")
});

/// Byte span of the first citation marker in `text`, numeric (`[3]`,
/// `[1, 4]`) or author-year (`(Doddington et al., 2004)`).
pub fn find_marker(text: &str) -> Option<Range<usize>> {
    [&*NUMERIC_MARKER, &*AUTHOR_YEAR_MARKER]
        .iter()
        .filter_map(|re| re.find(text).map(|m| m.range()))
        .min_by_key(|r| r.start)
}

/// Returns the sentence containing `marker_span` plus `radius` sentences on
/// each side, whitespace-normalized. Near a text boundary fewer neighbours are
/// kept; a snippet without sentence delimiters comes back whole.
///
/// `marker_span` is a byte range; it is clamped to the text.
pub fn window_extract(text: &str, marker_span: Range<usize>, radius: usize) -> String {
    let spans = sentence_spans(text);
    if spans.is_empty() {
        return String::new();
    }
    let at = marker_span.start.min(text.len());
    // the marker may sit in whitespace between sentences; take the next one
    let center = spans
        .iter()
        .position(|s| at < s.end)
        .unwrap_or(spans.len() - 1);
    let first = center.saturating_sub(radius);
    let last = (center + radius).min(spans.len() - 1);
    collapse_whitespace(&text[spans[first].start..spans[last].end])
}

/// Window for a raw snippet: centred on its first marker, or the whole
/// normalized snippet when no marker is present.
pub fn snippet_window(snippet: &str, radius: usize) -> String {
    match find_marker(snippet) {
        Some(span) => window_extract(snippet, span, radius),
        None => collapse_whitespace(snippet),
    }
}
