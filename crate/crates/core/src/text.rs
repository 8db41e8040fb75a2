//! Tokenization and the shipped word tables.

use std::collections::{BTreeSet, HashSet};

use unicode_segmentation::UnicodeSegmentation;

const FUNCTION_WORDS: &str = include_str!("../assets/function_words.txt");
const EVENT_VERBS: &str = include_str!("../assets/event_verbs.txt");

/// Lowercased Unicode words of `text`, in order. No stemming.
pub fn tokenize(text: &str) -> Vec<String> {
    text.unicode_words().map(|w| w.to_lowercase()).collect()
}

/// Parses a one-entry-per-line word list; blank lines and `#` comments are skipped.
pub fn parse_word_list(src: &str) -> HashSet<String> {
    src.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// Table of function words removed by query rewriting and ignored when
/// counting content words.
#[derive(Debug, Clone)]
pub struct FunctionWordTable {
    words: HashSet<String>,
}

impl Default for FunctionWordTable {
    fn default() -> Self {
        Self::parse(FUNCTION_WORDS)
    }
}

impl FunctionWordTable {
    pub fn parse(src: &str) -> Self {
        Self { words: parse_word_list(src) }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Distinct lowercased tokens of `text` that are not function words.
    pub fn content_words(&self, text: &str) -> BTreeSet<String> {
        tokenize(text)
            .into_iter()
            .filter(|t| !self.contains(t))
            .collect()
    }
}

/// The shipped event-verb list used by the reference pivot rule.
pub fn event_verbs() -> HashSet<String> {
    parse_word_list(EVENT_VERBS)
}

/// A word-like token of a sentence with its byte range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

impl Token<'_> {
    pub fn lower(&self) -> String {
        self.text.to_lowercase()
    }

    pub fn is_capitalized(&self) -> bool {
        self.text.chars().next().is_some_and(char::is_uppercase)
    }
}

fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '\u{2019}' || c == '-' || c == '&'
}

/// Splits `text` into maximal runs of word characters (letters, digits,
/// apostrophes, hyphens). Leading and trailing apostrophes/hyphens are trimmed
/// from each token.
pub fn word_tokens<'a>(text: &'a str) -> Vec<Token<'a>> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let push = |s: usize, e: usize, out: &mut Vec<Token<'a>>| {
        let raw = &text[s..e];
        let trim = |c: char| !c.is_alphanumeric();
        let lead = raw.len() - raw.trim_start_matches(trim).len();
        let core = raw.trim_matches(trim);
        if !core.is_empty() {
            let s2 = s + lead;
            out.push(Token { text: &text[s2..s2 + core.len()], start: s2, end: s2 + core.len() });
        }
    };
    for (i, c) in text.char_indices() {
        match (is_token_char(c), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                push(s, i, &mut out);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        push(s, text.len(), &mut out);
    }
    out
}

/// True when only plain spaces or tabs separate two byte offsets.
pub fn only_spaces_between(text: &str, a: usize, b: usize) -> bool {
    a <= b && text[a..b].chars().all(|c| c == ' ' || c == '\t')
}

/// Truncates to at most `max` bytes on a char boundary.
pub fn truncate_chars(s: &str, max: usize) -> &str {
    if s.len() <= max {
        return s;
    }
    let mut end = max;
    while !s.is_char_boundary(end) {
        end -= 1;
    }
    &s[..end]
}
