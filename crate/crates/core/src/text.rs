//! Tokenization, lemmatization and stopword handling shared by every stage.
//!
//! Two tokenizers exist on purpose. [`tokenize`] splits on any
//! non-alphanumeric character and is used for sentences, articles and
//! property descriptions. [`label_tokens`] splits entity labels on whitespace
//! and hyphens only, which is how the cosine gate looks labels up.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// English stopword list (the common NLTK set).
pub const ENGLISH_STOPWORDS: &[&str] = &[
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're", "you've",
    "you'll", "you'd", "your", "yours", "yourself", "yourselves", "he", "him", "his",
    "himself", "she", "she's", "her", "hers", "herself", "it", "it's", "its", "itself",
    "they", "them", "their", "theirs", "themselves", "what", "which", "who", "whom", "this",
    "that", "that'll", "these", "those", "am", "is", "are", "was", "were", "be", "been",
    "being", "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an", "the",
    "and", "but", "if", "or", "because", "as", "until", "while", "of", "at", "by", "for",
    "with", "about", "against", "between", "into", "through", "during", "before", "after",
    "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over", "under",
    "again", "further", "then", "once", "here", "there", "when", "where", "why", "how",
    "all", "any", "both", "each", "few", "more", "most", "other", "some", "such", "no", "nor",
    "not", "only", "own", "same", "so", "than", "too", "very", "s", "t", "can", "will",
    "just", "don", "don't", "should", "should've", "now", "d", "ll", "m", "o", "re", "ve",
    "y", "ain", "aren", "aren't", "couldn", "couldn't", "didn", "didn't", "doesn", "doesn't",
    "hadn", "hadn't", "hasn", "hasn't", "haven", "haven't", "isn", "isn't", "ma", "mightn",
    "mightn't", "mustn", "mustn't", "needn", "needn't", "shan", "shan't", "shouldn",
    "shouldn't", "wasn", "wasn't", "weren", "weren't", "won", "won't", "wouldn", "wouldn't",
];

/// A set of lowercase stopwords.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stopwords {
    words: BTreeSet<String>,
}

impl Stopwords {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn english() -> Self {
        ENGLISH_STOPWORDS.iter().copied().collect()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn insert(&mut self, word: &str) {
        let w = word.trim().to_lowercase();
        if !w.is_empty() {
            self.words.insert(w);
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Parses one word per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    }
}

impl<'a> FromIterator<&'a str> for Stopwords {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        let mut s = Stopwords::new();
        for w in iter {
            s.insert(w);
        }
        s
    }
}

/// Lowercases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(ToString::to_string)
        .collect()
}

/// Lowercases and splits an entity label on whitespace and hyphens, trimming
/// surrounding punctuation from each piece.
pub fn label_tokens(label: &str) -> Vec<String> {
    label
        .to_lowercase()
        .split(|c: char| c.is_whitespace() || c == '-')
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(ToString::to_string)
        .collect()
}

/// True when the token consists only of ASCII digits.
pub fn is_numeric(token: &str) -> bool {
    !token.is_empty() && token.bytes().all(|b| b.is_ascii_digit())
}

/// Rule-based suffix stripper.
///
/// - `ies` becomes `y` (`policies` -> `policy`)
/// - `es` is dropped after `s`, `x`, `z`, `ch`, `sh` (`boxes` -> `box`)
/// - a trailing `s` is dropped when the word is longer than 3 characters,
///   except after `s`, `u`, `i` (`class`, `campus`, `analysis` stay)
pub fn lemmatize(token: &str) -> String {
    let n = token.chars().count();
    if n > 3 && token.ends_with("ies") {
        let mut s = String::from(&token[..token.len() - 3]);
        s.push('y');
        return s;
    }
    if n > 3 && token.ends_with("es") {
        let stem = &token[..token.len() - 2];
        if stem.ends_with('s')
            || stem.ends_with('x')
            || stem.ends_with('z')
            || stem.ends_with("ch")
            || stem.ends_with("sh")
        {
            return String::from(stem);
        }
    }
    if n > 3 && token.ends_with('s') && !(token.ends_with("ss") || token.ends_with("us") || token.ends_with("is")) {
        return String::from(&token[..token.len() - 1]);
    }
    String::from(token)
}

/// Article/description preprocessing: lowercase, strip punctuation, drop
/// numeric tokens and stopwords, lemmatize. Order is preserved.
pub fn preprocess(text: &str, stopwords: &Stopwords) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| !is_numeric(t) && !stopwords.contains(t))
        .map(|t| lemmatize(&t))
        .filter(|t| !stopwords.contains(t))
        .collect()
}

/// Token set of a graph node label: tokenized and lemmatized, no filtering.
pub fn node_tokens(label: &str) -> Vec<String> {
    let mut out: Vec<String> = tokenize(label).iter().map(|t| lemmatize(t)).collect();
    out.sort();
    out.dedup();
    out
}
