//! Rule-based sentence splitting.
//!
//! A boundary is a `.`, `!` or `?` followed by whitespace and then an
//! uppercase letter, unless the token ending in that punctuation is a known
//! abbreviation. When no boundary is found the whole text is one sentence.

use std::collections::HashSet;

pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "mr.", "mrs.", "ms.", "dr.", "st.", "prof.", "jr.", "sr.", "vs.", "etc.", "e.g.", "i.e.",
    "approx.", "no.", "tbsp.", "tsp.", "oz.", "lb.", "lbs.", "fig.", "mt.", "ft.", "u.s.",
    "u.k.", "a.m.", "p.m.",
];

#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: HashSet<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        Self::with_abbreviations(DEFAULT_ABBREVIATIONS.iter().copied())
    }
}

impl SentenceSplitter {
    /// Abbreviations are matched case-insensitively and include their final
    /// period, e.g. `"Dr."`.
    pub fn with_abbreviations<I, S>(abbreviations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            abbreviations: abbreviations
                .into_iter()
                .map(|a| a.as_ref().trim().to_lowercase())
                .collect(),
        }
    }

    pub fn split(&self, raw_text: &str) -> Vec<String> {
        let text = raw_text.trim();
        if text.is_empty() {
            return Vec::new();
        }
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut sentences = Vec::new();
        let mut start = 0usize;

        for (pos, &(byte, c)) in chars.iter().enumerate() {
            if !matches!(c, '.' | '!' | '?') {
                continue;
            }
            let mut next = pos + 1;
            if next >= chars.len() || !chars[next].1.is_whitespace() {
                continue;
            }
            while next < chars.len() && chars[next].1.is_whitespace() {
                next += 1;
            }
            if next >= chars.len() || !chars[next].1.is_uppercase() {
                continue;
            }
            let end = byte + c.len_utf8();
            if c == '.' && self.is_abbreviation(&text[start..end]) {
                continue;
            }
            push_trimmed(&mut sentences, &text[start..end]);
            start = chars[next].0;
        }
        push_trimmed(&mut sentences, &text[start..]);
        sentences
    }

    fn is_abbreviation(&self, segment: &str) -> bool {
        let token = segment.split_whitespace().last().unwrap_or("");
        self.abbreviations.contains(&token.to_lowercase())
    }
}

fn push_trimmed(out: &mut Vec<String>, s: &str) {
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}

/// Splits with the default abbreviation list.
pub fn split_sentences(raw_text: &str) -> Vec<String> {
    SentenceSplitter::default().split(raw_text)
}
