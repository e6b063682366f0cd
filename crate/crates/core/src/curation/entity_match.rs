//! Subject/object entity matching over role-annotated tokens.
//!
//! Roles come from upstream dependency parses; this module only applies the
//! retention rule: a sentence is kept for an entity when a span naming the
//! entity contains at least one subject or object token.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::model::Entity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Subject,
    Object,
    Other,
}

impl Role {
    fn is_argument(self) -> bool {
        matches!(self, Role::Subject | Role::Object)
    }
}

/// One token with its grammatical role. Serialized as `["token", "role"]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedToken(pub String, pub Role);

impl AnnotatedToken {
    pub fn new(token: &str, role: Role) -> Self {
        Self(token.to_string(), role)
    }
}

fn normalize(token: &str) -> String {
    token
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}

/// Equality that tolerates a trailing "s" or "es" on either side.
pub fn plural_eq(a: &str, b: &str) -> bool {
    let strip = |long: &str, short: &str| {
        long.strip_suffix("es") == Some(short) || long.strip_suffix('s') == Some(short)
    };
    a == b || strip(a, b) || strip(b, a)
}

fn lookup_keys(word: &str) -> Vec<String> {
    let mut keys = vec![word.to_string(), format!("{word}s"), format!("{word}es")];
    if let Some(w) = word.strip_suffix("es") {
        keys.push(w.to_string());
    }
    if let Some(w) = word.strip_suffix('s') {
        keys.push(w.to_string());
    }
    keys
}

/// Pre-indexed entity set for repeated matching.
#[derive(Debug, Clone, Default)]
pub struct EntityMatcher {
    entities: Vec<(Entity, Vec<String>)>,
    by_first_word: HashMap<String, Vec<usize>>,
}

impl EntityMatcher {
    pub fn new<'a, I: IntoIterator<Item = &'a Entity>>(entities: I) -> Self {
        let mut list: Vec<(Entity, Vec<String>)> = entities
            .into_iter()
            .map(|e| {
                let words = e.name.split_whitespace().map(normalize).collect();
                (e.clone(), words)
            })
            .filter(|(_, w): &(Entity, Vec<String>)| !w.is_empty())
            .collect();
        // Longer spans first so "sweet potato" wins over "potato" at the same
        // position; name then type for determinism.
        list.sort_by(|(ea, wa), (eb, wb)| wb.len().cmp(&wa.len()).then_with(|| ea.cmp(eb)));
        list.dedup_by(|a, b| a.0 == b.0);

        let mut by_first_word: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, (_, words)) in list.iter().enumerate() {
            by_first_word.entry(words[0].clone()).or_default().push(i);
        }
        Self {
            entities: list,
            by_first_word,
        }
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// First entity, in sentence order, whose matched span has a subject or
    /// object token.
    pub fn find(&self, tokens: &[AnnotatedToken]) -> Option<&Entity> {
        let words: Vec<String> = tokens.iter().map(|t| normalize(&t.0)).collect();
        for start in 0..words.len() {
            if words[start].is_empty() {
                continue;
            }
            let mut candidates: Vec<usize> = lookup_keys(&words[start])
                .iter()
                .filter_map(|k| self.by_first_word.get(k))
                .flatten()
                .copied()
                .collect();
            candidates.sort_unstable();
            candidates.dedup();
            for idx in candidates {
                let (entity, span) = &self.entities[idx];
                let end = start + span.len();
                if end > words.len() {
                    continue;
                }
                let matched = span
                    .iter()
                    .zip(&words[start..end])
                    .all(|(e, w)| plural_eq(w, e));
                if matched && tokens[start..end].iter().any(|t| t.1.is_argument()) {
                    return Some(entity);
                }
            }
        }
        None
    }
}

/// One-shot form of [`EntityMatcher::find`].
pub fn match_entity(sentence_tokens: &[AnnotatedToken], entities: &[Entity]) -> Option<Entity> {
    EntityMatcher::new(entities).find(sentence_tokens).cloned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use Role::*;

    fn toks(pattern: &[(&str, Role)]) -> Vec<AnnotatedToken> {
        pattern.iter().map(|(t, r)| AnnotatedToken::new(t, *r)).collect()
    }

    #[test]
    fn plural_tolerant_multiword_span() {
        let sentence = toks(&[
            ("the", Other),
            ("vibrant", Other),
            ("colors", Subject),
            ("of", Other),
            ("sweet", Subject),
            ("potatoes", Subject),
            ("can", Other),
            ("be", Other),
            ("used", Other),
            ("as", Other),
            ("dye", Object),
        ]);
        let got = match_entity(&sentence, &[Entity::ingredient("sweet potato")]);
        assert_eq!(got, Some(Entity::ingredient("sweet potato")));
    }

    #[test]
    fn other_role_only_is_rejected() {
        let sentence = toks(&[("made", Other), ("with", Other), ("sausages", Other)]);
        assert_eq!(match_entity(&sentence, &[Entity::ingredient("sausage")]), None);
    }

    #[test]
    fn earliest_argument_wins() {
        // "butter(subject) beats margarine(object)"
        let sentence = toks(&[("Butter", Subject), ("beats", Other), ("margarine", Object)]);
        let entities = [Entity::ingredient("margarine"), Entity::ingredient("butter")];
        assert_eq!(match_entity(&sentence, &entities), Some(Entity::ingredient("butter")));
    }

    #[test]
    fn longest_span_preferred_at_same_position() {
        let sentence = toks(&[("sweet", Other), ("potato", Subject), ("pie", Other)]);
        let entities = [Entity::ingredient("potato"), Entity::ingredient("sweet potato")];
        // both spans contain the subject token; the longer one starts earlier
        assert_eq!(
            match_entity(&sentence, &entities),
            Some(Entity::ingredient("sweet potato"))
        );
    }

    #[test]
    fn punctuation_and_case_are_ignored() {
        let sentence = toks(&[("Baking", Subject), ("Soda,", Subject), ("sadly", Other)]);
        assert_eq!(
            match_entity(&sentence, &[Entity::ingredient("baking soda")]),
            Some(Entity::ingredient("baking soda"))
        );
    }

    #[test]
    fn plural_eq_rules() {
        assert!(plural_eq("potatoes", "potato"));
        assert!(plural_eq("sausage", "sausages"));
        assert!(plural_eq("tin", "tin"));
        assert!(!plural_eq("tin", "tins2"));
        assert!(!plural_eq("pan", "pie"));
    }
}
