//! Generator for small topic-classification corpora with disjoint per-class
//! vocabularies, used for desk-scale experiments and fixtures.

use std::collections::HashSet;

use rand::Rng;

use super::{Corpus, TextExample};
use crate::rng;

const ONSETS: &[&str] = &[
    "b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z",
    "br", "ch", "dr", "gl", "kr", "pl", "sh", "st", "th", "tr",
];
const NUCLEI: &[&str] = &["a", "e", "i", "o", "u", "ai", "ea", "io", "ou"];

const LABEL_NAMES: &[&str] = &[
    "space", "cooking", "hockey", "finance", "medicine", "music", "autos", "politics",
];

#[derive(Debug, Clone)]
pub struct TopicCorpusSpec {
    pub classes: usize,
    pub per_class: usize,
    /// Words owned by each class; no word is shared between classes.
    pub topic_words: usize,
    /// Words every class draws from.
    pub shared_words: usize,
    /// Probability that a token is drawn from the class vocabulary.
    pub topic_rate: f64,
    pub min_tokens: usize,
    pub max_tokens: usize,
}

impl Default for TopicCorpusSpec {
    fn default() -> Self {
        Self {
            classes: 4,
            per_class: 250,
            topic_words: 40,
            shared_words: 120,
            topic_rate: 0.3,
            min_tokens: 8,
            max_tokens: 16,
        }
    }
}

pub fn label_name(class: usize) -> String {
    LABEL_NAMES
        .get(class)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("topic-{class}"))
}

fn pseudo_word<R: Rng>(rng: &mut R) -> String {
    let syllables = rng.random_range(2..=3);
    (0..syllables)
        .map(|_| {
            let onset = ONSETS[rng.random_range(0..ONSETS.len())];
            let nucleus = NUCLEI[rng.random_range(0..NUCLEI.len())];
            format!("{onset}{nucleus}")
        })
        .collect()
}

fn vocabulary<R: Rng>(rng: &mut R, n: usize, taken: &mut HashSet<String>) -> Vec<String> {
    let mut words = Vec::with_capacity(n);
    while words.len() < n {
        let w = pseudo_word(rng);
        if taken.insert(w.clone()) {
            words.push(w);
        }
    }
    words
}

/// Generates a corpus whose examples are interleaved by class
/// (`space-0`, `cooking-0`, ..., `space-1`, ...).
pub fn generate_topic_corpus(spec: &TopicCorpusSpec, seed: u64) -> Corpus {
    let mut vocab_rng = rng::stream(seed, &[0x70c]);
    let mut taken = HashSet::new();
    let shared = vocabulary(&mut vocab_rng, spec.shared_words, &mut taken);
    let topics: Vec<Vec<String>> = (0..spec.classes)
        .map(|_| vocabulary(&mut vocab_rng, spec.topic_words, &mut taken))
        .collect();

    let mut examples = Vec::with_capacity(spec.classes * spec.per_class);
    for i in 0..spec.per_class {
        for (c, topic) in topics.iter().enumerate() {
            let mut r = rng::stream(seed, &[0xd0c, c as u64, i as u64]);
            let len = r.random_range(spec.min_tokens..=spec.max_tokens);
            let tokens: Vec<&str> = (0..len)
                .map(|_| {
                    if shared.is_empty() || r.random_bool(spec.topic_rate) {
                        topic[r.random_range(0..topic.len())].as_str()
                    } else {
                        shared[r.random_range(0..shared.len())].as_str()
                    }
                })
                .collect();
            let label = label_name(c);
            examples.push(TextExample::new(format!("{label}-{i}"), tokens.join(" "), label));
        }
    }
    let labels = (0..spec.classes).map(label_name).collect();
    Corpus::with_labels(examples, labels).expect("generated ids are unique")
}
