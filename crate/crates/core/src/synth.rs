//! Synthetic topical corpora and lexicons with known sense structure.
//!
//! Every topic owns a disjoint set of content words and two definition
//! templates built from those words. Pseudowords are placed into the
//! sentences of exactly the topics they belong to, so each of them has one
//! true sense per topic.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lexicon::Lexicon;

pub struct Topic {
    pub name: &'static str,
    pub words: &'static [&'static str],
    pub definitions: [&'static str; 2],
}

pub const TOPICS: [Topic; 4] = [
    Topic {
        name: "space",
        words: &[
            "sky", "star", "moon", "planet", "orbit", "comet", "galaxy", "night", "bright", "telescope",
            "rocket", "astronaut", "solar", "lunar", "meteor", "nebula", "cosmos", "distant", "celestial",
            "object", "shining", "space", "dark", "light",
        ],
        definitions: ["bright object in the night sky", "distant celestial object in space"],
    },
    Topic {
        name: "food",
        words: &[
            "bread", "cheese", "butter", "milk", "flour", "oven", "meal", "eat", "cook", "kitchen", "sweet",
            "salt", "sugar", "dinner", "lunch", "breakfast", "tasty", "fresh", "baked", "soup", "dish",
            "plate", "edible", "food",
        ],
        definitions: ["tasty dish to eat at a meal", "fresh food baked in the kitchen"],
    },
    Topic {
        name: "music",
        words: &[
            "song", "melody", "rhythm", "guitar", "piano", "drum", "band", "sing", "tune", "note", "chord",
            "concert", "stage", "loud", "sound", "play", "instrument", "violin", "orchestra", "choir",
            "singer", "musical", "played", "music",
        ],
        definitions: ["sound played by a band", "musical instrument to play a tune"],
    },
    Topic {
        name: "sport",
        words: &[
            "game", "ball", "team", "player", "goal", "score", "match", "field", "run", "kick", "coach",
            "won", "race", "stadium", "athlete", "compete", "sprint", "referee", "league", "trophy",
            "tournament", "fast", "sport", "can",
        ],
        definitions: ["game won on a field by a team", "player who can run fast in a race"],
    },
];

const FUNCTION_WORDS: [&str; 8] = ["the", "a", "of", "and", "in", "to", "with", "is"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pseudoword {
    pub word: String,
    pub topics: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct CorpusSpec {
    pub sentences: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability that a sentence of one of its topics carries a given
    /// pseudoword.
    pub pseudo_rate: f64,
    /// Probability that a position holds a shared function word.
    pub function_rate: f64,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            sentences: 20_000,
            min_len: 8,
            max_len: 16,
            pseudo_rate: 0.1,
            function_rate: 0.25,
            seed: 1,
        }
    }
}

/// Made-up words built from syllables; none collides with a topic word.
pub fn pseudoword_names(n: usize, seed: u64) -> Vec<String> {
    const ONSETS: [&str; 10] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "z"];
    const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<String> = Vec::with_capacity(n);
    while out.len() < n {
        let w: String = (0..3)
            .map(|_| format!("{}{}", ONSETS.choose(&mut rng).unwrap(), VOWELS.choose(&mut rng).unwrap()))
            .collect::<String>()
            + "x";
        if !out.contains(&w) {
            out.push(w);
        }
    }
    out
}

/// `per_pair` pseudowords for every unordered pair of topics.
pub fn pseudowords_for_pairs(per_pair: usize, seed: u64) -> Vec<Pseudoword> {
    let pairs: Vec<(usize, usize)> = (0..TOPICS.len())
        .flat_map(|a| (a + 1..TOPICS.len()).map(move |b| (a, b)))
        .collect();
    let names = pseudoword_names(pairs.len() * per_pair, seed);
    names
        .into_iter()
        .enumerate()
        .map(|(i, word)| {
            let (a, b) = pairs[i % pairs.len()];
            Pseudoword { word, topics: vec![a, b] }
        })
        .collect()
}

pub fn generate_corpus(spec: &CorpusSpec, pseudowords: &[Pseudoword]) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let by_topic: Vec<Vec<&str>> = (0..TOPICS.len())
        .map(|t| {
            pseudowords
                .iter()
                .filter(|p| p.topics.contains(&t))
                .map(|p| p.word.as_str())
                .collect()
        })
        .collect();
    (0..spec.sentences)
        .map(|_| {
            let t = rng.gen_range(0..TOPICS.len());
            let len = rng.gen_range(spec.min_len..=spec.max_len);
            let mut sentence: Vec<String> = (0..len)
                .map(|_| {
                    if rng.gen_bool(spec.function_rate) {
                        FUNCTION_WORDS.choose(&mut rng).unwrap().to_string()
                    } else {
                        TOPICS[t].words.choose(&mut rng).unwrap().to_string()
                    }
                })
                .collect();
            for p in &by_topic[t] {
                if rng.gen_bool(spec.pseudo_rate) {
                    let pos = rng.gen_range(0..sentence.len());
                    sentence[pos] = p.to_string();
                }
            }
            sentence
        })
        .collect()
}

fn tokens(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

/// Topic words get one definition from their own topic; pseudowords get
/// one definition per topic.
pub fn generate_lexicon(pseudowords: &[Pseudoword]) -> Lexicon {
    let mut lex = Lexicon::new("synthetic", "en");
    for topic in &TOPICS {
        for (i, w) in topic.words.iter().enumerate() {
            lex.add_definition(w, tokens(topic.definitions[i % 2]));
        }
    }
    for (i, p) in pseudowords.iter().enumerate() {
        for (j, &t) in p.topics.iter().enumerate() {
            lex.add_definition(&p.word, tokens(TOPICS[t].definitions[(i + j) % 2]));
        }
    }
    lex
}

/// Topic index of a word, if it is a topic word.
pub fn topic_of(word: &str) -> Option<usize> {
    TOPICS.iter().position(|t| t.words.contains(&word))
}
