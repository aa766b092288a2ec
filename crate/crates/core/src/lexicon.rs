//! Bundled word lists. All are compiled into the binary.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

const STOPWORDS: &str = include_str!("../lexicon/stopwords.txt");
const MODIFIERS: &str = include_str!("../lexicon/modifiers.txt");
const FRACTIONS: &str = include_str!("../lexicon/fractions.txt");
const NUMBER_WORDS: &str = include_str!("../lexicon/number_words.txt");
const ABBREVIATIONS: &str = include_str!("../lexicon/abbreviations.txt");
const SPECIAL_PHRASES: &str = include_str!("../lexicon/special_phrases.txt");
const POS: &str = include_str!("../lexicon/pos.txt");
const VERBS: &str = include_str!("../lexicon/verbs.txt");

/// Direction a modifier pushes the stated number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    MoreThan,
    LessThan,
    About,
    Exact,
}

/// Coarse part-of-speech classes used by the featurizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pos {
    Noun,
    Verb,
    Adj,
    Adv,
    Det,
    Prep,
    Pron,
    Conj,
    Aux,
    Num,
    Punct,
}

impl Pos {
    pub const ALL: [Pos; 11] = [
        Pos::Noun,
        Pos::Verb,
        Pos::Adj,
        Pos::Adv,
        Pos::Det,
        Pos::Prep,
        Pos::Pron,
        Pos::Conj,
        Pos::Aux,
        Pos::Num,
        Pos::Punct,
    ];

    pub fn index(self) -> usize {
        Pos::ALL.iter().position(|p| *p == self).unwrap()
    }

    fn parse(tag: &str) -> Option<Pos> {
        Some(match tag {
            "DET" => Pos::Det,
            "PREP" => Pos::Prep,
            "PRON" => Pos::Pron,
            "CONJ" => Pos::Conj,
            "AUX" => Pos::Aux,
            "ADV" => Pos::Adv,
            "ADJ" => Pos::Adj,
            "NUM" => Pos::Num,
            _ => return None,
        })
    }
}

pub struct Lexicon {
    stopwords: HashSet<String>,
    modifiers: Vec<(Vec<String>, Polarity)>,
    fractions: Vec<(Vec<String>, u64, u64)>,
    number_words: HashMap<String, u64>,
    abbreviations: HashSet<String>,
    special_phrases: Vec<Vec<String>>,
    pos: HashMap<String, Pos>,
    verbs: HashSet<String>,
}

fn lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim_end)
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
}

fn words(phrase: &str) -> Vec<String> {
    phrase.split_whitespace().map(str::to_lowercase).collect()
}

impl Lexicon {
    pub fn get() -> &'static Lexicon {
        static LEXICON: OnceLock<Lexicon> = OnceLock::new();
        LEXICON.get_or_init(Lexicon::parse_bundled)
    }

    fn parse_bundled() -> Lexicon {
        let modifiers = lines(MODIFIERS)
            .filter_map(|l| {
                let (phrase, pol) = l.split_once('\t')?;
                let pol = match pol.trim() {
                    "more_than" => Polarity::MoreThan,
                    "less_than" => Polarity::LessThan,
                    "about" => Polarity::About,
                    _ => Polarity::Exact,
                };
                Some((words(phrase), pol))
            })
            .collect();
        let fractions = lines(FRACTIONS)
            .filter_map(|l| {
                let mut it = l.split('\t');
                let phrase = it.next()?;
                let num = it.next()?.trim().parse().ok()?;
                let den = it.next()?.trim().parse().ok()?;
                Some((words(phrase), num, den))
            })
            .collect();
        let number_words = lines(NUMBER_WORDS)
            .filter_map(|l| {
                let (w, n) = l.split_once('\t')?;
                Some((w.to_string(), n.trim().parse().ok()?))
            })
            .collect();
        let pos = lines(POS)
            .filter_map(|l| {
                let (w, t) = l.split_once('\t')?;
                Some((w.to_string(), Pos::parse(t.trim())?))
            })
            .collect();
        Lexicon {
            stopwords: lines(STOPWORDS).map(|l| l.trim().to_string()).collect(),
            modifiers,
            fractions,
            number_words,
            abbreviations: lines(ABBREVIATIONS).map(|l| l.trim().to_string()).collect(),
            special_phrases: lines(SPECIAL_PHRASES).map(words).collect(),
            pos,
            verbs: lines(VERBS).map(|l| l.trim().to_string()).collect(),
        }
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(&word.to_lowercase())
    }

    pub fn is_abbreviation(&self, text: &str) -> bool {
        self.abbreviations.contains(text)
    }

    pub fn abbreviations(&self) -> impl Iterator<Item = &str> {
        self.abbreviations.iter().map(String::as_str)
    }

    pub fn special_phrases(&self) -> &[Vec<String>] {
        &self.special_phrases
    }

    pub fn is_verb(&self, word: &str) -> bool {
        self.verbs.contains(&word.to_lowercase())
    }

    pub fn number_word(&self, word: &str) -> Option<u64> {
        self.number_words.get(&word.to_lowercase()).copied()
    }

    /// Polarity of a modifier phrase; unknown phrases count as `Exact`.
    pub fn polarity(&self, phrase: &str) -> Polarity {
        let w = words(phrase);
        self.modifiers
            .iter()
            .find(|(p, _)| *p == w)
            .map(|(_, pol)| *pol)
            .unwrap_or(Polarity::Exact)
    }

    pub fn is_modifier_word(&self, word: &str) -> bool {
        let w = word.to_lowercase();
        self.modifiers.iter().any(|(p, _)| p.contains(&w))
    }

    /// Exact lookup of a fraction phrase such as "two thirds".
    pub fn fraction(&self, phrase_words: &[String]) -> Option<(u64, u64)> {
        self.fractions
            .iter()
            .find(|(p, _, _)| p.as_slice() == phrase_words)
            .map(|(_, n, d)| (*n, *d))
    }

    pub fn is_fraction_word(&self, word: &str) -> bool {
        let w = word.to_lowercase();
        self.fractions.iter().any(|(p, _, _)| p.last() == Some(&w))
    }

    /// Coarse tag from the closed-class list, then suffix rules.
    pub fn pos(&self, word: &str) -> Pos {
        let lower = word.to_lowercase();
        if let Some(p) = self.pos.get(&lower) {
            return *p;
        }
        if lower.chars().all(|c| !c.is_alphanumeric()) {
            return Pos::Punct;
        }
        if lower.chars().any(|c| c.is_ascii_digit()) || self.number_words.contains_key(&lower) {
            return Pos::Num;
        }
        if self.verbs.contains(&lower) {
            return Pos::Verb;
        }
        if lower.ends_with("ly") {
            Pos::Adv
        } else if lower.ends_with("ing") || lower.ends_with("ed") {
            Pos::Verb
        } else if ["ous", "ful", "ive", "able", "ible", "al", "ic", "less"]
            .iter()
            .any(|s| lower.ends_with(s) && lower.len() > s.len() + 2)
        {
            Pos::Adj
        } else {
            Pos::Noun
        }
    }
}
