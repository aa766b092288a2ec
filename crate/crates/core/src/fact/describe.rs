use serde::{Deserialize, Serialize};

use super::ProportionFact;
use crate::lexicon::Lexicon;

/// Which text of a fact fills a description slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptionForm {
    Entire,
    NumberRemoved,
    PartPhrase,
    NumberWholePhrase,
    BeforeNumber,
    AfterNumber,
    Modifier,
    Part,
    Whole,
}

impl DescriptionForm {
    pub const ALL: [DescriptionForm; 9] = [
        Self::Entire,
        Self::NumberRemoved,
        Self::PartPhrase,
        Self::NumberWholePhrase,
        Self::BeforeNumber,
        Self::AfterNumber,
        Self::Modifier,
        Self::Part,
        Self::Whole,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Entire => "entire",
            Self::NumberRemoved => "number_removed",
            Self::PartPhrase => "part_phrase",
            Self::NumberWholePhrase => "number_whole_phrase",
            Self::BeforeNumber => "before_number",
            Self::AfterNumber => "after_number",
            Self::Modifier => "modifier",
            Self::Part => "part",
            Self::Whole => "whole",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Candidate description texts; a form is absent when the statement does not
/// support it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptionSet {
    pub entire: String,
    pub number_removed: Option<String>,
    pub part_phrase: Option<String>,
    pub number_whole_phrase: Option<String>,
    pub before_number: Option<String>,
    pub number: String,
    pub after_number: Option<String>,
    pub modifier: Option<String>,
    pub part: Option<String>,
    pub whole: Option<String>,
}

impl DescriptionSet {
    pub fn get(&self, form: DescriptionForm) -> Option<&str> {
        match form {
            DescriptionForm::Entire => Some(self.entire.as_str()),
            DescriptionForm::NumberRemoved => self.number_removed.as_deref(),
            DescriptionForm::PartPhrase => self.part_phrase.as_deref(),
            DescriptionForm::NumberWholePhrase => self.number_whole_phrase.as_deref(),
            DescriptionForm::BeforeNumber => self.before_number.as_deref(),
            DescriptionForm::AfterNumber => self.after_number.as_deref(),
            DescriptionForm::Modifier => self.modifier.as_deref(),
            DescriptionForm::Part => self.part.as_deref(),
            DescriptionForm::Whole => self.whole.as_deref(),
        }
    }

    pub fn available(&self) -> Vec<DescriptionForm> {
        DescriptionForm::ALL.into_iter().filter(|f| self.get(*f).is_some()).collect()
    }
}

/// Collapses runs of whitespace and drops the space a removal leaves before punctuation.
fn tidy(s: &str) -> String {
    let joined = s.split_whitespace().collect::<Vec<_>>().join(" ");
    let mut out = String::with_capacity(joined.len());
    for c in joined.chars() {
        if matches!(c, ',' | '.' | ';' | ':' | '!' | '?') && out.ends_with(' ') {
            out.pop();
        }
        out.push(c);
    }
    out.trim_matches(|c: char| c.is_whitespace() || c == ',').to_string()
}

fn non_empty(s: String) -> Option<String> {
    (!s.is_empty()).then_some(s)
}

fn strip_terminal(s: &str) -> &str {
    s.trim().trim_end_matches(['.', '!', '?', ';', ',']).trim_end()
}

pub fn extract_descriptions(fact: &ProportionFact) -> DescriptionSet {
    let entire = strip_terminal(&fact.statement).to_string();
    let end_cap = entire.len();
    let clip = |i: usize| i.min(end_cap);
    let (ns, ne) = (clip(fact.number.start), clip(fact.number.end));

    let number_removed = non_empty(tidy(&format!("{} {}", &entire[..ns], &entire[ne..])));

    let part_phrase = fact.part.as_ref().and_then(|p| {
        let first = p.text.split_whitespace().next()?;
        Lexicon::get().is_verb(&first.to_lowercase()).then(|| p.text.clone())
    });

    let modifier_start = fact
        .modifier
        .as_ref()
        .filter(|m| m.span.end <= fact.number.start && entire[clip(m.span.end)..ns].trim().is_empty())
        .map(|m| m.span.start);
    let number_whole_phrase = fact
        .whole
        .as_ref()
        .filter(|w| w.start >= fact.number.end)
        .and_then(|w| non_empty(tidy(&entire[modifier_start.unwrap_or(ns)..clip(w.end)])));

    DescriptionSet {
        number_removed,
        part_phrase,
        number_whole_phrase,
        before_number: non_empty(tidy(&entire[..ns])),
        number: fact.number.text.clone(),
        after_number: non_empty(tidy(&entire[ne..])),
        modifier: fact.modifier.as_ref().map(|m| m.span.text.clone()),
        part: fact.part.as_ref().map(|p| p.text.clone()),
        whole: fact.whole_text().map(str::to_string),
        entire,
    }
}
