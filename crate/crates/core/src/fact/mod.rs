//! Fact builder: tagged statements to normalized proportion facts, clause
//! segmentation for multi-fact statements, and description candidates.

mod describe;
mod number;

pub use describe::{extract_descriptions, DescriptionForm, DescriptionSet};
pub use number::{normalize_number, NormalizedNumber};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{Lexicon, Polarity};
use crate::text::labels::{EntitySpan, EntityType};
use crate::text::{StatementTagger, TaggedStatement, TextError};

#[derive(Debug, Error)]
pub enum FactError {
    #[error("cannot read {0:?} as a proportion")]
    UnparsableNumber(String),
    #[error("proportion {0} is above 100%")]
    OutOfRange(f64),
    #[error("no number entity found in the statement")]
    NoNumberEntity,
    #[error(transparent)]
    Text(#[from] TextError),
}

/// Text with its byte span in the owning statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextSpan {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Modifier {
    pub span: TextSpan,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionFact {
    pub value: f64,
    pub numerator: Option<u64>,
    pub denominator: Option<u64>,
    pub number: TextSpan,
    pub modifier: Option<Modifier>,
    pub part: Option<TextSpan>,
    pub whole: Option<TextSpan>,
    /// Whole carried over from an earlier clause of the same statement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub implied_whole: Option<String>,
    /// The clause this fact was read from.
    pub statement: String,
    /// Byte offset of `statement` inside the original input.
    #[serde(default)]
    pub offset: usize,
}

impl ProportionFact {
    pub fn polarity(&self) -> Polarity {
        self.modifier.as_ref().map_or(Polarity::Exact, |m| m.polarity)
    }

    pub fn whole_text(&self) -> Option<&str> {
        self.whole.as_ref().map(|w| w.text.as_str()).or(self.implied_whole.as_deref())
    }

    pub fn part_text(&self) -> Option<&str> {
        self.part.as_ref().map(|p| p.text.as_str())
    }

    pub fn modifier_text(&self) -> Option<&str> {
        self.modifier.as_ref().map(|m| m.span.text.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Single,
    Comparison,
    Accumulation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactGroup {
    pub facts: Vec<ProportionFact>,
    pub relation: Relation,
}

impl FactGroup {
    pub fn total(&self) -> f64 {
        self.facts.iter().map(|f| f.value).sum()
    }

    /// Same group read as the other multi-fact relation, when that reading is legal.
    ///
    /// Accumulation groups can always be shown as comparisons; the reverse is
    /// never offered.
    pub fn as_comparison(&self) -> Option<FactGroup> {
        (self.relation == Relation::Accumulation)
            .then(|| FactGroup { facts: self.facts.clone(), relation: Relation::Comparison })
    }
}

fn span_of(tagged: &TaggedStatement, span: &EntitySpan) -> TextSpan {
    let (start, end) = tagged.byte_range(span);
    TextSpan { text: tagged.statement[start..end].to_string(), start, end }
}

/// Reads one fact from a tagged statement: its first number entity, the
/// modifier directly before it, and the first part and whole entities.
pub fn build_fact(tagged: &TaggedStatement) -> Result<ProportionFact, FactError> {
    let spans = tagged.spans();
    let number_span = spans
        .iter()
        .find(|s| s.entity == EntityType::Number)
        .ok_or(FactError::NoNumberEntity)?;
    let number = span_of(tagged, number_span);
    let normalized = normalize_number(&number.text)?;

    let modifier = spans
        .iter()
        .filter(|s| s.entity == EntityType::Modifier && s.end <= number_span.start)
        .last()
        .or_else(|| spans.iter().find(|s| s.entity == EntityType::Modifier))
        .map(|s| {
            let span = span_of(tagged, s);
            let polarity = Lexicon::get().polarity(&span.text);
            Modifier { span, polarity }
        });
    let first = |e: EntityType| spans.iter().find(|s| s.entity == e).map(|s| span_of(tagged, s));

    Ok(ProportionFact {
        value: normalized.value,
        numerator: normalized.numerator,
        denominator: normalized.denominator,
        number,
        modifier,
        part: first(EntityType::Part),
        whole: first(EntityType::Whole),
        implied_whole: None,
        statement: tagged.statement.clone(),
        offset: 0,
    })
}

const ACCUMULATION_SLACK: f64 = 1e-6;

/// Byte ranges of clauses, split only at boundaries that sit between two
/// number entities: ";", ", while", "while", ", whereas", ", and", ", but".
pub fn clause_ranges(tagged: &TaggedStatement) -> Vec<(usize, usize)> {
    let numbers: Vec<EntitySpan> =
        tagged.spans().into_iter().filter(|s| s.entity == EntityType::Number).collect();
    let toks = &tagged.tokens;
    let mut cuts: Vec<(usize, usize)> = Vec::new(); // (clause end, next clause start) in bytes
    for pair in numbers.windows(2) {
        let gap = pair[0].end..pair[1].start;
        let mut found = None;
        for i in gap.clone() {
            let t = &toks[i];
            let next = toks.get(i + 1).filter(|_| i + 1 < gap.end);
            match (t.lower.as_str(), next.map(|n| n.lower.as_str())) {
                (";", _) => found = Some((t.start, t.end)),
                (",", Some("while" | "whereas" | "and" | "but")) => found = Some((t.start, next.unwrap().end)),
                ("while" | "whereas", _) => found = Some((t.start, t.end)),
                _ => {}
            }
            if found.is_some() {
                break;
            }
        }
        if let Some(cut) = found {
            cuts.push(cut);
        }
    }
    let mut ranges = Vec::new();
    let mut start = 0;
    for (end, next) in cuts {
        ranges.push((start, end));
        start = next;
    }
    ranges.push((start, tagged.statement.len()));
    ranges
}

/// Splits a statement into clauses, re-tags each, and classifies the group.
///
/// A clause without its own whole inherits the previous clause's whole. The
/// group is an accumulation when every fact shares the same case-folded whole
/// and the values sum to at most one; otherwise a comparison. Clauses that fail
/// to parse are dropped as long as one survives.
pub fn segment_facts(tagged: &TaggedStatement, tagger: &dyn StatementTagger) -> Result<FactGroup, FactError> {
    let ranges = clause_ranges(tagged);
    if ranges.len() <= 1 {
        let fact = build_fact(tagged)?;
        return Ok(FactGroup { facts: vec![fact], relation: Relation::Single });
    }
    let mut facts = Vec::new();
    let mut first_error = None;
    for (start, end) in ranges {
        let raw = &tagged.statement[start..end];
        let lead = raw.len() - raw.trim_start().len();
        let clause = raw.trim();
        if clause.is_empty() {
            continue;
        }
        // Statements are tagged as full sentences, so clauses are too.
        let sentence =
            if clause.ends_with(['.', '!', '?']) { clause.to_string() } else { format!("{clause}.") };
        let result = tagger.tag(&sentence).map_err(FactError::from).and_then(|t| build_fact(&t));
        match result {
            Ok(mut fact) => {
                fact.offset = start + lead;
                facts.push(fact);
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    if facts.is_empty() {
        return Err(first_error.unwrap_or(FactError::NoNumberEntity));
    }
    let mut carried: Option<String> = None;
    for f in &mut facts {
        match &f.whole {
            Some(w) => carried = Some(w.text.clone()),
            None => f.implied_whole = carried.clone(),
        }
    }
    let relation = classify(&facts);
    Ok(FactGroup { facts, relation })
}

fn classify(facts: &[ProportionFact]) -> Relation {
    if facts.len() == 1 {
        return Relation::Single;
    }
    let wholes: Vec<Option<String>> = facts.iter().map(|f| f.whole_text().map(str::to_lowercase)).collect();
    let shared = wholes[0].is_some() && wholes.iter().all(|w| *w == wholes[0]);
    let total: f64 = facts.iter().map(|f| f.value).sum();
    if shared && total <= 1.0 + ACCUMULATION_SLACK {
        Relation::Accumulation
    } else {
        Relation::Comparison
    }
}
