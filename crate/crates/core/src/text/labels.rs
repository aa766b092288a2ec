use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The four entity types of a proportion statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityType {
    #[serde(rename = "M")]
    Modifier,
    #[serde(rename = "N")]
    Number,
    #[serde(rename = "P")]
    Part,
    #[serde(rename = "W")]
    Whole,
}

impl EntityType {
    pub const ALL: [EntityType; 4] = [
        EntityType::Modifier,
        EntityType::Number,
        EntityType::Part,
        EntityType::Whole,
    ];

    pub fn code(self) -> char {
        match self {
            EntityType::Modifier => 'M',
            EntityType::Number => 'N',
            EntityType::Part => 'P',
            EntityType::Whole => 'W',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EntityType::Modifier => "modifier",
            EntityType::Number => "number",
            EntityType::Part => "part",
            EntityType::Whole => "whole",
        }
    }
}

/// IOB label. Declaration order is the tie-break order used by decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    BM,
    IM,
    BN,
    IN,
    BP,
    IP,
    BW,
    IW,
    O,
}

pub const NUM_LABELS: usize = 9;

impl Label {
    pub const ALL: [Label; NUM_LABELS] = [
        Label::BM,
        Label::IM,
        Label::BN,
        Label::IN,
        Label::BP,
        Label::IP,
        Label::BW,
        Label::IW,
        Label::O,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Label {
        Label::ALL[i]
    }

    pub fn entity(self) -> Option<EntityType> {
        use Label::*;
        match self {
            BM | IM => Some(EntityType::Modifier),
            BN | IN => Some(EntityType::Number),
            BP | IP => Some(EntityType::Part),
            BW | IW => Some(EntityType::Whole),
            O => None,
        }
    }

    pub fn is_inside(self) -> bool {
        matches!(self, Label::IM | Label::IN | Label::IP | Label::IW)
    }

    pub fn begin(entity: EntityType) -> Label {
        match entity {
            EntityType::Modifier => Label::BM,
            EntityType::Number => Label::BN,
            EntityType::Part => Label::BP,
            EntityType::Whole => Label::BW,
        }
    }

    pub fn inside(entity: EntityType) -> Label {
        match entity {
            EntityType::Modifier => Label::IM,
            EntityType::Number => Label::IN,
            EntityType::Part => Label::IP,
            EntityType::Whole => Label::IW,
        }
    }

    /// Whether a sequence may open with this label.
    pub fn valid_start(self) -> bool {
        !self.is_inside()
    }

    /// Whether `next` may directly follow `prev` under IOB rules.
    pub fn valid_transition(prev: Label, next: Label) -> bool {
        !next.is_inside() || prev.entity() == next.entity()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.entity() {
            None => f.write_str("O"),
            Some(e) => {
                let prefix = if self.is_inside() { 'I' } else { 'B' };
                write!(f, "{}-{}", prefix, e.code())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownLabel(pub String);

impl fmt::Display for UnknownLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown label {:?}", self.0)
    }
}

impl FromStr for Label {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::ALL
            .iter()
            .copied()
            .find(|l| l.to_string() == s)
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn is_valid_iob(labels: &[Label]) -> bool {
    match labels.first() {
        None => true,
        Some(first) => {
            first.valid_start() && labels.windows(2).all(|w| Label::valid_transition(w[0], w[1]))
        }
    }
}

/// Entity span over token indices, `end` exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntitySpan {
    pub entity: EntityType,
    pub start: usize,
    pub end: usize,
}

/// Reads entity spans off a valid IOB sequence.
pub fn entity_spans(labels: &[Label]) -> Vec<EntitySpan> {
    let mut spans: Vec<EntitySpan> = Vec::new();
    let mut open: Option<EntitySpan> = None;
    for (i, label) in labels.iter().enumerate() {
        match (label.entity(), label.is_inside(), open.as_mut()) {
            (Some(e), true, Some(span)) if span.entity == e => span.end = i + 1,
            (Some(e), _, _) => {
                spans.extend(open.take());
                open = Some(EntitySpan { entity: e, start: i, end: i + 1 });
            }
            (None, _, _) => spans.extend(open.take()),
        }
    }
    spans.extend(open);
    spans
}
