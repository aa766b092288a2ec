use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::labels::{entity_spans, EntitySpan, EntityType, Label};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    tp: usize,
    fp: usize,
    fn_: usize,
}

impl Counts {
    fn prf(self) -> Prf {
        if self.tp + self.fp + self.fn_ == 0 {
            return Prf { precision: 1.0, recall: 1.0, f1: 1.0, support: 0 };
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Prf { precision, recall, f1, support: self.tp + self.fn_ }
    }
}

/// Entity-level scores: a prediction counts only on exact span and type match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityReport {
    pub modifier: Prf,
    pub number: Prf,
    pub part: Prf,
    pub whole: Prf,
}

impl EntityReport {
    pub fn get(&self, e: EntityType) -> Prf {
        match e {
            EntityType::Modifier => self.modifier,
            EntityType::Number => self.number,
            EntityType::Part => self.part,
            EntityType::Whole => self.whole,
        }
    }

    pub fn macro_f1(&self) -> f64 {
        EntityType::ALL.iter().map(|e| self.get(*e).f1).sum::<f64>() / 4.0
    }

    /// Arithmetic mean of several reports, field by field.
    pub fn mean(reports: &[EntityReport]) -> EntityReport {
        let n = reports.len().max(1) as f64;
        let avg = |e: EntityType| {
            let mut p = Prf::default();
            for r in reports {
                let x = r.get(e);
                p.precision += x.precision / n;
                p.recall += x.recall / n;
                p.f1 += x.f1 / n;
                p.support += x.support;
            }
            p
        };
        EntityReport {
            modifier: avg(EntityType::Modifier),
            number: avg(EntityType::Number),
            part: avg(EntityType::Part),
            whole: avg(EntityType::Whole),
        }
    }
}

/// Scores predicted label sequences against gold ones.
pub fn score_sequences<'a>(pairs: impl IntoIterator<Item = (&'a [Label], &'a [Label])>) -> EntityReport {
    let mut counts = [Counts::default(); 4];
    for (gold, pred) in pairs {
        let g: HashSet<EntitySpan> = entity_spans(gold).into_iter().collect();
        let p: HashSet<EntitySpan> = entity_spans(pred).into_iter().collect();
        for (i, e) in EntityType::ALL.iter().enumerate() {
            let gi: HashSet<_> = g.iter().filter(|s| s.entity == *e).collect();
            let pi: HashSet<_> = p.iter().filter(|s| s.entity == *e).collect();
            let tp = gi.intersection(&pi).count();
            counts[i].tp += tp;
            counts[i].fp += pi.len() - tp;
            counts[i].fn_ += gi.len() - tp;
        }
    }
    EntityReport {
        modifier: counts[0].prf(),
        number: counts[1].prf(),
        part: counts[2].prf(),
        whole: counts[3].prf(),
    }
}
