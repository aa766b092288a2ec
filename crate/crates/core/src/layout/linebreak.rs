//! Minimum-raggedness line breaking for a fixed line count.
//!
//! Raggedness is Σ (longest line − line)². The longest line of the optimum is
//! the width of some run of consecutive words, so for every candidate maximum
//! `M` a DP finds the cheapest split into lines no longer than `M` scored
//! against `M`; rescored against its true longest line, the best over all `M`
//! is the exact optimum.

use std::ops::Range;

use super::fonts::{FontMetrics, LINE_HEIGHT};
use super::LayoutError;
use crate::scalar::Field;

#[derive(Debug, Clone, PartialEq)]
pub struct LineBreaking<T> {
    /// Word ranges, one per line.
    pub lines: Vec<Range<usize>>,
    pub line_widths: Vec<T>,
    pub max_width: T,
    pub raggedness: T,
}

/// Width of words `i..j` set on one line.
fn span<T: Field>(prefix: &[T], space: &T, i: usize, j: usize) -> T {
    prefix[j].clone() - prefix[i].clone() + space.clone() * T::from_f64_lossy((j - i - 1) as f64)
}

pub fn raggedness<T: Field>(widths: &[T]) -> T {
    let max = widths.iter().cloned().fold(T::zero(), |a, b| if b > a { b } else { a });
    widths.iter().fold(T::zero(), |acc, w| {
        let d = max.clone() - w.clone();
        acc + d.clone() * d
    })
}

/// Optimal split of words with the given widths into exactly `lines` lines.
pub fn break_widths<T: Field>(words: &[T], space: &T, lines: usize) -> Result<LineBreaking<T>, LayoutError> {
    let n = words.len();
    if lines == 0 || lines > n {
        return Err(LayoutError::TooManyLines { lines, words: n });
    }
    let mut prefix = vec![T::zero()];
    for w in words {
        let next = prefix.last().unwrap().clone() + w.clone();
        prefix.push(next);
    }
    let widest_word = words.iter().cloned().fold(T::zero(), |a, b| if b > a { b } else { a });
    let lower = (span(&prefix, space, 0, n) - space.clone() * T::from_f64_lossy((lines - 1) as f64))
        / T::from_f64_lossy(lines as f64);
    let mut candidates: Vec<T> = Vec::new();
    for i in 0..n {
        for j in i + 1..=n {
            let w = span(&prefix, space, i, j);
            if w >= widest_word && !(w.clone() - lower.clone()).is_neg() {
                candidates.push(w);
            }
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup_by(|a, b| (a.clone() - b.clone()).near_zero());

    let mut best: Option<(T, Vec<usize>)> = None;
    for m in &candidates {
        let Some(starts) = dp_under(&prefix, space, n, lines, m) else { continue };
        let widths = line_widths(&prefix, space, &starts, n);
        let cost = raggedness(&widths);
        if best.as_ref().map_or(true, |(b, _)| (cost.clone() - b.clone()).is_neg()) {
            best = Some((cost, starts));
        }
    }
    let (raggedness, starts) = best.expect("the full-line maximum always admits a split");
    let ranges: Vec<Range<usize>> =
        starts.iter().enumerate().map(|(k, &s)| s..starts.get(k + 1).copied().unwrap_or(n)).collect();
    let widths = line_widths(&prefix, space, &starts, n);
    let max_width = widths.iter().cloned().fold(T::zero(), |a, b| if b > a { b } else { a });
    Ok(LineBreaking { lines: ranges, line_widths: widths, max_width, raggedness })
}

fn line_widths<T: Field>(prefix: &[T], space: &T, starts: &[usize], n: usize) -> Vec<T> {
    starts
        .iter()
        .enumerate()
        .map(|(k, &s)| span(prefix, space, s, starts.get(k + 1).copied().unwrap_or(n)))
        .collect()
}

/// Line start indices minimizing Σ (m − width)² with every line ≤ m.
fn dp_under<T: Field>(prefix: &[T], space: &T, n: usize, lines: usize, m: &T) -> Option<Vec<usize>> {
    // cost[k][j]: best cost of words 0..j on k lines.
    let mut cost: Vec<Vec<Option<T>>> = vec![vec![None; n + 1]; lines + 1];
    let mut back = vec![vec![0usize; n + 1]; lines + 1];
    cost[0][0] = Some(T::zero());
    for k in 1..=lines {
        for j in k..=n {
            let mut best: Option<T> = None;
            for i in (k - 1)..j {
                let Some(prev) = cost[k - 1][i].clone() else { continue };
                let w = span(prefix, space, i, j);
                if (w.clone() - m.clone()).is_pos() {
                    continue;
                }
                let d = m.clone() - w;
                let c = prev + d.clone() * d;
                if best.as_ref().map_or(true, |b| (c.clone() - b.clone()).is_neg()) {
                    best = Some(c);
                    back[k][j] = i;
                }
            }
            cost[k][j] = best;
        }
    }
    cost[lines][n].as_ref()?;
    let mut starts = vec![0; lines];
    let mut j = n;
    for k in (1..=lines).rev() {
        starts[k - 1] = back[k][j];
        j = back[k][j];
    }
    Some(starts)
}

/// Text set in a font with a fixed number of lines.
#[derive(Debug, Clone, PartialEq)]
pub struct TextBlock {
    pub lines: Vec<String>,
    /// Line widths per unit font size.
    pub line_widths: Vec<f64>,
    /// Block width per unit font size.
    pub width: f64,
    /// Block height per unit font size.
    pub height: f64,
    pub raggedness_units: f64,
}

impl TextBlock {
    pub fn aspect(&self) -> f64 {
        self.width / self.height
    }
}

/// Breaks `text` at spaces into exactly `lines` lines of minimum raggedness.
pub fn break_lines(text: &str, font: &FontMetrics, lines: usize) -> Result<TextBlock, LayoutError> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let widths: Vec<f64> = words.iter().map(|w| font.width_units(w) as f64).collect();
    let b = break_widths(&widths, &(font.space_units() as f64), lines)?;
    Ok(TextBlock {
        lines: b.lines.iter().map(|r| words[r.clone()].join(" ")).collect(),
        line_widths: b.line_widths.iter().map(|w| w / 1000.0).collect(),
        width: b.max_width / 1000.0,
        height: lines as f64 * LINE_HEIGHT,
        raggedness_units: b.raggedness,
    })
}
