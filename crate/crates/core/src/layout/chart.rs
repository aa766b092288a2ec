//! Data-driven chart shapes, in unit coordinates.

use serde::{Deserialize, Serialize};

use super::LayoutError;
use crate::scalar::Real;

pub const DEFAULT_INNER_RATIO: f64 = 0.6;
/// Track length over bar thickness.
pub const BAR_ASPECT: f64 = 6.0;
pub const STACKED_BAR_ASPECT: f64 = 8.0;
/// Space between concentric rings as a fraction of each ring's radial band.
pub const RING_GAP: f64 = 0.3;
const OVERFLOW_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartKind {
    Pie,
    Donut,
    Bar,
    StackedBar,
    Rings,
}

/// An angular slice; angles in degrees, clockwise from 12 o'clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sector<T> {
    pub start: T,
    pub sweep: T,
    /// The fact drawn; `None` for the remainder.
    pub fact: Option<usize>,
    /// Radii as fractions of the outer radius.
    pub outer: T,
    pub inner: T,
}

/// A horizontal segment of a bar track; offsets and lengths in track units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarSegment<T> {
    pub row: usize,
    pub offset: T,
    pub length: T,
    pub fact: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartGeometry<T> {
    pub kind: ChartKind,
    pub sectors: Vec<Sector<T>>,
    pub segments: Vec<BarSegment<T>>,
    /// Bar rows (1 for a single or stacked bar).
    pub rows: usize,
    pub aspect: T,
}

/// Point on a circle at `deg` clockwise from 12 o'clock.
pub fn arc_point<T: Real>(cx: T, cy: T, r: T, deg: T) -> (T, T) {
    let t = deg.to_radians();
    (cx + r * t.sin(), cy - r * t.cos())
}

/// Geometry for `values` (each in [0, 1]).
///
/// Pie, donut and stacked bar accumulate the values in one whole; a plain bar
/// draws one track per value; rings draw one concentric ring per value.
pub fn chart_geometry<T: Real>(kind: ChartKind, values: &[T], inner_ratio: T) -> Result<ChartGeometry<T>, LayoutError> {
    let total = values.iter().fold(T::zero(), |a, &v| a + v);
    let accumulates = matches!(kind, ChartKind::Pie | ChartKind::Donut | ChartKind::StackedBar);
    if accumulates && total > T::one() + T::of(OVERFLOW_SLACK) {
        return Err(LayoutError::AccumulationOverflow(total.to_f64().unwrap()));
    }
    let full = T::of(360.0);
    let mut geo = ChartGeometry { kind, sectors: Vec::new(), segments: Vec::new(), rows: 1, aspect: T::one() };
    let remainder = (T::one() - total).max(T::zero());
    let leftover = remainder > T::of(OVERFLOW_SLACK);
    match kind {
        ChartKind::Pie | ChartKind::Donut => {
            let inner = if kind == ChartKind::Donut { inner_ratio } else { T::zero() };
            let mut start = T::zero();
            for (i, &v) in values.iter().enumerate() {
                let sweep = (v * full).min(full - start);
                geo.sectors.push(Sector { start, sweep, fact: Some(i), outer: T::one(), inner });
                start = start + sweep;
            }
            if leftover {
                geo.sectors.push(Sector { start, sweep: full - start, fact: None, outer: T::one(), inner });
            }
        }
        ChartKind::Rings => {
            let n = T::of(values.len() as f64);
            let step = T::one() / n;
            for (i, &v) in values.iter().enumerate() {
                let outer = T::one() - step * T::of(i as f64);
                let inner = outer - step * T::of(1.0 - RING_GAP);
                let sweep = v.min(T::one()) * full;
                geo.sectors.push(Sector { start: T::zero(), sweep, fact: Some(i), outer, inner });
                if sweep < full {
                    geo.sectors.push(Sector { start: sweep, sweep: full - sweep, fact: None, outer, inner });
                }
            }
        }
        ChartKind::Bar => {
            for (i, &v) in values.iter().enumerate() {
                let v = v.min(T::one());
                geo.segments.push(BarSegment { row: i, offset: T::zero(), length: v, fact: Some(i) });
                geo.segments.push(BarSegment { row: i, offset: v, length: T::one() - v, fact: None });
            }
            geo.rows = values.len().max(1);
            let r = T::of(geo.rows as f64);
            geo.aspect = T::of(BAR_ASPECT) / (r + T::of(0.5) * (r - T::one()));
        }
        ChartKind::StackedBar => {
            let mut offset = T::zero();
            for (i, &v) in values.iter().enumerate() {
                let length = v.min(T::one() - offset);
                geo.segments.push(BarSegment { row: 0, offset, length, fact: Some(i) });
                offset = offset + length;
            }
            if leftover {
                geo.segments.push(BarSegment { row: 0, offset, length: T::one() - offset, fact: None });
            }
            geo.aspect = T::of(STACKED_BAR_ASPECT);
        }
    }
    Ok(geo)
}
