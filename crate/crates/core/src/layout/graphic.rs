use serde::{Deserialize, Serialize};

use super::chart::{ChartGeometry, ChartKind};
use super::pictograph::PictographGrid;
use crate::assets::FillDirection;

/// The graphic types a blueprint slot may accept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphicType {
    Pictograph,
    FilledIcon,
    ScaledIcon,
    Adornment,
    Donut,
    Pie,
    Bar,
    StackedBar,
    Rings,
}

impl GraphicType {
    pub fn chart_kind(self) -> Option<ChartKind> {
        match self {
            GraphicType::Donut => Some(ChartKind::Donut),
            GraphicType::Pie => Some(ChartKind::Pie),
            GraphicType::Bar => Some(ChartKind::Bar),
            GraphicType::StackedBar => Some(ChartKind::StackedBar),
            GraphicType::Rings => Some(ChartKind::Rings),
            _ => None,
        }
    }

    /// Whether the graphic sums its facts into one whole.
    pub fn accumulates(self) -> bool {
        matches!(self, GraphicType::Donut | GraphicType::Pie | GraphicType::StackedBar)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IconRef {
    pub id: String,
    pub aspect: f64,
    #[serde(default)]
    pub fill_direction: FillDirection,
}

/// A concrete graphic ready to place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Graphic {
    Pictograph { icon: IconRef, grid: PictographGrid, fact: usize },
    /// One icon colored up to `fraction` along its fill direction.
    FilledIcon { icon: IconRef, fraction: f64, fact: usize },
    /// A small copy of the icon whose area is `fraction` of the large one.
    ScaledIcon { icon: IconRef, fraction: f64, fact: usize },
    Adornment { icon: IconRef },
    Background { icon: IconRef },
    Chart { geometry: ChartGeometry<f64>, facts: Vec<usize> },
}

impl Graphic {
    pub fn aspect(&self) -> f64 {
        match self {
            Graphic::Pictograph { icon, grid, .. } => grid.aspect(icon.aspect),
            Graphic::FilledIcon { icon, .. }
            | Graphic::ScaledIcon { icon, .. }
            | Graphic::Adornment { icon }
            | Graphic::Background { icon } => icon.aspect,
            Graphic::Chart { geometry, .. } => geometry.aspect,
        }
    }

    pub fn icon(&self) -> Option<&IconRef> {
        match self {
            Graphic::Pictograph { icon, .. }
            | Graphic::FilledIcon { icon, .. }
            | Graphic::ScaledIcon { icon, .. }
            | Graphic::Adornment { icon }
            | Graphic::Background { icon } => Some(icon),
            Graphic::Chart { .. } => None,
        }
    }

    pub fn graphic_type(&self) -> Option<GraphicType> {
        Some(match self {
            Graphic::Pictograph { .. } => GraphicType::Pictograph,
            Graphic::FilledIcon { .. } => GraphicType::FilledIcon,
            Graphic::ScaledIcon { .. } => GraphicType::ScaledIcon,
            Graphic::Adornment { .. } => GraphicType::Adornment,
            Graphic::Background { .. } => return None,
            Graphic::Chart { geometry, .. } => match geometry.kind {
                ChartKind::Pie => GraphicType::Pie,
                ChartKind::Donut => GraphicType::Donut,
                ChartKind::Bar => GraphicType::Bar,
                ChartKind::StackedBar => GraphicType::StackedBar,
                ChartKind::Rings => GraphicType::Rings,
            },
        })
    }
}
