use serde::{Deserialize, Serialize};

/// Gap between pictograph icons as a fraction of the icon height.
pub const GRID_GAP: f64 = 0.15;

/// A grid of icons whose filled amount encodes a proportion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PictographGrid {
    pub rows: usize,
    pub cols: usize,
    /// Fully filled icons, counted in reading order.
    pub filled: usize,
    /// Fill of the icon after the last full one, in [0, 1).
    pub partial: f64,
    /// Built from an "m in n" count rather than the 10-icon approximation.
    pub exact: bool,
}

impl PictographGrid {
    pub fn count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn filled_fraction(&self) -> f64 {
        (self.filled as f64 + self.partial) / self.count() as f64
    }

    /// Width over height of the whole grid for icons of the given aspect.
    pub fn aspect(&self, icon_aspect: f64) -> f64 {
        let (r, c) = (self.rows as f64, self.cols as f64);
        (c * icon_aspect + (c - 1.0) * GRID_GAP) / (r + (r - 1.0) * GRID_GAP)
    }

    /// Top-left corner of icon `k` (reading order) in icon-height units.
    pub fn cell_origin(&self, k: usize, icon_aspect: f64) -> (f64, f64) {
        let (row, col) = (k / self.cols, k % self.cols);
        (col as f64 * (icon_aspect + GRID_GAP), row as f64 * (1.0 + GRID_GAP))
    }

    /// Fill of icon `k` in [0, 1].
    pub fn fill_of(&self, k: usize) -> f64 {
        match k.cmp(&self.filled) {
            std::cmp::Ordering::Less => 1.0,
            std::cmp::Ordering::Equal => self.partial,
            std::cmp::Ordering::Greater => 0.0,
        }
    }
}

fn approximate(value: f64, rows: usize, cols: usize) -> PictographGrid {
    let n = (rows * cols) as f64;
    // value·n to nine decimals, so 0.65·10 reads as 6.5 rather than 6.500000000000001
    let x = (value * n * 1e9).round() / 1e9;
    let filled = (x.floor() as usize).min(rows * cols);
    let partial = if filled == rows * cols { 0.0 } else { x - filled as f64 };
    PictographGrid { rows, cols, filled, partial, exact: false }
}

/// Grid layouts for a proportion. An "m in n" count with n ≤ 10 gets only its
/// exact grids, so the icon count always matches the statement; anything else
/// gets the 10-icon and 5-icon approximations (2×5, 1×5, 1×10).
pub fn pictograph_options(value: f64, numerator: Option<u64>, denominator: Option<u64>) -> Vec<PictographGrid> {
    let mut out = Vec::new();
    if let (Some(m), Some(n)) = (numerator, denominator) {
        if n >= 1 && n <= 10 && m <= n {
            let (m, n) = (m as usize, n as usize);
            out.push(PictographGrid { rows: 1, cols: n, filled: m, partial: 0.0, exact: true });
            if n >= 6 && n % 2 == 0 {
                out.push(PictographGrid { rows: 2, cols: n / 2, filled: m, partial: 0.0, exact: true });
            }
            return out;
        }
    }
    for (rows, cols) in [(2, 5), (1, 5), (1, 10)] {
        let g = approximate(value, rows, cols);
        out.push(g);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_in_five() {
        let opts = pictograph_options(0.4, Some(2), Some(5));
        assert_eq!(opts[0], PictographGrid { rows: 1, cols: 5, filled: 2, partial: 0.0, exact: true });
        assert!(opts.iter().all(|g| g.exact && g.count() == 5 && g.filled == 2));
    }

    #[test]
    fn sixty_five_percent_on_ten() {
        let g = pictograph_options(0.65, None, None).into_iter().find(|g| g.rows == 1 && g.cols == 10).unwrap();
        assert_eq!((g.filled, g.partial), (6, 0.5));
        assert_eq!(g.fill_of(5), 1.0);
        assert_eq!(g.fill_of(6), 0.5);
        assert_eq!(g.fill_of(7), 0.0);
    }

    #[test]
    fn full_and_empty() {
        for g in pictograph_options(1.0, None, None) {
            assert_eq!((g.filled, g.partial), (g.count(), 0.0));
        }
        for g in pictograph_options(0.0, None, None) {
            assert_eq!((g.filled, g.partial), (0, 0.0));
        }
    }

    #[test]
    fn grid_aspect() {
        let g = PictographGrid { rows: 2, cols: 5, filled: 0, partial: 0.0, exact: false };
        assert!((g.aspect(1.0) - (5.0 + 0.6) / 2.15).abs() < 1e-12);
    }
}
