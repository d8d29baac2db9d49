use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

/// One kernel half placed on the modulator. Extents and positions are
/// `(rows, cols)` in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tile {
    pub channel: usize,
    pub kernel: usize,
    pub polarity: Polarity,
    pub top: usize,
    pub left: usize,
    pub extents: (usize, usize),
}

/// Placement of all `2K` kernel halves on one modulator frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlmFrameLayout {
    pub canvas: (usize, usize),
    pub tiles: Vec<Tile>,
    /// Valid output-map extents each tile's correlation spreads over.
    pub map_extents: (usize, usize),
    pub guard_px: usize,
}

impl SlmFrameLayout {
    /// Tile grown by the output-map extents along each axis:
    /// `[top, top + tile + map) x [left, left + tile + map)`.
    pub fn expanded(&self, tile: &Tile) -> (usize, usize, usize, usize) {
        (
            tile.top,
            tile.top + tile.extents.0 + self.map_extents.0,
            tile.left,
            tile.left + tile.extents.1 + self.map_extents.1,
        )
    }

    /// Checks canvas containment and pairwise disjointness of expanded tiles.
    pub fn validate(&self) -> Result<()> {
        for t in &self.tiles {
            if t.top + t.extents.0 > self.canvas.0 || t.left + t.extents.1 > self.canvas.1 {
                return Err(Error::Layout(format!(
                    "tile {} at ({}, {}) leaves canvas {:?}",
                    t.channel, t.top, t.left, self.canvas
                )));
            }
        }
        for (i, a) in self.tiles.iter().enumerate() {
            let ea = self.expanded(a);
            for (j, b) in self.tiles.iter().enumerate().skip(i + 1) {
                let eb = self.expanded(b);
                let rows = ea.0 < eb.1 && eb.0 < ea.1;
                let cols = ea.2 < eb.3 && eb.2 < ea.3;
                if rows && cols {
                    return Err(Error::Crosstalk {
                        first: i,
                        second: j,
                    });
                }
            }
        }
        Ok(())
    }
}

fn required_canvas(cols: usize, n: usize, tile: (usize, usize), pitch: (usize, usize)) -> (usize, usize) {
    let rows = n.div_ceil(cols);
    (
        (rows - 1) * pitch.0 + tile.0,
        (cols - 1) * pitch.1 + tile.1,
    )
}

/// Places `2 * num_kernels` tiles row-major on a rectangular grid with pitch
/// `tile + map + guard` per axis, the positive and negative half of each
/// kernel adjacent. Uses as many columns as the canvas width allows.
pub fn plan_slm_layout(
    num_kernels: usize,
    tile: (usize, usize),
    map_extents: (usize, usize),
    guard_px: usize,
    canvas: (usize, usize),
) -> Result<SlmFrameLayout> {
    if num_kernels == 0 || tile.0 == 0 || tile.1 == 0 {
        return Err(Error::Parameter(
            "layout needs at least one kernel with non-empty tiles".into(),
        ));
    }
    let n = 2 * num_kernels;
    let pitch = (
        tile.0 + map_extents.0 + guard_px,
        tile.1 + map_extents.1 + guard_px,
    );
    let fit_cols = if canvas.1 >= tile.1 {
        ((canvas.1 - tile.1) / pitch.1 + 1).min(n)
    } else {
        0
    };
    let fits = fit_cols > 0 && {
        let need = required_canvas(fit_cols, n, tile, pitch);
        need.0 <= canvas.0 && need.1 <= canvas.1
    };
    if !fits {
        // smallest-area canvas, more columns on ties
        let minimum = (1..=n)
            .map(|c| required_canvas(c, n, tile, pitch))
            .fold(None::<(usize, usize)>, |best, cand| match best {
                Some(b) if b.0 * b.1 < cand.0 * cand.1 => Some(b),
                _ => Some(cand),
            })
            .expect("n >= 2");
        return Err(Error::LayoutCapacity { canvas, minimum });
    }
    let tiles = (0..n)
        .map(|i| Tile {
            channel: i,
            kernel: i / 2,
            polarity: if i % 2 == 0 {
                Polarity::Positive
            } else {
                Polarity::Negative
            },
            top: (i / fit_cols) * pitch.0,
            left: (i % fit_cols) * pitch.1,
            extents: tile,
        })
        .collect();
    let layout = SlmFrameLayout {
        canvas,
        tiles,
        map_extents,
        guard_px,
    };
    layout.validate()?;
    Ok(layout)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rasterises every expanded tile and counts pixel collisions.
    fn raster_overlaps(layout: &SlmFrameLayout) -> usize {
        let (h, w) = layout
            .tiles
            .iter()
            .map(|t| layout.expanded(t))
            .fold((0, 0), |(h, w), e| (h.max(e.1), w.max(e.3)));
        let mut hits = vec![0u8; h * w];
        let mut collisions = 0;
        for t in &layout.tiles {
            let e = layout.expanded(t);
            for r in e.0..e.1 {
                for c in e.2..e.3 {
                    if hits[r * w + c] > 0 {
                        collisions += 1;
                    }
                    hits[r * w + c] += 1;
                }
            }
        }
        collisions
    }

    #[test]
    fn nine_kernels_give_eighteen_tiles() {
        let l = plan_slm_layout(9, (30, 40), (31, 41), 4, (2000, 2000)).unwrap();
        assert_eq!(l.tiles.len(), 18);
        assert_eq!(raster_overlaps(&l), 0);
        assert_eq!(l.tiles[0].polarity, Polarity::Positive);
        assert_eq!(l.tiles[1].polarity, Polarity::Negative);
        assert_eq!(l.tiles[1].kernel, 0);
    }

    #[test]
    fn single_kernel_on_large_canvas() {
        let l = plan_slm_layout(1, (3, 3), (4, 4), 1, (10_000, 10_000)).unwrap();
        assert_eq!(l.tiles.len(), 2);
        assert_eq!(raster_overlaps(&l), 0);
    }

    #[test]
    fn minimal_canvas_is_reported_and_sufficient() {
        let err = plan_slm_layout(9, (30, 40), (31, 41), 4, (10, 10)).unwrap_err();
        let Error::LayoutCapacity { minimum, .. } = err else {
            panic!("expected capacity error, got {err:?}");
        };
        let l = plan_slm_layout(9, (30, 40), (31, 41), 4, minimum).unwrap();
        assert_eq!(l.tiles.len(), 18);
        assert_eq!(raster_overlaps(&l), 0);
        assert!(l
            .tiles
            .iter()
            .all(|t| t.top + 30 <= minimum.0 && t.left + 40 <= minimum.1));
        // one pixel less in either direction no longer holds the plan
        assert!(plan_slm_layout(9, (30, 40), (31, 41), 4, (minimum.0 - 1, minimum.1)).is_err()
            || plan_slm_layout(9, (30, 40), (31, 41), 4, (minimum.0, minimum.1 - 1)).is_err());
    }

    #[test]
    fn overlapping_layout_is_crosstalk() {
        let mut l = plan_slm_layout(2, (3, 3), (4, 4), 1, (100, 100)).unwrap();
        l.tiles[1].left = l.tiles[0].left + 2;
        assert!(matches!(l.validate(), Err(Error::Crosstalk { .. })));
    }

    #[test]
    fn layouts_never_overlap() {
        for k in 1..8 {
            for guard in [0, 1, 5] {
                for canvas in [(200, 200), (400, 150), (1000, 90)] {
                    if let Ok(l) = plan_slm_layout(k, (7, 9), (5, 6), guard, canvas) {
                        assert_eq!(raster_overlaps(&l), 0);
                    }
                }
            }
        }
    }
}
