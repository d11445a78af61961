//! Layered `2ⁿ × 2ⁿ` partitions of the pixel grid.
//!
//! Cuts along an axis of length `L` sit at `⌊i·L/2ⁿ⌋`. Because
//! `⌊i·L/2ⁿ⌋ = ⌊2i·L/2ⁿ⁺¹⌋`, every layer refines the one above it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-open pixel rectangle `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> usize {
        self.x1.saturating_sub(self.x0)
    }

    pub fn height(&self) -> usize {
        self.y1.saturating_sub(self.y0)
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn is_empty(&self) -> bool {
        self.area() == 0
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x0..self.x1).contains(&x) && (self.y0..self.y1).contains(&y)
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x0 >= self.x0 && other.x1 <= self.x1 && other.y0 >= self.y0 && other.y1 <= self.y1
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.x0.max(other.x0) < self.x1.min(other.x1)
            && self.y0.max(other.y0) < self.y1.min(other.y1)
    }
}

/// Checks that `parts` are nonoverlapping, lie inside `whole`, and cover it.
pub(crate) fn check_partition(whole: &Rect, parts: &[Rect]) -> Result<()> {
    if parts.is_empty() {
        return Err(Error::invalid("sub-regions must not be empty"));
    }
    for (i, p) in parts.iter().enumerate() {
        if !whole.contains_rect(p) {
            return Err(Error::invalid(format!("{p:?} lies outside {whole:?}")));
        }
        if let Some(q) = parts[i + 1..].iter().find(|q| p.intersects(q)) {
            return Err(Error::invalid(format!("{p:?} overlaps {q:?}")));
        }
    }
    let covered: usize = parts.iter().map(Rect::area).sum();
    if covered != whole.area() {
        return Err(Error::invalid(format!(
            "sub-regions cover {covered} of {} pixels",
            whole.area()
        )));
    }
    Ok(())
}

/// Layer `n`: the image cut into `2ⁿ × 2ⁿ` nonempty rectangles.
///
/// Regions are indexed row-major over the region grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionGrid {
    layer: u32,
    width: usize,
    height: usize,
    col_cuts: Vec<usize>,
    row_cuts: Vec<usize>,
}

fn cuts(len: usize, side: usize) -> Vec<usize> {
    (0..=side).map(|i| i * len / side).collect()
}

impl RegionGrid {
    /// Largest `n` with `2ⁿ ≤ min(width, height)`.
    pub fn max_layer(width: usize, height: usize) -> u32 {
        let m = width.min(height);
        if m == 0 {
            0
        } else {
            m.ilog2()
        }
    }

    pub fn new(width: usize, height: usize, layer: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        let max = Self::max_layer(width, height);
        if layer > max {
            return Err(Error::invalid(format!(
                "layer {layer} needs a grid of 2^{layer} regions per side but the \
                 {width}x{height} image allows at most layer {max}"
            )));
        }
        let side = 1usize << layer;
        Ok(RegionGrid {
            layer,
            width,
            height,
            col_cuts: cuts(width, side),
            row_cuts: cuts(height, side),
        })
    }

    pub fn layer(&self) -> u32 {
        self.layer
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Regions per axis, `2ⁿ`.
    pub fn side(&self) -> usize {
        1 << self.layer
    }

    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn col_cuts(&self) -> &[usize] {
        &self.col_cuts
    }

    pub fn row_cuts(&self) -> &[usize] {
        &self.row_cuts
    }

    /// `(region_row, region_col)` of a region index.
    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.side(), index % self.side())
    }

    /// Rectangle of region `index`; panics if out of range.
    pub fn region(&self, index: usize) -> Rect {
        assert!(index < self.len(), "region {index} out of range");
        let (r, c) = self.row_col(index);
        Rect::new(
            self.col_cuts[c],
            self.row_cuts[r],
            self.col_cuts[c + 1],
            self.row_cuts[r + 1],
        )
    }

    pub fn regions(&self) -> impl Iterator<Item = Rect> + '_ {
        (0..self.len()).map(move |i| self.region(i))
    }

    pub fn region_of_pixel(&self, x: usize, y: usize) -> Result<usize> {
        if x >= self.width || y >= self.height {
            return Err(Error::invalid(format!(
                "pixel ({x}, {y}) outside {}x{} image",
                self.width, self.height
            )));
        }
        let c = self.col_cuts.partition_point(|&cut| cut <= x) - 1;
        let r = self.row_cuts.partition_point(|&cut| cut <= y) - 1;
        Ok(r * self.side() + c)
    }

    /// Grid one layer down, if the image is large enough for it.
    pub fn finer(&self) -> Result<RegionGrid> {
        RegionGrid::new(self.width, self.height, self.layer + 1)
    }

    /// Indices at layer `n+1` of the 2×2 children of `index`, ordered
    /// top-left, top-right, bottom-left, bottom-right.
    pub fn child_indices(&self, index: usize) -> [usize; 4] {
        let (r, c) = self.row_col(index);
        let fine = self.side() * 2;
        let top = 2 * r * fine + 2 * c;
        [top, top + 1, top + fine, top + fine + 1]
    }

    /// The four layer-`n+1` rectangles whose union is region `index`.
    pub fn children_of(&self, index: usize) -> Result<[Rect; 4]> {
        if index >= self.len() {
            return Err(Error::invalid(format!(
                "region {index} out of range for layer {}",
                self.layer
            )));
        }
        let fine = self.finer()?;
        Ok(self.child_indices(index).map(|i| fine.region(i)))
    }
}
