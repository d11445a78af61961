//! Region entropy, layer-mean entropy and domain interaction.
//!
//! All entropies are in bits, with `0·log 0 = 0`. Probabilities are always
//! taken over the pixels inside the region under study: a cluster that
//! extends past the region only contributes its in-region pixels.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{check_partition, Rect, RegionGrid};
use crate::segmentation::Segmentation;

/// Shannon entropy in bits of the distribution `counts / total`.
pub fn entropy_bits(counts: impl IntoIterator<Item = usize>, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let h: f64 = counts
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    // Avoid printing -0.
    h.max(0.0)
}

/// Dense per-label counters with a touched list, reused across regions.
pub(crate) struct LabelCounter {
    counts: Vec<usize>,
    touched: Vec<u32>,
}

impl LabelCounter {
    pub(crate) fn new(num_labels: usize) -> Self {
        LabelCounter {
            counts: vec![0; num_labels],
            touched: Vec::new(),
        }
    }

    fn tally(&mut self, seg: &Segmentation, rect: &Rect) {
        let labels = seg.labels();
        let w = seg.width();
        for y in rect.y0..rect.y1 {
            for &l in &labels[y * w + rect.x0..y * w + rect.x1] {
                let c = &mut self.counts[l as usize];
                if *c == 0 {
                    self.touched.push(l);
                }
                *c += 1;
            }
        }
    }

    /// Entropy of the tallied labels; clears the counter.
    fn drain_entropy(&mut self, total: usize) -> f64 {
        let counts = &self.counts;
        let h = entropy_bits(self.touched.iter().map(|&l| counts[l as usize]), total);
        self.clear();
        h
    }

    fn clear(&mut self) {
        for &l in &self.touched {
            self.counts[l as usize] = 0;
        }
        self.touched.clear();
    }
}

fn check_rect(seg: &Segmentation, rect: &Rect) -> Result<()> {
    if rect.is_empty() {
        return Err(Error::invalid(format!("region {rect:?} is empty")));
    }
    if rect.x1 > seg.width() || rect.y1 > seg.height() {
        return Err(Error::invalid(format!(
            "region {rect:?} exceeds the {}x{} image",
            seg.width(),
            seg.height()
        )));
    }
    Ok(())
}

/// Entropy of the cluster-membership distribution inside `region`.
pub fn region_entropy(seg: &Segmentation, region: Rect) -> Result<f64> {
    check_rect(seg, &region)?;
    let mut counter = LabelCounter::new(seg.num_clusters());
    counter.tally(seg, &region);
    Ok(counter.drain_entropy(region.area()))
}

/// Per-region entropies of one layer for one component size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyMap {
    pub layer: u32,
    pub component_size: f64,
    /// Regions per axis (`2ⁿ`).
    pub side: usize,
    /// Row-major over the region grid.
    pub values: Vec<f64>,
    /// Arithmetic mean of `values`.
    pub mean: f64,
}

#[derive(Serialize)]
struct EntropyRow {
    layer: u32,
    region_row: usize,
    region_col: usize,
    component_size: f64,
    entropy: f64,
}

impl EntropyMap {
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.side + col]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// CSV with columns `layer, region_row, region_col, component_size, entropy`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (i, &entropy) in self.values.iter().enumerate() {
            w.serialize(EntropyRow {
                layer: self.layer,
                region_row: i / self.side,
                region_col: i % self.side,
                component_size: self.component_size,
                entropy,
            })?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn check_grid(seg: &Segmentation, grid: &RegionGrid) -> Result<()> {
    if grid.width() != seg.width() || grid.height() != seg.height() {
        return Err(Error::invalid(format!(
            "grid is {}x{} but segmentation is {}x{}",
            grid.width(),
            grid.height(),
            seg.width(),
            seg.height()
        )));
    }
    Ok(())
}

/// Entropy of every region of `grid` plus their mean.
pub fn layer_entropy_map(seg: &Segmentation, grid: &RegionGrid) -> Result<EntropyMap> {
    check_grid(seg, grid)?;
    let mut counter = LabelCounter::new(seg.num_clusters());
    let values: Vec<f64> = grid
        .regions()
        .map(|rect| {
            counter.tally(seg, &rect);
            counter.drain_entropy(rect.area())
        })
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok(EntropyMap {
        layer: grid.layer(),
        component_size: seg.component_size(),
        side: grid.side(),
        values,
        mean,
    })
}

/// Pixel counts of each cluster present in `upper`, split by child.
struct ClusterSplit {
    /// Clusters in first-seen order.
    clusters: Vec<u32>,
    /// `per_child[i * m + j]`: pixels of `clusters[i]` in child `j`.
    per_child: Vec<usize>,
    children: usize,
}

impl ClusterSplit {
    /// `slot` must hold `u32::MAX` for every label; it is restored on return.
    fn build(
        seg: &Segmentation,
        upper: &Rect,
        children: &[Rect],
        slot: &mut [u32],
    ) -> Result<Self> {
        check_rect(seg, upper)?;
        check_partition(upper, children)?;
        let m = children.len();
        let mut clusters = Vec::new();
        let mut per_child = Vec::new();
        let w = seg.width();
        for (j, child) in children.iter().enumerate() {
            for y in child.y0..child.y1 {
                for &l in &seg.labels()[y * w + child.x0..y * w + child.x1] {
                    let s = &mut slot[l as usize];
                    if *s == u32::MAX {
                        *s = clusters.len() as u32;
                        clusters.push(l);
                        per_child.extend(std::iter::repeat_n(0, m));
                    }
                    per_child[*s as usize * m + j] += 1;
                }
            }
        }
        for &l in &clusters {
            slot[l as usize] = u32::MAX;
        }
        Ok(ClusterSplit {
            clusters,
            per_child,
            children: m,
        })
    }

    fn row(&self, i: usize) -> &[usize] {
        &self.per_child[i * self.children..(i + 1) * self.children]
    }

    fn straddles(&self, i: usize) -> bool {
        self.row(i).iter().filter(|&&c| c > 0).count() >= 2
    }
}

/// Domain interaction of `upper` with its sub-regions `children`:
///
/// `I = Σ_{c ∈ B} P(c) · H(child | c)`
///
/// where `B` is the set of clusters straddling two or more children. Since
/// non-straddling clusters have `H(child | c) = 0`, this is the conditional
/// entropy of child index given cluster over the pixels of `upper`.
pub fn domain_interaction(seg: &Segmentation, upper: Rect, children: &[Rect]) -> Result<f64> {
    let mut slot = vec![u32::MAX; seg.num_clusters()];
    interaction_with(seg, &upper, children, &mut slot)
}

fn interaction_with(
    seg: &Segmentation,
    upper: &Rect,
    children: &[Rect],
    slot: &mut [u32],
) -> Result<f64> {
    let split = ClusterSplit::build(seg, upper, children, slot)?;
    let total = upper.area() as f64;
    let mut interaction = 0.0;
    for i in 0..split.clusters.len() {
        if !split.straddles(i) {
            continue;
        }
        let row = split.row(i);
        let in_upper: usize = row.iter().sum();
        interaction += in_upper as f64 / total * entropy_bits(row.iter().copied(), in_upper);
    }
    Ok(interaction)
}

/// Clusters of an upper region that have pixels in at least two children.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StraddleSet {
    pub upper: Rect,
    /// Canonical labels, in first-seen order (children scanned in order).
    pub clusters: Vec<u32>,
}

pub fn straddle_set(seg: &Segmentation, upper: Rect, children: &[Rect]) -> Result<StraddleSet> {
    let mut slot = vec![u32::MAX; seg.num_clusters()];
    let split = ClusterSplit::build(seg, &upper, children, &mut slot)?;
    let clusters = (0..split.clusters.len())
        .filter(|&i| split.straddles(i))
        .map(|i| split.clusters[i])
        .collect();
    Ok(StraddleSet { upper, clusters })
}

/// Interaction of every region of `grid` with its 2×2 children.
pub fn layer_interactions(seg: &Segmentation, grid: &RegionGrid) -> Result<Vec<f64>> {
    check_grid(seg, grid)?;
    let fine = grid.finer()?;
    let mut slot = vec![u32::MAX; seg.num_clusters()];
    (0..grid.len())
        .map(|i| {
            let children = grid.child_indices(i).map(|c| fine.region(c));
            interaction_with(seg, &grid.region(i), &children, &mut slot)
        })
        .collect()
}
