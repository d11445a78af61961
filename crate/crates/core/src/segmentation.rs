//! Graph-based segmentation on the 8-connected pixel grid.
//!
//! Edges carry the Euclidean RGB distance between neighbours and are
//! processed in ascending order through a disjoint-set forest. Two
//! components `C₁`, `C₂` joined by an edge of weight `w` merge iff
//!
//! ```text
//! w ≤ min(Int(C₁) + k/|C₁|, Int(C₂) + k/|C₂|)
//! ```
//!
//! where `Int(C)` is the largest weight accepted inside `C` and `k` is the
//! component size. Larger `k` merges more aggressively.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::RasterImage;

/// Grid edge between pixel indices `a` and `b` (row-major).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedEdge {
    pub a: u32,
    pub b: u32,
    pub w: f64,
}

/// Neighbour offsets in construction order: E, S, SE, NE.
const NEIGHBOURS: [(isize, isize); 4] = [(1, 0), (0, 1), (1, 1), (1, -1)];

fn color_distance(p: [f64; 3], q: [f64; 3]) -> f64 {
    let dr = p[0] - q[0];
    let dg = p[1] - q[1];
    let db = p[2] - q[2];
    (dr * dr + dg * dg + db * db).sqrt()
}

/// All 8-connected grid edges, in row-major order with neighbour order
/// E, S, SE, NE. The position in this vector is the tie-break index.
pub fn grid_edges(img: &RasterImage) -> Vec<WeightedEdge> {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let px = img.pixels();
    let mut edges = Vec::with_capacity(img.len() * 4);
    for y in 0..h {
        for x in 0..w {
            let a = (y * w + x) as usize;
            for (dx, dy) in NEIGHBOURS {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let b = (ny * w + nx) as usize;
                edges.push(WeightedEdge {
                    a: a as u32,
                    b: b as u32,
                    w: color_distance(px[a], px[b]),
                });
            }
        }
    }
    edges
}

/// Union-find with union by rank and path halving, tracking the pixel count
/// and merge threshold `Int(C) + k/|C|` of every root.
struct Forest {
    parent: Vec<u32>,
    rank: Vec<u8>,
    size: Vec<u32>,
    threshold: Vec<f64>,
}

impl Forest {
    fn new(n: usize, k: f64) -> Self {
        Forest {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
            size: vec![1; n],
            threshold: vec![k; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Links two distinct roots and returns the new root.
    fn union(&mut self, a: u32, b: u32) -> u32 {
        let (ai, bi) = (a as usize, b as usize);
        let (root, child) = if self.rank[ai] < self.rank[bi] {
            (b, a)
        } else {
            if self.rank[ai] == self.rank[bi] {
                self.rank[ai] += 1;
            }
            (a, b)
        };
        self.parent[child as usize] = root;
        self.size[root as usize] += self.size[child as usize];
        root
    }
}

/// Per-pixel cluster labels for one component size.
///
/// Labels are canonical: `0..num_clusters` assigned in order of each
/// cluster's first pixel in row-major order. `cluster_sizes[l]` is the pixel
/// count of label `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    width: usize,
    height: usize,
    component_size: f64,
    labels: Vec<u32>,
    cluster_sizes: Vec<usize>,
}

impl Segmentation {
    /// Wraps an arbitrary labeling, relabeling it canonically.
    pub fn from_labels(
        width: usize,
        height: usize,
        labels: &[u32],
        component_size: f64,
    ) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::invalid(format!(
                "{} labels do not match a {width}x{height} grid",
                labels.len()
            )));
        }
        let max = labels.iter().copied().max().unwrap_or(0) as usize;
        let mut remap = vec![u32::MAX; max + 1];
        Ok(Self::canonicalize(
            width,
            height,
            component_size,
            labels,
            |l| l as usize,
            &mut remap,
        ))
    }

    fn canonicalize(
        width: usize,
        height: usize,
        component_size: f64,
        raw: &[u32],
        key: impl Fn(u32) -> usize,
        remap: &mut [u32],
    ) -> Self {
        let mut labels = Vec::with_capacity(raw.len());
        let mut cluster_sizes = Vec::new();
        for &r in raw {
            let slot = &mut remap[key(r)];
            if *slot == u32::MAX {
                *slot = cluster_sizes.len() as u32;
                cluster_sizes.push(0);
            }
            cluster_sizes[*slot as usize] += 1;
            labels.push(*slot);
        }
        Segmentation {
            width,
            height,
            component_size,
            labels,
            cluster_sizes,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn component_size(&self) -> f64 {
        self.component_size
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn cluster_sizes(&self) -> &[usize] {
        &self.cluster_sizes
    }

    pub fn num_clusters(&self) -> usize {
        self.cluster_sizes.len()
    }

    /// JSON sidecar: `{component_size, num_clusters, cluster_sizes}`.
    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary<'a> {
            component_size: f64,
            num_clusters: usize,
            cluster_sizes: &'a [usize],
        }
        Ok(serde_json::to_string_pretty(&Summary {
            component_size: self.component_size,
            num_clusters: self.num_clusters(),
            cluster_sizes: &self.cluster_sizes,
        })?)
    }
}

/// Segments `img` with merge parameter `component_size`.
///
/// When `min_size > 0`, a second pass over the sorted edges merges any
/// adjacent pair of components where either side is smaller than
/// `min_size`.
pub fn segment(img: &RasterImage, component_size: f64, min_size: usize) -> Result<Segmentation> {
    if !(component_size.is_finite() && component_size > 0.0) {
        return Err(Error::invalid(format!(
            "component size must be positive, got {component_size}"
        )));
    }
    if img.len() > u32::MAX as usize {
        return Err(Error::invalid("image has too many pixels"));
    }

    let mut edges = grid_edges(img);
    // Stable: equal weights keep construction order.
    edges.sort_by(|p, q| p.w.total_cmp(&q.w));

    let k = component_size;
    let mut forest = Forest::new(img.len(), k);
    for e in &edges {
        let a = forest.find(e.a);
        let b = forest.find(e.b);
        if a != b && e.w <= forest.threshold[a as usize] && e.w <= forest.threshold[b as usize] {
            let root = forest.union(a, b);
            forest.threshold[root as usize] = e.w + k / forest.size[root as usize] as f64;
        }
    }

    if min_size > 0 {
        for e in &edges {
            let a = forest.find(e.a);
            let b = forest.find(e.b);
            if a != b
                && ((forest.size[a as usize] as usize) < min_size
                    || (forest.size[b as usize] as usize) < min_size)
            {
                forest.union(a, b);
            }
        }
    }

    let roots: Vec<u32> = (0..img.len() as u32).map(|i| forest.find(i)).collect();
    let mut remap = vec![u32::MAX; img.len()];
    Ok(Segmentation::canonicalize(
        img.width(),
        img.height(),
        component_size,
        &roots,
        |r| r as usize,
        &mut remap,
    ))
}

/// Cluster counts at two component sizes `smaller < larger`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoarseningReport {
    pub clusters_at_smaller: usize,
    pub clusters_at_larger: usize,
    /// `clusters_at_larger <= clusters_at_smaller`. Typical, not guaranteed.
    pub coarsened: bool,
}

pub fn greater_component_size_coarsens(
    img: &RasterImage,
    smaller: f64,
    larger: f64,
    min_size: usize,
) -> Result<CoarseningReport> {
    if smaller >= larger {
        return Err(Error::invalid(format!(
            "expected {smaller} < {larger} for a coarsening comparison"
        )));
    }
    let a = segment(img, smaller, min_size)?.num_clusters();
    let b = segment(img, larger, min_size)?.num_clusters();
    Ok(CoarseningReport {
        clusters_at_smaller: a,
        clusters_at_larger: b,
        coarsened: b <= a,
    })
}
