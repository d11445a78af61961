//! Hierarchical entropy for images.
//!
//! An image is clustered with a graph-based segmentation whose merge
//! threshold is the *component size*. The pixel grid is then cut into
//! `2ⁿ × 2ⁿ` regions per layer `n`, and each region is scored by the Shannon
//! entropy of its cluster-membership distribution. *Domain interaction*
//! measures how much the clusters of a region are split by its 2×2
//! sub-division.
//!
//! The pipeline is: [`raster::gaussian_smooth`] → [`segmentation::segment`]
//! → [`hierarchy::RegionGrid`] → [`metrics`] → [`sweep`] → [`render`].

pub mod error;
pub mod hierarchy;
pub mod metrics;
pub mod raster;
pub mod render;
pub mod segmentation;
pub mod sweep;

pub use error::{Error, Result};
pub use hierarchy::{Rect, RegionGrid};
pub use metrics::{
    domain_interaction, layer_entropy_map, region_entropy, straddle_set, EntropyMap, StraddleSet,
};
pub use raster::{gaussian_smooth, load_image, RasterImage};
pub use render::{render_curve, render_entropy_heatmap, render_label_map, HeatmapScale, Series};
pub use segmentation::{segment, Segmentation, WeightedEdge};
pub use sweep::{
    diff_component_size, entropy_sweep, interaction_sweep, persistent_regions, run_sweep,
    select_component_size, InteractionCurve, SweepPlan, SweepReport, SweepSettings,
    DEFAULT_COMPONENT_SIZES,
};
