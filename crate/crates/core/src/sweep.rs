//! Component-size and layer sweeps, component-size selection, persistent
//! high-entropy regions and the component-size agreement rule.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::RegionGrid;
use crate::metrics::{layer_entropy_map, layer_interactions, EntropyMap};
use crate::raster::{gaussian_smooth, RasterImage};
use crate::segmentation::{segment, Segmentation};

/// The standard 19-step schedule: 100..=1000 by 100, then 2000..=10000 by 1000.
pub const DEFAULT_COMPONENT_SIZES: [f64; 19] = [
    100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0, 900.0, 1000.0, 2000.0, 3000.0, 4000.0,
    5000.0, 6000.0, 7000.0, 8000.0, 9000.0, 10000.0,
];

pub const DEFAULT_SIGMA: f64 = 2.0;
pub const DEFAULT_MAX_LAYER: u32 = 6;
pub const DEFAULT_UPPER_LAYER: u32 = 1;

/// Layers `0..=6`, clipped to what the image supports.
pub fn default_layers(width: usize, height: usize) -> Vec<u32> {
    (0..=DEFAULT_MAX_LAYER.min(RegionGrid::max_layer(width, height))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub sigma: f64,
    pub min_size: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            sigma: DEFAULT_SIGMA,
            min_size: 0,
        }
    }
}

/// What a sweep computes for every component size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub component_sizes: Vec<f64>,
    /// Layers at which entropy maps are produced.
    pub layers: Vec<u32>,
    /// Layer whose regions are scored against their 2×2 children.
    pub upper_layer: Option<u32>,
}

impl SweepPlan {
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        validate_component_sizes(&self.component_sizes)?;
        for &n in &self.layers {
            RegionGrid::new(width, height, n)?;
        }
        if let Some(n) = self.upper_layer {
            RegionGrid::new(width, height, n + 1).map_err(|_| {
                Error::invalid(format!(
                    "upper layer {n} needs layer {} below it, but the {width}x{height} image \
                     allows at most upper layer {}",
                    n + 1,
                    RegionGrid::max_layer(width, height) as i64 - 1
                ))
            })?;
        }
        Ok(())
    }
}

/// Positive, finite and strictly increasing.
pub fn validate_component_sizes(sizes: &[f64]) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::invalid("component-size list is empty"));
    }
    if let Some(bad) = sizes.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
        return Err(Error::invalid(format!(
            "component sizes must be positive, got {bad}"
        )));
    }
    if let Some(pair) = sizes.windows(2).find(|p| p[0] >= p[1]) {
        return Err(Error::invalid(format!(
            "component sizes must be strictly increasing, got {} before {}",
            pair[0], pair[1]
        )));
    }
    Ok(())
}

/// Interaction of one upper region as a function of component size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionCurve {
    pub upper_layer: u32,
    pub upper_region: usize,
    /// `(component_size, interaction_bits)`, sorted by component size.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub width: usize,
    pub height: usize,
    pub settings: SweepSettings,
    pub component_sizes: Vec<f64>,
    pub layers: Vec<u32>,
    /// Cluster count per component size.
    pub cluster_counts: Vec<usize>,
    /// One map per (component size, layer), component-size major.
    pub entropy: Vec<EntropyMap>,
    pub upper_layer: Option<u32>,
    /// One curve per region of `upper_layer`.
    pub interaction: Vec<InteractionCurve>,
    /// Number of segmentations performed to build this report.
    #[serde(skip)]
    pub segmentations: usize,
}

#[derive(Serialize)]
struct LongRow {
    layer: String,
    region: String,
    component_size: f64,
    metric_name: &'static str,
    value: f64,
}

impl SweepReport {
    pub fn entropy_map(&self, layer: u32, component_size: f64) -> Option<&EntropyMap> {
        self.entropy
            .iter()
            .find(|m| m.layer == layer && m.component_size == component_size)
    }

    /// `(component_size, layer-mean entropy)` for one layer.
    pub fn layer_means(&self, layer: u32) -> Vec<(f64, f64)> {
        self.entropy
            .iter()
            .filter(|m| m.layer == layer)
            .map(|m| (m.component_size, m.mean))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Long-format CSV: `layer, region, component_size, metric_name, value`.
    ///
    /// Metrics are `clusters` (no layer or region), `entropy` per region,
    /// `mean_entropy` per layer (region `all`) and `interaction` per upper
    /// region.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (&k, &count) in self.component_sizes.iter().zip(&self.cluster_counts) {
            w.serialize(LongRow {
                layer: String::new(),
                region: String::new(),
                component_size: k,
                metric_name: "clusters",
                value: count as f64,
            })?;
        }
        for map in &self.entropy {
            for (i, &v) in map.values.iter().enumerate() {
                w.serialize(LongRow {
                    layer: map.layer.to_string(),
                    region: i.to_string(),
                    component_size: map.component_size,
                    metric_name: "entropy",
                    value: v,
                })?;
            }
            w.serialize(LongRow {
                layer: map.layer.to_string(),
                region: "all".into(),
                component_size: map.component_size,
                metric_name: "mean_entropy",
                value: map.mean,
            })?;
        }
        for curve in &self.interaction {
            for &(k, v) in &curve.points {
                w.serialize(LongRow {
                    layer: curve.upper_layer.to_string(),
                    region: curve.upper_region.to_string(),
                    component_size: k,
                    metric_name: "interaction",
                    value: v,
                })?;
            }
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

struct SizeResult {
    clusters: usize,
    maps: Vec<EntropyMap>,
    interactions: Vec<f64>,
}

/// Smooths once, segments once per component size, and evaluates every
/// requested metric on that segmentation. Component sizes run in parallel;
/// the report is assembled in component-size order.
pub fn run_sweep(
    img: &RasterImage,
    plan: &SweepPlan,
    settings: &SweepSettings,
) -> Result<SweepReport> {
    let (w, h) = (img.width(), img.height());
    plan.validate(w, h)?;
    let smoothed = gaussian_smooth(img, settings.sigma)?;
    let grids: Vec<RegionGrid> = plan
        .layers
        .iter()
        .map(|&n| RegionGrid::new(w, h, n))
        .collect::<Result<_>>()?;
    let upper = plan
        .upper_layer
        .map(|n| RegionGrid::new(w, h, n))
        .transpose()?;

    let calls = AtomicUsize::new(0);
    let per_size: Vec<SizeResult> = plan
        .component_sizes
        .par_iter()
        .map(|&k| {
            calls.fetch_add(1, Ordering::Relaxed);
            let seg = segment(&smoothed, k, settings.min_size)?;
            let maps = grids
                .iter()
                .map(|g| layer_entropy_map(&seg, g))
                .collect::<Result<_>>()?;
            let interactions = match &upper {
                Some(g) => layer_interactions(&seg, g)?,
                None => Vec::new(),
            };
            Ok(SizeResult {
                clusters: seg.num_clusters(),
                maps,
                interactions,
            })
        })
        .collect::<Result<_>>()?;

    let interaction = match &upper {
        Some(g) => (0..g.len())
            .map(|r| InteractionCurve {
                upper_layer: g.layer(),
                upper_region: r,
                points: plan
                    .component_sizes
                    .iter()
                    .zip(&per_size)
                    .map(|(&k, res)| (k, res.interactions[r]))
                    .collect(),
            })
            .collect(),
        None => Vec::new(),
    };
    let cluster_counts = per_size.iter().map(|r| r.clusters).collect();
    let entropy = per_size.into_iter().flat_map(|r| r.maps).collect();

    Ok(SweepReport {
        width: w,
        height: h,
        settings: *settings,
        component_sizes: plan.component_sizes.clone(),
        layers: plan.layers.clone(),
        cluster_counts,
        entropy,
        upper_layer: plan.upper_layer,
        interaction,
        segmentations: calls.into_inner(),
    })
}

pub fn entropy_sweep(
    img: &RasterImage,
    component_sizes: &[f64],
    layers: &[u32],
    settings: &SweepSettings,
) -> Result<SweepReport> {
    if layers.is_empty() {
        return Err(Error::invalid("layer list is empty"));
    }
    let plan = SweepPlan {
        component_sizes: component_sizes.to_vec(),
        layers: layers.to_vec(),
        upper_layer: None,
    };
    run_sweep(img, &plan, settings)
}

pub fn interaction_sweep(
    img: &RasterImage,
    component_sizes: &[f64],
    upper_layer: u32,
    settings: &SweepSettings,
) -> Result<Vec<InteractionCurve>> {
    let plan = SweepPlan {
        component_sizes: component_sizes.to_vec(),
        layers: Vec::new(),
        upper_layer: Some(upper_layer),
    };
    Ok(run_sweep(img, &plan, settings)?.interaction)
}

/// Interaction curves from precomputed segmentations, ordered by component
/// size as given.
pub fn interaction_curves(
    segs: &[Segmentation],
    upper_layer: u32,
) -> Result<Vec<InteractionCurve>> {
    let first = segs
        .first()
        .ok_or_else(|| Error::invalid("no segmentations given"))?;
    let grid = RegionGrid::new(first.width(), first.height(), upper_layer)?;
    let sizes: Vec<f64> = segs.iter().map(Segmentation::component_size).collect();
    validate_component_sizes(&sizes)?;
    let values = segs
        .iter()
        .map(|s| layer_interactions(s, &grid))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..grid.len())
        .map(|r| InteractionCurve {
            upper_layer,
            upper_region: r,
            points: sizes.iter().zip(&values).map(|(&k, v)| (k, v[r])).collect(),
        })
        .collect())
}

/// Unweighted mean interaction across curves at each component size.
pub fn mean_interaction(curves: &[InteractionCurve]) -> Result<Vec<(f64, f64)>> {
    let first = curves
        .first()
        .ok_or_else(|| Error::invalid("no interaction curves given"))?;
    if first.points.is_empty() {
        return Err(Error::invalid("interaction curve has no points"));
    }
    let axis: Vec<f64> = first.points.iter().map(|p| p.0).collect();
    for c in curves {
        if c.points.len() != axis.len() || c.points.iter().zip(&axis).any(|(p, &k)| p.0 != k) {
            return Err(Error::invalid(format!(
                "curve for region {} uses a different component-size axis",
                c.upper_region
            )));
        }
    }
    let n = curves.len() as f64;
    Ok(axis
        .iter()
        .enumerate()
        .map(|(i, &k)| (k, curves.iter().map(|c| c.points[i].1).sum::<f64>() / n))
        .collect())
}

/// Component size minimizing the mean interaction; ties go to the smaller
/// component size.
pub fn select_component_size(curves: &[InteractionCurve]) -> Result<f64> {
    let mean = mean_interaction(curves)?;
    let mut best = mean[0];
    for &(k, v) in &mean[1..] {
        if v < best.1 || (v == best.1 && k < best.0) {
            best = (k, v);
        }
    }
    Ok(best.0)
}

/// Regions of `layer` whose entropy stays `>= h_threshold` at every swept
/// component size `>= k_threshold`.
pub fn persistent_regions(
    report: &SweepReport,
    layer: u32,
    k_threshold: f64,
    h_threshold: f64,
) -> Result<Vec<usize>> {
    if !report.layers.contains(&layer) {
        return Err(Error::invalid(format!(
            "sweep has no entropy maps at layer {layer}"
        )));
    }
    let maps: Vec<&EntropyMap> = report
        .entropy
        .iter()
        .filter(|m| m.layer == layer && m.component_size >= k_threshold)
        .collect();
    let Some(first) = maps.first() else {
        return Err(Error::invalid(format!(
            "sweep has no component sizes >= {k_threshold}"
        )));
    };
    Ok((0..first.values.len())
        .filter(|&r| maps.iter().all(|m| m.values[r] >= h_threshold))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgreementGroup {
    /// `diff < 500`: the two component sizes agree.
    A,
    B,
}

pub const AGREEMENT_THRESHOLD: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentSizeDiff {
    pub diff: f64,
    pub group: AgreementGroup,
}

/// `|selected − reference|`, grouped as `A` when strictly below 500.
pub fn diff_component_size(selected: f64, reference: f64) -> Result<ComponentSizeDiff> {
    for v in [selected, reference] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!(
                "component sizes must be positive, got {v}"
            )));
        }
    }
    let diff = (selected - reference).abs();
    let group = if diff < AGREEMENT_THRESHOLD {
        AgreementGroup::A
    } else {
        AgreementGroup::B
    };
    Ok(ComponentSizeDiff { diff, group })
}

/// Ranks starting at 1, ties sharing their average rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson correlation of average ranks).
/// `None` when either series is constant or the lengths differ.
pub fn spearman_rho(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(points: &[(f64, f64)]) -> InteractionCurve {
        InteractionCurve {
            upper_layer: 1,
            upper_region: 0,
            points: points.to_vec(),
        }
    }

    #[test]
    fn selection_examples() {
        let c = curve(&[(100.0, 1.2), (500.0, 0.4), (1000.0, 0.9)]);
        assert_eq!(select_component_size(&[c]).unwrap(), 500.0);
        let tie = curve(&[(100.0, 1.0), (500.0, 0.3), (800.0, 0.3), (900.0, 0.5)]);
        assert_eq!(select_component_size(&[tie]).unwrap(), 500.0);
        let rising = curve(&[(100.0, 0.1), (200.0, 0.2), (300.0, 0.3)]);
        assert_eq!(select_component_size(&[rising]).unwrap(), 100.0);
        assert!(select_component_size(&[]).is_err());
    }

    #[test]
    fn selection_uses_mean_across_curves() {
        let a = curve(&[(100.0, 0.0), (200.0, 1.0)]);
        let b = curve(&[(100.0, 2.0), (200.0, 0.5)]);
        assert_eq!(select_component_size(&[a, b]).unwrap(), 200.0);
    }

    #[test]
    fn selection_rejects_mismatched_axes() {
        let a = curve(&[(100.0, 0.0), (200.0, 1.0)]);
        let b = curve(&[(100.0, 0.0), (300.0, 1.0)]);
        assert!(select_component_size(&[a, b]).is_err());
    }

    #[test]
    fn diff_rule() {
        let d = diff_component_size(1000.0, 800.0).unwrap();
        assert_eq!((d.diff, d.group), (200.0, AgreementGroup::A));
        let d = diff_component_size(10000.0, 800.0).unwrap();
        assert_eq!((d.diff, d.group), (9200.0, AgreementGroup::B));
        let d = diff_component_size(700.0, 700.0).unwrap();
        assert_eq!((d.diff, d.group), (0.0, AgreementGroup::A));
        assert_eq!(
            diff_component_size(1000.0, 500.0).unwrap().group,
            AgreementGroup::B
        );
        assert!(diff_component_size(0.0, 500.0).is_err());
        assert!(diff_component_size(10.0, -1.0).is_err());
    }

    #[test]
    fn component_size_validation() {
        assert!(validate_component_sizes(&DEFAULT_COMPONENT_SIZES).is_ok());
        assert!(validate_component_sizes(&[]).is_err());
        assert!(validate_component_sizes(&[100.0, 100.0]).is_err());
        assert!(validate_component_sizes(&[200.0, 100.0]).is_err());
        assert!(validate_component_sizes(&[0.0]).is_err());
    }

    #[test]
    fn default_layers_clip() {
        assert_eq!(default_layers(512, 512), (0..=6).collect::<Vec<_>>());
        assert_eq!(default_layers(20, 300), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn spearman_basics() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman_rho(&x, &[10.0, 20.0, 30.0, 40.0]), Some(1.0));
        assert_eq!(spearman_rho(&x, &[4.0, 3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman_rho(&x, &[1.0, 1.0, 1.0, 1.0]), None);
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0]), vec![2.5, 1.0, 2.5]);
    }
}
