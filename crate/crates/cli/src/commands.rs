//! Subcommand implementations. Every artifact is named
//! `{stem}.{command}.{layer}.{component_size}.{ext}`, with `all` in a slot
//! that the artifact spans rather than fixes.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use hierent::raster::write_png;
use hierent::render::{CurveOptions, HeatmapScale};
use hierent::sweep::{default_layers, mean_interaction};
use hierent::{
    gaussian_smooth, load_image, render_curve, render_entropy_heatmap, render_label_map, run_sweep,
    segment, select_component_size, RasterImage, RegionGrid, Segmentation, Series, SweepPlan,
    SweepReport, SweepSettings,
};

use crate::config::{Format, RunConfig};

pub struct Input {
    pub path: PathBuf,
    pub stem: String,
    pub image: RasterImage,
}

/// Loads every input and checks the layer settings against each image.
pub fn load_inputs(cfg: &RunConfig, needs_upper: bool) -> Result<Vec<Input>> {
    let inputs = cfg
        .inputs
        .iter()
        .map(|path| {
            let image = load_image(path)?;
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "image".into());
            Ok(Input {
                path: path.clone(),
                stem,
                image,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for input in &inputs {
        let plan = plan_for(cfg, &input.image, needs_upper);
        plan.validate(input.image.width(), input.image.height())
            .with_context(|| input.path.display().to_string())?;
    }
    Ok(inputs)
}

fn plan_for(cfg: &RunConfig, img: &RasterImage, needs_upper: bool) -> SweepPlan {
    SweepPlan {
        component_sizes: cfg.component_sizes.clone(),
        layers: cfg
            .layers
            .clone()
            .unwrap_or_else(|| default_layers(img.width(), img.height())),
        upper_layer: needs_upper.then_some(cfg.upper_layer),
    }
}

fn settings(cfg: &RunConfig) -> SweepSettings {
    SweepSettings {
        sigma: cfg.sigma,
        min_size: cfg.min_size,
    }
}

struct Artifacts<'a> {
    dir: &'a Path,
    stem: &'a str,
    command: &'static str,
    written: Vec<PathBuf>,
}

impl<'a> Artifacts<'a> {
    fn new(cfg: &'a RunConfig, input: &'a Input, command: &'static str) -> Result<Self> {
        fs::create_dir_all(&cfg.out_dir)
            .with_context(|| format!("cannot create {}", cfg.out_dir.display()))?;
        Ok(Artifacts {
            dir: &cfg.out_dir,
            stem: &input.stem,
            command,
            written: Vec::new(),
        })
    }

    fn path(&self, layer: &str, size: &str, ext: &str) -> PathBuf {
        self.dir.join(format!(
            "{}.{}.{layer}.{size}.{ext}",
            self.stem, self.command
        ))
    }

    fn text(&mut self, layer: &str, size: &str, ext: &str, body: &str) -> Result<()> {
        let path = self.path(layer, size, ext);
        fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    fn png(&mut self, layer: &str, size: &str, img: &hierent::render::RgbImage) -> Result<()> {
        let path = self.path(layer, size, "png");
        write_png(img, &path)?;
        self.written.push(path);
        Ok(())
    }

    fn label_map(&mut self, seg: &Segmentation, cfg: &RunConfig) -> Result<()> {
        let k = size_tag(seg.component_size());
        if cfg.wants(Format::Png) {
            self.png("all", &k, &render_label_map(seg))?;
        }
        if cfg.wants(Format::Json) {
            self.text("all", &k, "json", &seg.summary_json()?)?;
        }
        Ok(())
    }

    fn done(self) -> Vec<PathBuf> {
        self.written
    }
}

fn size_tag(k: f64) -> String {
    format!("{k}")
}

fn csv_string(write: impl FnOnce(&mut Vec<u8>) -> hierent::Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(String::from_utf8(buf)?)
}

pub fn cmd_segment(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let inputs = load_inputs(cfg, false)?;
    let mut written = Vec::new();
    for input in &inputs {
        let mut out = Artifacts::new(cfg, input, "segment")?;
        let smoothed = gaussian_smooth(&input.image, cfg.sigma)?;
        for &k in &cfg.component_sizes {
            let seg = segment(&smoothed, k, cfg.min_size)?;
            out.label_map(&seg, cfg)?;
        }
        written.extend(out.done());
    }
    Ok(written)
}

pub fn cmd_entropy(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let inputs = load_inputs(cfg, false)?;
    let mut written = Vec::new();
    for input in &inputs {
        let report = run_sweep(
            &input.image,
            &plan_for(cfg, &input.image, false),
            &settings(cfg),
        )?;
        let mut out = Artifacts::new(cfg, input, "entropy")?;
        for &n in &report.layers {
            let grid = RegionGrid::new(report.width, report.height, n)?;
            // One scale per layer so panels across component sizes compare.
            let hi = report
                .entropy
                .iter()
                .filter(|m| m.layer == n)
                .map(|m| m.max())
                .fold(0.0, f64::max);
            for map in report.entropy.iter().filter(|m| m.layer == n) {
                let (layer, k) = (n.to_string(), size_tag(map.component_size));
                if cfg.wants(Format::Png) {
                    let heat = render_entropy_heatmap(map, &grid, HeatmapScale::Fixed(0.0, hi))?;
                    out.png(&layer, &k, &heat.image)?;
                    if cfg.wants(Format::Json) {
                        out.text(
                            &layer,
                            &k,
                            "legend.json",
                            &serde_json::to_string_pretty(&heat.legend)?,
                        )?;
                    }
                }
                if cfg.wants(Format::Csv) {
                    out.text(&layer, &k, "csv", &csv_string(|b| map.write_csv(b))?)?;
                }
                if cfg.wants(Format::Json) {
                    out.text(&layer, &k, "json", &map.to_json()?)?;
                }
            }
        }
        write_report(&mut out, cfg, &report, "all")?;
        if cfg.wants(Format::Svg) {
            let series: Vec<Series> = report
                .layers
                .iter()
                .map(|&n| Series::new(format!("layer {n}"), report.layer_means(n)))
                .collect();
            let opts = CurveOptions {
                title: format!("{}: mean region entropy", input.stem),
                y_label: "entropy (bits)".into(),
                ..CurveOptions::default()
            };
            out.text("all", "all", "svg", &render_curve(&series, &opts)?)?;
        }
        written.extend(out.done());
    }
    Ok(written)
}

fn write_report(
    out: &mut Artifacts,
    cfg: &RunConfig,
    report: &SweepReport,
    layer: &str,
) -> Result<()> {
    if cfg.wants(Format::Csv) {
        out.text(layer, "all", "csv", &csv_string(|b| report.write_csv(b))?)?;
    }
    if cfg.wants(Format::Json) {
        out.text(layer, "all", "json", &report.to_json()?)?;
    }
    Ok(())
}

fn interaction_report(cfg: &RunConfig, input: &Input) -> Result<SweepReport> {
    let plan = SweepPlan {
        layers: Vec::new(),
        ..plan_for(cfg, &input.image, true)
    };
    Ok(run_sweep(&input.image, &plan, &settings(cfg))?)
}

pub fn cmd_interaction(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let inputs = load_inputs(cfg, true)?;
    let mut written = Vec::new();
    for input in &inputs {
        let report = interaction_report(cfg, input)?;
        let mut out = Artifacts::new(cfg, input, "interaction")?;
        let layer = cfg.upper_layer.to_string();
        write_report(&mut out, cfg, &report, &layer)?;
        if cfg.wants(Format::Svg) {
            let series: Vec<Series> = report
                .interaction
                .iter()
                .map(|c| Series::new(format!("S{}", c.upper_region), c.points.clone()))
                .collect();
            let opts = CurveOptions {
                title: format!("{}: domain interaction, layer {layer}", input.stem),
                y_label: "interaction (bits)".into(),
                ..CurveOptions::default()
            };
            out.text(&layer, "all", "svg", &render_curve(&series, &opts)?)?;
        }
        written.extend(out.done());
    }
    Ok(written)
}

#[derive(Serialize)]
struct AutotuneResult<'a> {
    input: String,
    upper_layer: u32,
    component_sizes: &'a [f64],
    mean_interaction: Vec<f64>,
    selected_component_size: f64,
}

/// Selected component size per input.
pub type Selections = Vec<(PathBuf, f64)>;

/// Returns the selected component size per input and the files written.
pub fn cmd_autotune(cfg: &RunConfig) -> Result<(Selections, Vec<PathBuf>)> {
    let inputs = load_inputs(cfg, true)?;
    let mut selected = Vec::new();
    let mut written = Vec::new();
    for input in &inputs {
        let report = interaction_report(cfg, input)?;
        let k = select_component_size(&report.interaction)?;
        let mean = mean_interaction(&report.interaction)?;
        let mut out = Artifacts::new(cfg, input, "autotune")?;
        if cfg.wants(Format::Json) {
            let result = AutotuneResult {
                input: input.path.display().to_string(),
                upper_layer: cfg.upper_layer,
                component_sizes: &report.component_sizes,
                mean_interaction: mean.iter().map(|p| p.1).collect(),
                selected_component_size: k,
            };
            out.text(
                &cfg.upper_layer.to_string(),
                "all",
                "json",
                &serde_json::to_string_pretty(&result)?,
            )?;
        }
        if cfg.emit_labels {
            let smoothed = gaussian_smooth(&input.image, cfg.sigma)?;
            out.label_map(&segment(&smoothed, k, cfg.min_size)?, cfg)?;
        }
        selected.push((input.path.clone(), k));
        written.extend(out.done());
    }
    Ok((selected, written))
}
