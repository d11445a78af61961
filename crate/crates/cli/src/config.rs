//! Run configuration: command-line flags merged over an optional
//! `key=value` config file. Flags win on conflict.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};

use hierent::sweep::{
    validate_component_sizes, DEFAULT_COMPONENT_SIZES, DEFAULT_SIGMA, DEFAULT_UPPER_LAYER,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Png,
    Svg,
}

impl Format {
    fn parse(s: &str) -> Result<Self> {
        <Format as ValueEnum>::from_str(s.trim(), true)
            .map_err(|_| anyhow::anyhow!("unknown format '{s}' (expected csv, json, png or svg)"))
    }
}

/// Flags shared by every subcommand. All optional so that unset flags can
/// fall back to the config file and then to defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Input image (JPEG, PNG or PPM); repeat for several images.
    #[arg(long, value_name = "PATH")]
    pub input: Vec<PathBuf>,

    /// Gaussian pre-smoothing sigma [default: 2.0]
    #[arg(long)]
    pub sigma: Option<f64>,

    /// Comma-separated component sizes [default: 100,200,...,1000,2000,...,10000]
    #[arg(long, value_name = "LIST")]
    pub component_sizes: Option<String>,

    /// Comma-separated layers, or a range such as 0-4 [default: 0-6, clipped to the image]
    #[arg(long, value_name = "LIST")]
    pub layers: Option<String>,

    /// Layer whose regions are split 2x2 for domain interaction [default: 1]
    #[arg(long)]
    pub upper_layer: Option<u32>,

    /// Post-pass minimum cluster size; 0 disables it [default: 0]
    #[arg(long)]
    pub min_size: Option<usize>,

    /// Output directory [default: .]
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Comma-separated artifact formats to write [default: all the command produces]
    #[arg(long, value_name = "LIST")]
    pub format: Option<String>,

    /// Also write the label map at the selected component size (autotune)
    #[arg(long)]
    pub emit_labels: bool,

    /// key=value file mirroring these flags
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

/// Fully resolved, validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub sigma: f64,
    pub component_sizes: Vec<f64>,
    /// `None` means the default `0..=6`, clipped per image.
    pub layers: Option<Vec<u32>>,
    pub upper_layer: u32,
    pub min_size: usize,
    pub out_dir: PathBuf,
    /// `None` means every format the command produces.
    pub formats: Option<Vec<Format>>,
    pub emit_labels: bool,
}

impl RunConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.as_ref().is_none_or(|fs| fs.contains(&f))
    }
}

fn parse_list<T>(raw: &str, what: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| item(s).with_context(|| format!("invalid {what} entry '{s}'")))
        .collect()
}

pub fn parse_component_sizes(raw: &str) -> Result<Vec<f64>> {
    let sizes = parse_list(raw, "component size", |s| Ok(s.parse::<f64>()?))?;
    validate_component_sizes(&sizes)?;
    Ok(sizes)
}

pub fn parse_layers(raw: &str) -> Result<Vec<u32>> {
    let raw = raw.trim();
    let layers = if let Some((a, b)) = raw.split_once('-') {
        let (a, b): (u32, u32) = (a.trim().parse()?, b.trim().parse()?);
        if a > b {
            bail!("empty layer range {raw}");
        }
        (a..=b).collect()
    } else {
        parse_list(raw, "layer", |s| Ok(s.parse::<u32>()?))?
    };
    if layers.is_empty() {
        bail!("layer list is empty");
    }
    if layers.windows(2).any(|w| w[0] >= w[1]) {
        bail!("layers must be strictly increasing");
    }
    Ok(layers)
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        other => bail!("expected a boolean, got '{other}'"),
    }
}

/// Reads a config file into the same shape as the flags. Blank lines and
/// lines starting with `#` are ignored; keys are flag names without `--`.
pub fn read_config_file(path: &Path) -> Result<RunArgs> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in config file {}", path.display()))
}

pub fn parse_config(text: &str) -> Result<RunArgs> {
    let mut args = RunArgs::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected key=value", lineno + 1);
        };
        let (key, value) = (key.trim().replace('_', "-"), value.trim());
        let ctx = || format!("line {}: bad value for {key}", lineno + 1);
        match key.as_str() {
            "input" => args.input.extend(
                value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(PathBuf::from),
            ),
            "sigma" => args.sigma = Some(value.parse().with_context(ctx)?),
            "component-sizes" => args.component_sizes = Some(value.to_string()),
            "layers" => args.layers = Some(value.to_string()),
            "upper-layer" => args.upper_layer = Some(value.parse().with_context(ctx)?),
            "min-size" => args.min_size = Some(value.parse().with_context(ctx)?),
            "out-dir" => args.out_dir = Some(PathBuf::from(value)),
            "format" => args.format = Some(value.to_string()),
            "emit-labels" => args.emit_labels = parse_bool(value).with_context(ctx)?,
            "config" => bail!(
                "line {}: config files cannot include other config files",
                lineno + 1
            ),
            other => bail!("line {}: unknown key '{other}'", lineno + 1),
        }
    }
    Ok(args)
}

impl RunArgs {
    /// Flags over config file over defaults, validated before any work runs.
    pub fn resolve(self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(path) => read_config_file(path)?,
            None => RunArgs::default(),
        };
        let inputs = if self.input.is_empty() {
            file.input
        } else {
            self.input
        };
        if inputs.is_empty() {
            bail!("no input image given (use --input)");
        }
        let sigma = self.sigma.or(file.sigma).unwrap_or(DEFAULT_SIGMA);
        if !(sigma.is_finite() && sigma >= 0.0) {
            bail!("--sigma must be a finite nonnegative number, got {sigma}");
        }
        let component_sizes = match self.component_sizes.or(file.component_sizes) {
            Some(raw) => parse_component_sizes(&raw).context("--component-sizes")?,
            None => DEFAULT_COMPONENT_SIZES.to_vec(),
        };
        let layers = self
            .layers
            .or(file.layers)
            .map(|raw| parse_layers(&raw).context("--layers"))
            .transpose()?;
        let formats = self
            .format
            .or(file.format)
            .map(|raw| parse_list(&raw, "format", Format::parse))
            .transpose()
            .context("--format")?;
        if formats.as_ref().is_some_and(Vec::is_empty) {
            bail!("--format list is empty");
        }
        Ok(RunConfig {
            inputs,
            sigma,
            component_sizes,
            layers,
            upper_layer: self
                .upper_layer
                .or(file.upper_layer)
                .unwrap_or(DEFAULT_UPPER_LAYER),
            min_size: self.min_size.or(file.min_size).unwrap_or(0),
            out_dir: self
                .out_dir
                .or(file.out_dir)
                .unwrap_or_else(|| PathBuf::from(".")),
            formats,
            emit_labels: self.emit_labels || file.emit_labels,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = RunArgs {
            input: vec!["a.png".into()],
            ..Default::default()
        }
        .resolve()
        .unwrap();
        assert_eq!(cfg.sigma, 2.0);
        assert_eq!(cfg.component_sizes.len(), 19);
        assert_eq!(cfg.upper_layer, 1);
        assert_eq!(cfg.min_size, 0);
        assert!(cfg.layers.is_none());
        assert!(cfg.wants(Format::Svg));
    }

    #[test]
    fn config_file_parsing() {
        let args = parse_config(
            "# comment\ninput = a.png, b.png\nsigma=1.5\ncomponent_sizes=100,200\nlayers=0-3\n\
             upper-layer=2\nmin-size=5\nout-dir=out\nformat=csv,json\nemit-labels=true\n",
        )
        .unwrap();
        let cfg = args.resolve().unwrap();
        assert_eq!(
            cfg.inputs,
            vec![PathBuf::from("a.png"), PathBuf::from("b.png")]
        );
        assert_eq!(cfg.sigma, 1.5);
        assert_eq!(cfg.component_sizes, vec![100.0, 200.0]);
        assert_eq!(cfg.layers, Some(vec![0, 1, 2, 3]));
        assert_eq!(cfg.upper_layer, 2);
        assert_eq!(cfg.min_size, 5);
        assert_eq!(cfg.formats, Some(vec![Format::Csv, Format::Json]));
        assert!(cfg.emit_labels && !cfg.wants(Format::Png));
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "input=file.png\nsigma=3\nmin-size=4\n").unwrap();
        let cfg = RunArgs {
            sigma: Some(0.5),
            config: Some(path),
            ..Default::default()
        }
        .resolve()
        .unwrap();
        assert_eq!(cfg.inputs, vec![PathBuf::from("file.png")]);
        assert_eq!(cfg.sigma, 0.5);
        assert_eq!(cfg.min_size, 4);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(parse_config("sigma\n").is_err());
        assert!(parse_config("colour=red\n").is_err());
        assert!(parse_component_sizes("").is_err());
        assert!(parse_component_sizes("100,50").is_err());
        assert!(parse_component_sizes("100,-5").is_err());
        assert!(parse_layers("3-1").is_err());
        assert!(parse_layers("2,2").is_err());
        assert_eq!(parse_layers("0, 2,5").unwrap(), vec![0, 2, 5]);
        let neg = RunArgs {
            input: vec!["a.png".into()],
            sigma: Some(-1.0),
            ..Default::default()
        };
        assert!(neg.resolve().is_err());
        assert!(RunArgs::default().resolve().is_err());
    }
}
