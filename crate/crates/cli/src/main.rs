use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

mod commands;
mod config;

use config::RunArgs;

/// Hierarchical entropy and domain interaction of images.
#[derive(Debug, Parser)]
#[command(name = "hierent", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a cluster label map (PNG) and summary (JSON) per component size.
    Segment(RunArgs),
    /// Per-region entropy heatmaps, tables and the entropy-vs-size curve.
    Entropy(RunArgs),
    /// Domain-interaction curves for every region of the upper layer.
    Interaction(RunArgs),
    /// Pick the component size minimizing mean domain interaction.
    Autotune(RunArgs),
}

fn run(cli: Cli) -> Result<()> {
    let (name, args) = match cli.command {
        Command::Segment(a) => ("segment", a),
        Command::Entropy(a) => ("entropy", a),
        Command::Interaction(a) => ("interaction", a),
        Command::Autotune(a) => ("autotune", a),
    };
    let cfg = args.resolve()?;
    let written = match name {
        "segment" => commands::cmd_segment(&cfg)?,
        "entropy" => commands::cmd_entropy(&cfg)?,
        "interaction" => commands::cmd_interaction(&cfg)?,
        _ => {
            let (selected, written) = commands::cmd_autotune(&cfg)?;
            let multi = selected.len() > 1;
            for (path, k) in selected {
                if multi {
                    println!("{}\t{k}", path.display());
                } else {
                    println!("{k}");
                }
            }
            written
        }
    };
    eprintln!(
        "{name}: wrote {} file(s) to {}",
        written.len(),
        cfg.out_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
