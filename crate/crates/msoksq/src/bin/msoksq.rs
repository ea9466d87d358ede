//! Thin command-line front end: resolve flags and an optional TOML config
//! into an experiment run. The library and `examples/` directory are the
//! primary interface; this binary only dispatches.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use msoksq::experiments::{self, ExperimentConfig};

#[derive(Parser, Debug)]
#[command(
    name = "msoksq",
    about = "Online kernel learning with stochastic sensor-side quantization and sensor selection"
)]
struct Cli {
    /// Named experiment preset (fig4|fig5|fig6|fig7|fig8|fig9).
    #[arg(long)]
    preset: Option<String>,

    /// TOML experiment config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Single seed for the run.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,

    /// Number of seeds to fan out over (seeds 0..N).
    #[arg(long)]
    seeds: Option<u64>,

    /// Sensor count M (conflicts with --preset, which fixes it).
    #[arg(long)]
    sensors: Option<usize>,

    /// Quantizer resolution in bits per sensor.
    #[arg(long)]
    bits: Option<u32>,

    /// Sensor-selection target M' (number of sensors to keep).
    #[arg(long = "select-mprime")]
    select_mprime: Option<usize>,

    /// Training horizon N.
    #[arg(long)]
    steps: Option<usize>,

    /// Data source.
    #[arg(long, value_parser = ["synthetic", "iris"])]
    dataset: Option<String>,

    /// Synthetic class-separation parameter.
    #[arg(long)]
    c1: Option<f64>,

    /// Learner variant
    /// (full|no_w|no_p_no_w|deterministic_quantizer|norma|random_selection).
    #[arg(long)]
    variant: Option<String>,

    /// Output directory for traces, aggregates, and the effective config.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Also write an SVG accuracy plot next to the CSVs.
    #[arg(long)]
    emit_svg: bool,
}

fn merge(cli: &Cli, mut cfg: ExperimentConfig) -> ExperimentConfig {
    if cli.preset.is_some() {
        cfg.preset = cli.preset.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seeds = Some(vec![seed]);
    }
    if let Some(n) = cli.seeds {
        cfg.seeds = Some((0..n).collect());
    }
    if cli.sensors.is_some() {
        cfg.trainer.sensors = cli.sensors;
    }
    if cli.bits.is_some() {
        cfg.trainer.bits = cli.bits;
    }
    if cli.select_mprime.is_some() {
        cfg.trainer.select = cli.select_mprime;
    }
    if cli.steps.is_some() {
        cfg.trainer.steps = cli.steps;
    }
    if cli.dataset.is_some() {
        cfg.stream.dataset = cli.dataset.clone();
    }
    if cli.c1.is_some() {
        cfg.stream.c1 = cli.c1;
    }
    if cli.variant.is_some() {
        cfg.trainer.variant = cli.variant.clone();
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = Some(out.to_string_lossy().into_owned());
    }
    if cli.emit_svg {
        cfg.output.emit_svg = Some(true);
    }
    cfg
}

fn run(cli: &Cli) -> msoksq::Result<()> {
    let base = match &cli.config {
        Some(path) => experiments::load_config(path)?,
        None => ExperimentConfig::default(),
    };
    let cfg = merge(cli, base);
    let report = match cfg.preset.clone() {
        Some(name) => {
            // surface preset/flag conflicts before spending any compute
            cfg.resolve()?;
            experiments::run_preset(&name, &cfg)?
        }
        None => experiments::run_single(&cfg)?,
    };
    for arm in &report.arms {
        println!(
            "{}: final acr {:.4} +/- {:.4}",
            arm.label, arm.mean_final_acr, arm.std_final_acr
        );
    }
    println!("wrote {} files", report.files.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
