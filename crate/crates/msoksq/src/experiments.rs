//! Experiment configuration, named presets, CSV/SVG outputs, and the
//! effective-config emission that makes every run reproducible.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{StreamConfig, StreamSource};
use crate::error::{Error, Result};
use crate::kernel::KernelKind;
use crate::loss::LossKind;
use crate::trainer::{self, TrainerConfig, Variant};

/// Bundled Iris measurements (petal width + species), vendored so runs need
/// no network access.
pub fn default_iris_path() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/data/iris.csv").to_string()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerSection {
    pub eta1: Option<f64>,
    pub rule_lr: Option<f64>,
    pub weight_lr: Option<f64>,
    pub lambda1: Option<f64>,
    /// Soft-margin threshold; ignored for the logistic loss.
    pub rho: Option<f64>,
    /// "hinge" or "logistic".
    pub loss: Option<String>,
    /// "count" or "linear".
    pub kernel: Option<String>,
    pub sensors: Option<usize>,
    pub select: Option<usize>,
    pub steps: Option<usize>,
    /// "full", "no_w", "no_p_no_w", "deterministic_quantizer", "norma",
    /// "random_selection".
    pub variant: Option<String>,
    pub bits: Option<u32>,
    pub range: Option<f64>,
    pub tau: Option<f64>,
    pub indicator_in_prediction: Option<bool>,
    pub strict_eq39: Option<bool>,
    pub norm_every: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StreamSection {
    /// "synthetic" or "iris".
    pub dataset: Option<String>,
    pub c1: Option<f64>,
    pub alphabet_size: Option<usize>,
    pub iris_path: Option<String>,
    pub standardize: Option<bool>,
    pub horizon: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<String>,
    pub emit_svg: Option<bool>,
}

/// Parsed experiment file: a named preset and/or explicit sections. An empty
/// file resolves to the stock synthetic single run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub preset: Option<String>,
    pub seeds: Option<Vec<u64>>,
    pub trainer: TrainerSection,
    pub stream: StreamSection,
    pub output: OutputSection,
}

/// Parse a TOML experiment config; unknown keys are rejected with the
/// parser's line/column diagnostics.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config(&fs::read_to_string(path)?)
}

fn parse_loss(s: Option<&str>, rho: Option<f64>) -> Result<LossKind> {
    match s.unwrap_or("hinge") {
        "hinge" => Ok(LossKind::SoftMargin { rho: rho.unwrap_or(1.0) }),
        "logistic" => Ok(LossKind::Logistic),
        other => Err(Error::Config(format!("unknown loss {other:?} (expected hinge|logistic)"))),
    }
}

fn parse_kernel(s: Option<&str>) -> Result<KernelKind> {
    match s.unwrap_or("count") {
        "count" => Ok(KernelKind::Count),
        "linear" => Ok(KernelKind::Linear),
        other => Err(Error::Config(format!("unknown kernel {other:?} (expected count|linear)"))),
    }
}

fn parse_variant(s: Option<&str>, bits: u32, select: usize) -> Result<Variant> {
    match s.unwrap_or("full") {
        "full" => Ok(Variant::Full),
        "no_w" => Ok(Variant::NoW),
        "no_p_no_w" => Ok(Variant::NoPNoW),
        "deterministic_quantizer" => Ok(Variant::DeterministicQuantizer { bits }),
        "norma" => Ok(Variant::Norma),
        "random_selection" => Ok(Variant::RandomSelection { keep: select }),
        other => Err(Error::Config(format!(
            "unknown variant {other:?} (expected full|no_w|no_p_no_w|deterministic_quantizer|norma|random_selection)"
        ))),
    }
}

/// Fully resolved single-run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub trainer: TrainerConfig,
    pub stream: StreamConfig,
    pub out_dir: PathBuf,
    pub emit_svg: bool,
    pub seeds: Vec<u64>,
}

impl ExperimentConfig {
    /// Resolve explicit sections against the stock defaults. A preset must
    /// not also pin the sensor count: the preset owns it.
    pub fn resolve(&self) -> Result<Resolved> {
        if self.preset.is_some() && self.trainer.sensors.is_some() {
            return Err(Error::Config(
                "preset and explicit trainer.sensors conflict: the preset fixes the sensor count"
                    .into(),
            ));
        }
        let dataset = self.stream.dataset.as_deref().unwrap_or("synthetic");
        let iris = match dataset {
            "synthetic" => false,
            "iris" => true,
            other => {
                return Err(Error::Config(format!(
                    "unknown dataset {other:?} (expected synthetic|iris)"
                )))
            }
        };
        let sensors = self.trainer.sensors.unwrap_or(10);
        let mut cfg = TrainerConfig::defaults(sensors);
        if let Some(v) = self.trainer.eta1 {
            cfg.eta1 = v;
        }
        if let Some(v) = self.trainer.rule_lr {
            cfg.rule_lr = v;
        }
        if let Some(v) = self.trainer.weight_lr {
            cfg.weight_lr = v;
        }
        if let Some(v) = self.trainer.lambda1 {
            cfg.lambda1 = v;
        }
        cfg.loss = parse_loss(self.trainer.loss.as_deref(), self.trainer.rho)?;
        cfg.kernel = parse_kernel(self.trainer.kernel.as_deref())?;
        if let Some(v) = self.trainer.select {
            cfg.select = v;
        }
        if let Some(v) = self.trainer.steps {
            cfg.steps = v;
        }
        if let Some(v) = self.trainer.bits {
            cfg.bits = v;
        }
        cfg.range = self.trainer.range.unwrap_or(if iris { 4.0 } else { 1.0 });
        cfg.tau = self.trainer.tau;
        if let Some(v) = self.trainer.indicator_in_prediction {
            cfg.indicator_in_prediction = v;
        }
        if let Some(v) = self.trainer.strict_eq39 {
            cfg.strict_eq39 = v;
        }
        if let Some(v) = self.trainer.norm_every {
            cfg.norm_every = v;
        }
        cfg.variant = parse_variant(self.trainer.variant.as_deref(), cfg.bits, cfg.select)?;

        let seeds = self.seeds.clone().unwrap_or_else(|| vec![0]);
        if seeds.is_empty() {
            return Err(Error::Config("at least one seed required".into()));
        }
        let source = if iris {
            StreamSource::Iris {
                path: self.stream.iris_path.clone().unwrap_or_else(default_iris_path),
                standardize: self.stream.standardize.unwrap_or(true),
            }
        } else {
            StreamSource::Synthetic {
                c1: self.stream.c1.unwrap_or(0.1),
                alphabet_size: self.stream.alphabet_size.unwrap_or(20),
            }
        };
        let stream = StreamConfig {
            sensors,
            horizon: self.stream.horizon.unwrap_or(cfg.steps),
            seed: seeds[0],
            source,
        };
        cfg.seed = seeds[0];
        cfg.validate()?;
        stream.validate()?;
        Ok(Resolved {
            trainer: cfg,
            stream,
            out_dir: PathBuf::from(self.output.dir.as_deref().unwrap_or("out")),
            emit_svg: self.output.emit_svg.unwrap_or(false),
            seeds,
        })
    }

    /// Fully populated copy whose TOML serialization re-parses to itself.
    pub fn effective(&self) -> Result<ExperimentConfig> {
        let r = self.resolve()?;
        let (rho, loss) = match r.trainer.loss {
            LossKind::SoftMargin { rho } => (Some(rho), "hinge"),
            LossKind::Logistic => (None, "logistic"),
        };
        let variant = match r.trainer.variant {
            Variant::Full => "full",
            Variant::NoW => "no_w",
            Variant::NoPNoW => "no_p_no_w",
            Variant::DeterministicQuantizer { .. } => "deterministic_quantizer",
            Variant::Norma => "norma",
            Variant::RandomSelection { .. } => "random_selection",
        };
        let (dataset, c1, alphabet_size, iris_path, standardize) = match &r.stream.source {
            StreamSource::Synthetic { c1, alphabet_size } => {
                ("synthetic", Some(*c1), Some(*alphabet_size), None, None)
            }
            StreamSource::Iris { path, standardize } => {
                ("iris", None, None, Some(path.clone()), Some(*standardize))
            }
        };
        Ok(ExperimentConfig {
            preset: self.preset.clone(),
            seeds: Some(r.seeds.clone()),
            trainer: TrainerSection {
                eta1: Some(r.trainer.eta1),
                rule_lr: Some(r.trainer.rule_lr),
                weight_lr: Some(r.trainer.weight_lr),
                lambda1: Some(r.trainer.lambda1),
                rho,
                loss: Some(loss.to_string()),
                kernel: Some(match r.trainer.kernel {
                    KernelKind::Count => "count".to_string(),
                    KernelKind::Linear => "linear".to_string(),
                }),
                sensors: if self.preset.is_some() { None } else { Some(r.trainer.sensors) },
                select: Some(r.trainer.select),
                steps: Some(r.trainer.steps),
                variant: Some(variant.to_string()),
                bits: Some(match r.trainer.variant {
                    Variant::DeterministicQuantizer { bits } => bits,
                    _ => r.trainer.bits,
                }),
                range: Some(r.trainer.range),
                tau: r.trainer.tau,
                indicator_in_prediction: Some(r.trainer.indicator_in_prediction),
                strict_eq39: Some(r.trainer.strict_eq39),
                norm_every: Some(r.trainer.norm_every),
            },
            stream: StreamSection {
                dataset: Some(dataset.to_string()),
                c1,
                alphabet_size,
                iris_path,
                standardize,
                horizon: Some(r.stream.horizon),
            },
            output: OutputSection {
                dir: Some(r.out_dir.to_string_lossy().into_owned()),
                emit_svg: Some(r.emit_svg),
            },
        })
    }
}

pub fn effective_toml(cfg: &ExperimentConfig) -> Result<String> {
    toml::to_string_pretty(&cfg.effective()?)
        .map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
}

/// One training arm of a preset.
#[derive(Debug, Clone)]
struct Arm {
    label: String,
    trainer: TrainerConfig,
    stream: StreamConfig,
    multiclass: bool,
}

/// Per-arm aggregate across seeds.
#[derive(Debug, Clone)]
pub struct ArmSummary {
    pub label: String,
    pub mean_final_acr: f64,
    pub std_final_acr: f64,
    /// Per-step mean accuracy across seeds.
    pub mean_acr: Vec<f64>,
    /// Per-step standard deviation across seeds.
    pub std_acr: Vec<f64>,
    /// Final accuracy per seed, in seed order.
    pub final_acrs: Vec<f64>,
}

/// Files and aggregates produced by one preset run.
#[derive(Debug, Clone)]
pub struct PresetReport {
    pub files: Vec<PathBuf>,
    pub arms: Vec<ArmSummary>,
}

impl PresetReport {
    pub fn arm(&self, label: &str) -> Option<&ArmSummary> {
        self.arms.iter().find(|a| a.label == label)
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn synthetic_stream(sensors: usize, steps: usize, c1: f64) -> StreamConfig {
    StreamConfig {
        sensors,
        horizon: steps,
        seed: 0,
        source: StreamSource::Synthetic { c1, alphabet_size: 20 },
    }
}

fn iris_stream(sensors: usize, steps: usize, path: &str) -> StreamConfig {
    StreamConfig {
        sensors,
        horizon: steps,
        seed: 0,
        source: StreamSource::Iris { path: path.to_string(), standardize: true },
    }
}

fn base_trainer(sensors: usize, steps: usize, bits: u32, range: f64) -> TrainerConfig {
    let mut cfg = TrainerConfig::defaults(sensors);
    cfg.steps = steps;
    cfg.bits = bits;
    cfg.range = range;
    cfg
}

fn preset_arms(name: &str, steps: usize, iris_path: &str) -> Result<Vec<Arm>> {
    let mut arms = Vec::new();
    match name {
        // quantization-learning ablation over sensor counts, synthetic data
        "fig4" => {
            for m in [1usize, 5, 10] {
                for (tag, variant) in [("no_w", Variant::NoW), ("no_p_no_w", Variant::NoPNoW)] {
                    let mut t = base_trainer(m, steps, 3, 1.0);
                    t.variant = variant;
                    arms.push(Arm {
                        label: format!("{tag}_M{m}"),
                        trainer: t,
                        stream: synthetic_stream(m, steps, 0.1),
                        multiclass: false,
                    });
                }
            }
            let mut t = base_trainer(10, steps, 3, 1.0);
            t.variant = Variant::Norma;
            arms.push(Arm {
                label: "norma_M10".into(),
                trainer: t,
                stream: synthetic_stream(10, steps, 0.1),
                multiclass: false,
            });
        }
        // learned vs random sensor selection, synthetic data, M = 11
        "fig5" => {
            for mp in [1usize, 5, 10] {
                let mut t = base_trainer(11, steps, 3, 1.0);
                t.select = mp;
                arms.push(Arm {
                    label: format!("optimal_mprime{mp}"),
                    trainer: t,
                    stream: synthetic_stream(11, steps, 0.1),
                    multiclass: false,
                });
                let mut t = base_trainer(11, steps, 3, 1.0);
                t.variant = Variant::RandomSelection { keep: mp };
                arms.push(Arm {
                    label: format!("random_mprime{mp}"),
                    trainer: t,
                    stream: synthetic_stream(11, steps, 0.1),
                    multiclass: false,
                });
            }
            for (label, variant) in [
                ("norma", Variant::Norma),
                ("det_2bit", Variant::DeterministicQuantizer { bits: 2 }),
            ] {
                let mut t = base_trainer(11, steps, 3, 1.0);
                t.variant = variant;
                arms.push(Arm {
                    label: label.into(),
                    trainer: t,
                    stream: synthetic_stream(11, steps, 0.1),
                    multiclass: false,
                });
            }
        }
        // Iris one-versus-all: quantizer resolution sweep
        "fig7" => {
            for bits in [1u32, 2] {
                for mp in [1usize, 5, 10] {
                    let mut t = base_trainer(11, steps, bits, 4.0);
                    t.select = mp;
                    arms.push(Arm {
                        label: format!("bits{bits}_mprime{mp}"),
                        trainer: t,
                        stream: iris_stream(11, steps, iris_path),
                        multiclass: true,
                    });
                }
            }
        }
        // Iris one-versus-all: learned vs random selection, 2-bit
        "fig8" => {
            for mp in [1usize, 5, 10] {
                let mut t = base_trainer(11, steps, 2, 4.0);
                t.select = mp;
                arms.push(Arm {
                    label: format!("optimal_mprime{mp}"),
                    trainer: t,
                    stream: iris_stream(11, steps, iris_path),
                    multiclass: true,
                });
                let mut t = base_trainer(11, steps, 2, 4.0);
                t.variant = Variant::RandomSelection { keep: mp };
                arms.push(Arm {
                    label: format!("random_mprime{mp}"),
                    trainer: t,
                    stream: iris_stream(11, steps, iris_path),
                    multiclass: true,
                });
            }
            let mut t = base_trainer(11, steps, 2, 4.0);
            t.variant = Variant::DeterministicQuantizer { bits: 2 };
            arms.push(Arm {
                label: "det_2bit".into(),
                trainer: t,
                stream: iris_stream(11, steps, iris_path),
                multiclass: true,
            });
        }
        // Iris one-versus-all: quantization-learning ablation over sensor counts
        "fig9" => {
            for m in [1usize, 5, 10] {
                for (tag, variant) in [("no_w", Variant::NoW), ("no_p_no_w", Variant::NoPNoW)] {
                    let mut t = base_trainer(m, steps, 2, 4.0);
                    t.variant = variant;
                    arms.push(Arm {
                        label: format!("{tag}_M{m}"),
                        trainer: t,
                        stream: iris_stream(m, steps, iris_path),
                        multiclass: true,
                    });
                }
            }
            let mut t = base_trainer(11, steps, 2, 4.0);
            t.variant = Variant::DeterministicQuantizer { bits: 3 };
            arms.push(Arm {
                label: "det_3bit_M11".into(),
                trainer: t,
                stream: iris_stream(11, steps, iris_path),
                multiclass: true,
            });
        }
        other => return Err(Error::Config(format!("unknown preset {other:?}"))),
    }
    Ok(arms)
}

fn acr_series(arm: &Arm, seed: u64, out_dir: &Path, files: &mut Vec<PathBuf>) -> Result<Vec<f64>> {
    let mut t = arm.trainer.clone();
    t.seed = seed;
    let mut s = arm.stream.clone();
    s.seed = seed;
    let path = out_dir.join(format!("trace_{}_seed{}.csv", arm.label, seed));
    let acr = if arm.multiclass {
        let outcome = trainer::ova_run(&t, &s, false)?;
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["step", "acr"])?;
        for (i, a) in outcome.acr.iter().enumerate() {
            w.write_record(&[(i + 1).to_string(), a.to_string()])?;
        }
        w.flush()?;
        outcome.acr
    } else {
        let (trace, _) = trainer::run(&t, &s)?;
        let f = fs::File::create(&path)?;
        trace.write_csv(f)?;
        trace.rows.iter().map(|r| r.acr).collect()
    };
    files.push(path);
    Ok(acr)
}

fn aggregate(label: &str, per_seed: &[Vec<f64>]) -> ArmSummary {
    let steps = per_seed.iter().map(Vec::len).min().unwrap_or(0);
    let mut mean_acr = Vec::with_capacity(steps);
    let mut std_acr = Vec::with_capacity(steps);
    for i in 0..steps {
        let col: Vec<f64> = per_seed.iter().map(|s| s[i]).collect();
        let (m, sd) = mean_std(&col);
        mean_acr.push(m);
        std_acr.push(sd);
    }
    let final_acrs: Vec<f64> = per_seed.iter().map(|s| *s.last().unwrap_or(&0.0)).collect();
    let (mean_final_acr, std_final_acr) = mean_std(&final_acrs);
    ArmSummary { label: label.to_string(), mean_final_acr, std_final_acr, mean_acr, std_acr, final_acrs }
}

/// Minimal static line plot of per-arm mean accuracy over steps.
pub fn write_acr_svg(path: &Path, title: &str, arms: &[ArmSummary]) -> Result<()> {
    const W: f64 = 720.0;
    const H: f64 = 440.0;
    const ML: f64 = 50.0;
    const MB: f64 = 40.0;
    const MT: f64 = 30.0;
    const MR: f64 = 150.0;
    let colors = [
        "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
        "#bcbd22", "#17becf",
    ];
    let steps = arms.iter().map(|a| a.mean_acr.len()).max().unwrap_or(0).max(1);
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">{title}</text>\n",
        ML
    ));
    // axes
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB,
        W - MR,
        H - MB
    ));
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB
    ));
    for tick in 0..=5 {
        let v = tick as f64 / 5.0;
        let y = H - MB - v * (H - MB - MT);
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\">{v:.1}</text>\n",
            ML - 28.0,
            y + 3.0
        ));
    }
    for (k, arm) in arms.iter().enumerate() {
        let color = colors[k % colors.len()];
        let mut pts = String::new();
        for (i, &a) in arm.mean_acr.iter().enumerate() {
            let x = ML + (i as f64 / (steps - 1).max(1) as f64) * (W - ML - MR);
            let y = H - MB - a.clamp(0.0, 1.0) * (H - MB - MT);
            pts.push_str(&format!("{x:.1},{y:.1} "));
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            pts.trim_end()
        ));
        let ly = MT + 14.0 * k as f64;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            W - MR + 10.0,
            W - MR + 30.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\">{}</text>\n",
            W - MR + 35.0,
            ly + 3.0,
            arm.label
        ));
    }
    svg.push_str("</svg>\n");
    fs::write(path, svg)?;
    Ok(())
}

/// Run the rule-convergence preset: track the probability of the positive
/// quantization point at one pinned observation value as that value recurs.
fn run_fig6(cfg: &ExperimentConfig, out_dir: &Path) -> Result<PresetReport> {
    use crate::data::{ObservationAlphabet, SampleStream};

    let steps = cfg.trainer.steps.unwrap_or(600);
    let seeds = cfg.seeds.clone().unwrap_or_else(|| (0..10).collect());
    let pinned = 0.4329;
    let sensors = 11usize;

    let mut trainer_cfg = base_trainer(sensors, steps, 1, 1.0);
    trainer_cfg.select = sensors;
    let path = out_dir.join("fig6_rule.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["seed", "i_x", "prob"])?;

    let mut per_seed_final = Vec::new();
    for &seed in &seeds {
        let stream_cfg = {
            let mut s = synthetic_stream(sensors, steps, 0.1);
            s.seed = seed;
            s
        };
        let mut stream = SampleStream::from_config(&stream_cfg)?;
        // pin the tracked value into sensor 0's positive-class alphabet
        let mut alphabets = stream.alphabets().to_vec();
        let mut classes: Vec<Vec<f64>> =
            (0..alphabets[0].n_classes()).map(|c| alphabets[0].class_values(c).to_vec()).collect();
        classes[1][0] = pinned;
        alphabets[0] = ObservationAlphabet::new(classes)?;
        stream = SampleStream::new(alphabets.clone(), steps, crate::seed_rng(seed))?;

        let mut t = trainer_cfg.clone();
        t.seed = seed;
        let mut learner = trainer::Trainer::new(t, &alphabets)?;
        // index of the +0.5 point in the 1-bit alphabet {-0.5, 0.5}
        let q_pos = 1;
        let mut seen = 0u64;
        let mut prob = 0.0;
        for _ in 0..steps {
            let s = stream.next_sample()?;
            learner.step(&s.x, s.y.component(0))?;
            let visits = learner.rules().visits(0, pinned)?;
            if visits > seen {
                seen = visits;
                prob = learner.rules().row(0, pinned)?[q_pos];
                w.write_record(&[seed.to_string(), seen.to_string(), prob.to_string()])?;
            }
        }
        per_seed_final.push(prob);
    }
    w.flush()?;
    let (mean_final_acr, std_final_acr) = mean_std(&per_seed_final);
    Ok(PresetReport {
        files: vec![path],
        arms: vec![ArmSummary {
            label: "pinned_rule_prob".into(),
            mean_final_acr,
            std_final_acr,
            mean_acr: Vec::new(),
            std_acr: Vec::new(),
            final_acrs: per_seed_final,
        }],
    })
}

/// Run a named preset; overrides come from the same config file shape
/// (seeds, steps, output dir).
pub fn run_preset(name: &str, cfg: &ExperimentConfig) -> Result<PresetReport> {
    let out_dir = PathBuf::from(cfg.output.dir.as_deref().unwrap_or("out"));
    fs::create_dir_all(&out_dir)?;

    // every run records the exact configuration it ran with
    let mut effective = cfg.clone();
    effective.preset = Some(name.to_string());
    if effective.seeds.is_none() {
        effective.seeds = Some((0..10).collect());
    }
    let eff_path = out_dir.join("effective-config.toml");
    let toml_text = toml::to_string_pretty(&effective)
        .map_err(|e| Error::Config(format!("cannot serialize config: {e}")))?;
    fs::write(&eff_path, toml_text)?;

    if name == "fig6" {
        let mut report = run_fig6(cfg, &out_dir)?;
        report.files.push(eff_path);
        return Ok(report);
    }

    let steps = cfg.trainer.steps.unwrap_or(600);
    let iris_path = cfg.stream.iris_path.clone().unwrap_or_else(default_iris_path);
    let seeds = cfg.seeds.clone().unwrap_or_else(|| (0..10).collect());
    let arms = preset_arms(name, steps, &iris_path)?;

    let mut files = vec![eff_path];
    let mut summaries = Vec::new();
    for arm in &arms {
        let mut per_seed = Vec::with_capacity(seeds.len());
        for &seed in &seeds {
            per_seed.push(acr_series(arm, seed, &out_dir, &mut files)?);
        }
        summaries.push(aggregate(&arm.label, &per_seed));
    }

    let agg_path = out_dir.join(format!("{name}_acr.csv"));
    let mut w = csv::Writer::from_path(&agg_path)?;
    w.write_record(["arm", "step", "mean_acr", "std_acr"])?;
    for s in &summaries {
        for (i, (m, sd)) in s.mean_acr.iter().zip(&s.std_acr).enumerate() {
            w.write_record(&[s.label.clone(), (i + 1).to_string(), m.to_string(), sd.to_string()])?;
        }
    }
    w.flush()?;
    files.push(agg_path);

    let sum_path = out_dir.join(format!("{name}_summary.csv"));
    let mut w = csv::Writer::from_path(&sum_path)?;
    w.write_record(["arm", "mean_final_acr", "std_final_acr"])?;
    for s in &summaries {
        w.write_record(&[
            s.label.clone(),
            s.mean_final_acr.to_string(),
            s.std_final_acr.to_string(),
        ])?;
    }
    w.flush()?;
    files.push(sum_path);

    if cfg.output.emit_svg.unwrap_or(false) {
        let svg_path = out_dir.join(format!("{name}_acr.svg"));
        write_acr_svg(&svg_path, &format!("{name}: mean accuracy over steps"), &summaries)?;
        files.push(svg_path);
    }
    Ok(PresetReport { files, arms: summaries })
}

/// Run a single explicit (non-preset) configuration over its seeds.
pub fn run_single(cfg: &ExperimentConfig) -> Result<PresetReport> {
    let resolved = cfg.resolve()?;
    fs::create_dir_all(&resolved.out_dir)?;
    let eff_path = resolved.out_dir.join("effective-config.toml");
    fs::write(&eff_path, effective_toml(cfg)?)?;

    let multiclass = matches!(resolved.stream.source, StreamSource::Iris { .. });
    let arm = Arm {
        label: "run".into(),
        trainer: resolved.trainer.clone(),
        stream: resolved.stream.clone(),
        multiclass,
    };
    let mut files = vec![eff_path];
    let mut per_seed = Vec::new();
    for &seed in &resolved.seeds {
        per_seed.push(acr_series(&arm, seed, &resolved.out_dir, &mut files)?);
    }
    let summary = aggregate("run", &per_seed);
    if resolved.emit_svg {
        let svg_path = resolved.out_dir.join("run_acr.svg");
        write_acr_svg(&svg_path, "mean accuracy over steps", std::slice::from_ref(&summary))?;
        files.push(svg_path);
    }
    Ok(PresetReport { files, arms: vec![summary] })
}
