//! Ablation comparison on identical synthetic streams: the full learner vs
//! frozen-weight, frozen-rule, deterministic-quantizer, and unquantized
//! baselines, averaged over seeds.

use msoksq::data::{StreamConfig, StreamSource};
use msoksq::trainer::{self, TrainerConfig, Variant};

fn main() -> msoksq::Result<()> {
    let sensors = 10;
    let seeds: Vec<u64> = (0..5).collect();
    let variants = [
        ("full", Variant::Full),
        ("no_w (rules only)", Variant::NoW),
        ("no_p_no_w (frozen rules)", Variant::NoPNoW),
        ("deterministic 3-bit", Variant::DeterministicQuantizer { bits: 3 }),
        ("norma (unquantized)", Variant::Norma),
    ];

    println!("variant                      mean final acr over {} seeds", seeds.len());
    for (label, variant) in variants {
        let mut finals = Vec::new();
        for &seed in &seeds {
            let mut cfg = TrainerConfig::defaults(sensors);
            cfg.variant = variant.clone();
            cfg.seed = seed;
            let stream = StreamConfig {
                sensors,
                horizon: cfg.steps,
                seed,
                source: StreamSource::Synthetic { c1: 0.1, alphabet_size: 20 },
            };
            let (trace, _) = trainer::run(&cfg, &stream)?;
            finals.push(trace.final_acr());
        }
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        println!("{label:<28} {mean:.4}");
    }
    Ok(())
}
