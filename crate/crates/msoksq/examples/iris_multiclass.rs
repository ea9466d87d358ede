//! Multiclass (one-versus-all) learning on the bundled Iris stream: two
//! binary learners share the quantized petal-width observations and their
//! signs jointly decide among the three species.

use msoksq::data::{StreamConfig, StreamSource};
use msoksq::experiments::default_iris_path;
use msoksq::trainer::{self, TrainerConfig};

fn main() -> msoksq::Result<()> {
    let sensors = 11;
    let seeds: Vec<u64> = (0..5).collect();

    println!("bits | mean final multiclass acr over {} seeds", seeds.len());
    for bits in [1u32, 2] {
        let mut finals = Vec::new();
        for &seed in &seeds {
            let mut cfg = TrainerConfig::defaults(sensors);
            cfg.bits = bits;
            cfg.range = 4.0;
            cfg.seed = seed;
            let stream = StreamConfig {
                sensors,
                horizon: cfg.steps,
                seed,
                source: StreamSource::Iris { path: default_iris_path(), standardize: true },
            };
            let outcome = trainer::ova_run(&cfg, &stream, false)?;
            finals.push(outcome.final_acr());
        }
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        println!("{bits:>4} | {mean:.4}");
    }
    Ok(())
}
