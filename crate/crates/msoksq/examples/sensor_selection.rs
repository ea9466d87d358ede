//! Sparse sensor selection: with M = 11 sensors, compare learning which M'
//! sensors to keep against keeping a random fixed subset of the same size.

use msoksq::data::{StreamConfig, StreamSource};
use msoksq::trainer::{self, TrainerConfig, Variant};

fn main() -> msoksq::Result<()> {
    let sensors = 11;
    let seeds: Vec<u64> = (0..5).collect();

    println!("M' | learned selection | random subset");
    for m_prime in [1usize, 5, 10] {
        let mut learned = Vec::new();
        let mut random = Vec::new();
        let mut surviving = Vec::new();
        for &seed in &seeds {
            let stream = StreamConfig {
                sensors,
                horizon: 600,
                seed,
                source: StreamSource::Synthetic { c1: 0.1, alphabet_size: 20 },
            };
            let mut cfg = TrainerConfig::defaults(sensors);
            cfg.select = m_prime;
            cfg.seed = seed;
            let (trace, t) = trainer::run(&cfg, &stream)?;
            learned.push(trace.final_acr());
            surviving.push(t.weights().enabled());

            let mut cfg = TrainerConfig::defaults(sensors);
            cfg.variant = Variant::RandomSelection { keep: m_prime };
            cfg.seed = seed;
            let (trace, _) = trainer::run(&cfg, &stream)?;
            random.push(trace.final_acr());
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        println!("{m_prime:>2} | {:.4}            | {:.4}", mean(&learned), mean(&random));
        println!("     surviving sensors (seed 0): {:?}", surviving[0]);
    }
    Ok(())
}
