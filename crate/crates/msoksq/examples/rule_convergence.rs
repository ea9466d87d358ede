//! Convergence of a single quantization rule: track the probability that a
//! pinned observation value maps to the positive 1-bit point as the value
//! recurs, which approaches 1 geometrically.

use msoksq::experiments::{run_preset, ExperimentConfig};

fn main() -> msoksq::Result<()> {
    let dir = std::env::temp_dir().join("msoksq_rule_convergence");
    let mut cfg = ExperimentConfig::default();
    cfg.seeds = Some(vec![0]);
    cfg.trainer.steps = Some(600);
    cfg.output.dir = Some(dir.to_string_lossy().into_owned());

    let report = run_preset("fig6", &cfg)?;

    let csv = std::fs::read_to_string(dir.join("fig6_rule.csv"))?;
    println!("visit  P(q = +0.5 | x = 0.4329)");
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let (i_x, prob): (u64, f64) = (fields[1].parse().unwrap(), fields[2].parse().unwrap());
        if i_x <= 10 || i_x % 5 == 0 {
            println!("{i_x:>5}  {prob:.6}");
        }
    }
    println!();
    println!(
        "final probability over seeds: {:.6} (files in {})",
        report.arms[0].mean_final_acr,
        dir.display()
    );
    Ok(())
}
