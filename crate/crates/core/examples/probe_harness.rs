use cgdesign::sim::{run_kl_experiment, DesignKind, ExperimentConfig};
use std::collections::BTreeMap;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let model: u8 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(1);
    let preset = args.get(2).cloned().unwrap_or("mgig-certain".into());
    let design = match args.get(3).map(|s| s.as_str()).unwrap_or("random") {
        "specific" => DesignKind::Specific,
        _ => DesignKind::RandomOrthogonal,
    };
    let count: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(4000);
    let config = ExperimentConfig {
        model_id: model,
        k: 5,
        p: 5,
        sample_sizes: vec![50, 100, 150, 200, 250, 300, 350, 400],
        replicates: 30,
        design,
        prior_preset: preset.clone(),
        biased_prior: false,
        base_seed: 20240817,
        kl_count: count,
    };
    let t0 = std::time::Instant::now();
    match run_kl_experiment(&config) {
        Ok(records) => {
            let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            for r in &records {
                by_n.entry(r.n).or_default().push(r.value);
            }
            println!("model {model} {preset} {design:?} count {count} [{:.1}s]", t0.elapsed().as_secs_f64());
            for (n, vals) in by_n {
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() as f64 - 1.0)).sqrt();
                let se = sd / (vals.len() as f64).sqrt();
                println!("  n {n:>4}: mean {mean:+.5} se {se:.5} z {:+.1}", mean / se);
            }
        }
        Err(e) => println!("model {model} {preset} {design:?} count {count}: ERROR {e}"),
    }
}
