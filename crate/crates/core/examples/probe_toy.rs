use cgdesign::matrix::SymMatrix;
use cgdesign::mgig::sample_nmgig_posterior_omega;
use cgdesign::model::{sample_responses, standard_normal_matrix, ChainGraphParams, Dataset};
use cgdesign::prior::NormalMgigPrior;
use cgdesign::sim::{covariance_model, weighted_std};
use cgdesign::estimators::partial_correlation;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cell_sd(b: &DMatrix<f64>, n: usize, draws: usize, seed: u64) -> (f64, f64) {
    let k = 3; let p = 1;
    let omega = covariance_model(1, k).unwrap();
    let params = ChainGraphParams::new(b.clone(), omega).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = standard_normal_matrix(n, p, &mut rng);
    let y = sample_responses(&x, &params, seed + 1000).unwrap();
    let data = Dataset::new(x, y).unwrap();
    let prior = NormalMgigPrior::new(
        k as f64 + 1.0,
        SymMatrix::scaled_identity(k, 1e-3),
        SymMatrix::scaled_identity(k, 1e-3),
        b.clone(),
        SymMatrix::scaled_identity(p, 1e-3),
    ).unwrap();
    let batch = sample_nmgig_posterior_omega(&prior, &data, draws, seed + 2000).unwrap();
    let vals: Vec<f64> = batch.samples.iter().map(|s| partial_correlation(&s.omega, 0, 1).unwrap()).collect();
    let ws: Vec<f64> = batch.samples.iter().map(|s| s.weight).collect();
    (weighted_std(&vals, &ws), batch.ess())
}

fn main() {
    let draws = 30_000;
    let mut wins = 0;
    for seed in 0..12u64 {
        let b_exp = DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]);
        let b_null = DMatrix::zeros(1, 3);
        let (sd_e, ess_e) = cell_sd(&b_exp, 200, draws, 77770 + seed * 7);
        let (sd_n, ess_n) = cell_sd(&b_null, 200, draws, 88880 + seed * 7);
        if sd_e < sd_n { wins += 1; }
        println!("seed {seed}: sd_exp {sd_e:.5} (ess {ess_e:.0}) sd_null {sd_n:.5} (ess {ess_n:.0}) ratio {:.4}", sd_e / sd_n);
    }
    println!("wins {wins}/12");
}
