use cgdesign::matrix::SymMatrix;
use cgdesign::mgig::kl_posterior_prior;
use cgdesign::model::{sample_responses_with_noise, standard_normal_matrix, ChainGraphParams, Dataset};
use cgdesign::prior::PriorSpec;
use cgdesign::sim::{covariance_model, derive_seed, make_design, DesignKind};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let (k, p) = (5usize, 5usize);
    let omega = covariance_model(1, k).unwrap();
    let b = DMatrix::identity(p, k);
    let params = ChainGraphParams::new(b.clone(), omega).unwrap();
    let count = 20_000;
    for kind in [DesignKind::RandomOrthogonal, DesignKind::Specific] {
        for n in [60usize, 400] {
            let mut deltas = Vec::new();
            let mut kls = Vec::new();
            for rep in 0..6u64 {
                let seed = derive_seed(9, &[n as u64, rep]);
                let design = make_design(kind, n, p, seed).unwrap();
                let mut zr = ChaCha8Rng::seed_from_u64(seed + 1);
                let z = standard_normal_matrix(n, k, &mut zr);
                let y_d = sample_responses_with_noise(&design.matrix, &params, &z).unwrap();
                let y_0 = sample_responses_with_noise(&DMatrix::zeros(n, p), &params, &z).unwrap();
                let prior = PriorSpec::preset("mgig-certain", k, p, b.clone()).unwrap();
                let kl_d = kl_posterior_prior(&prior, &Dataset::new(design.matrix.clone(), y_d).unwrap(), count, seed + 2).unwrap();
                let kl_0 = kl_posterior_prior(&prior, &Dataset::new(DMatrix::zeros(n, p), y_0).unwrap(), count, seed + 2).unwrap();
                deltas.push(kl_d.value.ln() - kl_0.value.ln());
                kls.push((kl_d.value, kl_d.std_err, kl_0.value, kl_d.ess));
            }
            let mean: f64 = deltas.iter().sum::<f64>() / deltas.len() as f64;
            let sd: f64 = (deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (deltas.len() as f64 - 1.0)).sqrt();
            println!("{kind:?} n={n}: mean delta {mean:+.5} sd {sd:.5}  kl_d {:.1}+-{:.2} kl_0 {:.1} ess {:.0}", kls[0].0, kls[0].1, kls[0].2, kls[0].3);
            println!("    deltas: {:?}", deltas.iter().map(|d| format!("{d:+.4}")).collect::<Vec<_>>());
        }
    }
}
