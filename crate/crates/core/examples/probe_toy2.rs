use cgdesign::laplace::marginal_precision;
use cgdesign::matrix::{vech, SymMatrix};
use cgdesign::mgig::sample_nmgig_posterior_omega;
use cgdesign::model::{sample_responses_with_noise, standard_normal_matrix, ChainGraphParams, Dataset};
use cgdesign::prior::{NormalMgigPrior, PriorSpec};
use cgdesign::sim::{covariance_model, weighted_std};
use cgdesign::estimators::partial_correlation;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn prior_for(b: &DMatrix<f64>) -> NormalMgigPrior {
    NormalMgigPrior::new(
        4.0,
        SymMatrix::scaled_identity(3, 1e-3),
        SymMatrix::scaled_identity(3, 1e-3),
        b.clone(),
        SymMatrix::scaled_identity(1, 1e-3),
    ).unwrap()
}

fn main() {
    let (k, p, n, draws) = (3usize, 1usize, 200usize, 40_000usize);
    let omega_true = covariance_model(1, k).unwrap();

    // Laplace-theory prediction of sd(rho12) ratio via the delta method.
    let b_exp = DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x_fixed = standard_normal_matrix(n, p, &mut rng);
    let grad_rho = {
        // numeric gradient of rho12 wrt vech(Omega) at truth
        let f = |v: &DVector<f64>| {
            let om = cgdesign::matrix::unvech(v, k).unwrap();
            partial_correlation(&om, 0, 1).unwrap()
        };
        let v0 = vech(&omega_true);
        let mut g = DVector::zeros(6);
        for i in 0..6 {
            let (mut vp, mut vm) = (v0.clone(), v0.clone());
            vp[i] += 1e-6; vm[i] -= 1e-6;
            g[i] = (f(&vp) - f(&vm)) / 2e-6;
        }
        g
    };
    for (label, b) in [("exp", b_exp.clone()), ("null", DMatrix::zeros(1, 3))] {
        let params = ChainGraphParams::new(b.clone(), omega_true.clone()).unwrap();
        let prior = PriorSpec::NormalMgig(prior_for(&b));
        let mp = marginal_precision(&prior, &params, &x_fixed, n).unwrap();
        let cov = mp.matrix.inverse_spd().unwrap();
        let var = (grad_rho.transpose() * cov.as_matrix() * &grad_rho)[(0, 0)];
        println!("laplace {label}: sd(rho12) = {:.5}", var.sqrt());
    }

    // CRN-paired Monte Carlo arms.
    let mut wins = 0;
    let runs = 20u64;
    for seed in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let x = standard_normal_matrix(n, p, &mut rng);
        let z = standard_normal_matrix(n, k, &mut rng);
        let mut sds = Vec::new();
        for b in [b_exp.clone(), DMatrix::zeros(1, 3)] {
            let params = ChainGraphParams::new(b.clone(), omega_true.clone()).unwrap();
            let y = sample_responses_with_noise(&x, &params, &z).unwrap();
            let data = Dataset::new(x.clone(), y).unwrap();
            let batch = sample_nmgig_posterior_omega(&prior_for(&b), &data, draws, 20_000 + seed).unwrap();
            let vals: Vec<f64> = batch.samples.iter().map(|s| partial_correlation(&s.omega, 0, 1).unwrap()).collect();
            let ws: Vec<f64> = batch.samples.iter().map(|s| s.weight).collect();
            sds.push(weighted_std(&vals, &ws));
        }
        if sds[0] < sds[1] { wins += 1; }
        println!("seed {seed}: sd_exp {:.5} sd_null {:.5} ratio {:.4}", sds[0], sds[1], sds[0] / sds[1]);
    }
    println!("wins {wins}/{runs}");
}
