use cgdesign::laplace::marginal_precision;
use cgdesign::matrix::{vech, SymMatrix};
use cgdesign::model::{standard_normal_matrix, ChainGraphParams};
use cgdesign::prior::{NormalMgigPrior, PriorSpec};
use cgdesign::sim::covariance_model;
use cgdesign::estimators::partial_correlation;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let (k, p, n) = (3usize, 1usize, 200usize);
    let omega_true = covariance_model(1, k).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = standard_normal_matrix(n, p, &mut rng);
    let v0 = vech(&omega_true);
    let grad = {
        let f = |v: &DVector<f64>| {
            let om = cgdesign::matrix::unvech(v, k).unwrap();
            partial_correlation(&om, 0, 1).unwrap()
        };
        let mut g = DVector::zeros(6);
        for i in 0..6 {
            let (mut vp, mut vm) = (v0.clone(), v0.clone());
            vp[i] += 1e-6; vm[i] -= 1e-6;
            g[i] = (f(&vp) - f(&vm)) / 2e-6;
        }
        g
    };
    for effect in [0.0, 1.0, 5.0, 100.0] {
        for pattern in [[0.0, 0.0, 1.0], [1.0, 1.0, 1.0], [1.0, 0.0, 0.0]] {
            let b = DMatrix::from_row_slice(1, 3, &pattern) * effect;
            let params = ChainGraphParams::new(b.clone(), omega_true.clone()).unwrap();
            let prior = PriorSpec::NormalMgig(NormalMgigPrior::new(
                4.0,
                SymMatrix::scaled_identity(3, 1e-3),
                SymMatrix::scaled_identity(3, 1e-3),
                b.clone(),
                SymMatrix::scaled_identity(1, 1e-3),
            ).unwrap());
            let mp = marginal_precision(&prior, &params, &x, n).unwrap();
            let cov = mp.matrix.inverse_spd().unwrap();
            let var = (grad.transpose() * cov.as_matrix() * &grad)[(0, 0)];
            println!("effect {effect:>6.1} pattern {pattern:?}: sd(rho12) = {:.6}", var.sqrt());
        }
    }
}
