//! Laplace-approximated marginal posterior precision of Omega under each
//! prior, the design information gain, its sharp upper bound, and the
//! D-optimality score.
//!
//! The joint negative Hessian of the log posterior partitions as
//! `[[A, G], [C, D]]` over (vech Omega, vec B); the marginal posterior
//! precision of Omega is the Schur complement `A - G D^-1 C`. Closed forms
//! per prior:
//!
//! - flat: `(n/2) D^T (O^-1 (x) O^-1) D` — no design dependence
//! - Normal-Wishart: `(n/2 + alpha) D^T (O^-1 (x) O^-1) D` — no design
//!   dependence either
//! - Normal-MGIG: adds `D^T [O^-1 (x) O^-1 (G_X + Psi) O^-1] D` with the
//!   design-controlled gain `G_X = B0^T (L^-1 - L^-1 (X^T X + L^-1)^-1 L^-1) B0`
//! - general independent: `D^T [(n/2) O^-1 (x) O^-1 + E (F^-1 - (F + L^-1)^-1) E^T] D + Psi`
//!
//! [`marginal_precision_generic`] assembles the exact joint Hessian
//! numerically and Schur-marginalizes it; it is the oracle that validates the
//! closed-form algebra.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::{kron, schur_marginal, DuplicationMatrix, SymMatrix, PD_RELATIVE_TOL};
use crate::model::{likelihood_hessian, ChainGraphParams};
use crate::prior::{information_gain_factor, prior_hessian, NormalMgigPrior, PriorSpec};

/// Laplace marginal posterior precision of Omega in vech coordinates,
/// together with whether the expression involves the design at all.
#[derive(Debug, Clone)]
pub struct MarginalPrecision {
    pub matrix: SymMatrix,
    pub depends_on_design: bool,
}

/// Closed-form Laplace marginal posterior precision of Omega for the given
/// prior, evaluated at caller-supplied parameters.
pub fn marginal_precision(
    prior: &PriorSpec,
    params: &ChainGraphParams,
    x: &DMatrix<f64>,
    n: usize,
) -> Result<MarginalPrecision> {
    let k = params.responses();
    if !params.omega().is_pd(PD_RELATIVE_TOL) {
        return Err(Error::NotPositiveDefinite("Omega".into()));
    }
    let dup = DuplicationMatrix::new(k);
    let omega_inv = params.omega().inverse_spd()?;
    let oi = omega_inv.as_matrix();
    let half_n = n as f64 / 2.0;

    let (matrix, depends): (DMatrix<f64>, bool) = match prior {
        PriorSpec::Flat => (dup.sandwich(&(kron(oi, oi) * half_n))?, false),
        PriorSpec::NormalWishart(nw) => (
            dup.sandwich(&(kron(oi, oi) * (half_n + nw.alpha())))?,
            false,
        ),
        PriorSpec::NormalMgig(nm) => {
            let xtx = x.transpose() * x;
            let gain = information_gain_factor(&xtx, &nm.lambda_b)?;
            let inner = nm.b0.transpose() * gain.as_matrix() * &nm.b0 + nm.psi.as_matrix();
            let block = oi * (half_n + nm.alpha()) + oi * inner * oi;
            (dup.sandwich(&kron(oi, &block))?, true)
        }
        PriorSpec::GeneralIndependent(g) => {
            let m = k * (k + 1) / 2;
            let p = params.predictors();
            if g.omega_curvature.dim() != m || g.coef_curvature.dim() != p * k {
                return Err(Error::InvalidArgument(
                    "general prior blocks do not match parameter dimensions".into(),
                ));
            }
            let xtx = x.transpose() * x;
            let f = kron(oi, &xtx);
            // T = F - F (F + L^-1)^-1 F, the X-controlled factor, which is
            // exactly zero at X = 0 and needs no inverse of F itself.
            let f_plus = SymMatrix::from_matrix(&(&f + g.coef_curvature.as_matrix()))?;
            let t = &f - &f * f_plus.inverse_spd()?.as_matrix() * &f;
            let wrap = kron(
                &DMatrix::identity(k, k),
                &(oi * params.coefficients().transpose()),
            );
            let core = kron(oi, oi) * half_n + &wrap * t * wrap.transpose();
            (dup.sandwich(&core)? + g.omega_curvature.as_matrix(), true)
        }
    };
    Ok(MarginalPrecision {
        matrix: SymMatrix::from_matrix(&matrix)?,
        depends_on_design: depends,
    })
}

/// Oracle route: assembles the joint negative Hessian of log prior + log
/// likelihood numerically and applies the Schur marginalization. Requires the
/// nuisance (vec B) block to be invertible, hence `X^T X` invertible for the
/// flat prior.
pub fn marginal_precision_generic(
    prior: &PriorSpec,
    params: &ChainGraphParams,
    x: &DMatrix<f64>,
    n: usize,
) -> Result<MarginalPrecision> {
    let k = params.responses();
    let m = k * (k + 1) / 2;
    let neg_hess = -(likelihood_hessian(params, x, n)? + prior_hessian(prior, params)?);
    let marginal = schur_marginal(&neg_hess, m)?;
    Ok(MarginalPrecision {
        matrix: SymMatrix::from_matrix(&marginal)?,
        depends_on_design: matches!(
            prior,
            PriorSpec::NormalMgig(_) | PriorSpec::GeneralIndependent(_)
        ),
    })
}

/// Inner (k x k) information gain of a design under the Normal-MGIG prior:
/// `O^-1 B0^T (L^-1 - L^-1 (X^T X + L^-1)^-1 L^-1) B0 O^-1`.
pub fn info_gain_inner(
    prior: &NormalMgigPrior,
    omega: &SymMatrix,
    x: &DMatrix<f64>,
) -> Result<SymMatrix> {
    let omega_inv = omega.inverse_spd()?;
    let xtx = x.transpose() * x;
    let gain = information_gain_factor(&xtx, &prior.lambda_b)?;
    SymMatrix::from_matrix(
        &(omega_inv.as_matrix()
            * prior.b0.transpose()
            * gain.as_matrix()
            * &prior.b0
            * omega_inv.as_matrix()),
    )
}

/// Fully wrapped information gain `D^T [O^-1 (x) inner] D`, the term the
/// design adds to the Laplace marginal precision. Canonical form for
/// comparisons against [`info_bound`].
pub fn info_gain(
    prior: &NormalMgigPrior,
    omega: &SymMatrix,
    x: &DMatrix<f64>,
) -> Result<SymMatrix> {
    let inner = info_gain_inner(prior, omega, x)?;
    wrap_inner(omega, &inner)
}

/// Inner form of the sharp information bound under the Normal-MGIG prior:
/// `O^-1 B0^T L^-1 B0 O^-1 = B0-tilde^T L^-1 B0-tilde`.
pub fn info_bound_inner(prior: &NormalMgigPrior, omega: &SymMatrix) -> Result<SymMatrix> {
    let omega_inv = omega.inverse_spd()?;
    let lam_inv = prior.lambda_b.inverse_spd()?;
    SymMatrix::from_matrix(
        &(omega_inv.as_matrix()
            * prior.b0.transpose()
            * lam_inv.as_matrix()
            * &prior.b0
            * omega_inv.as_matrix()),
    )
}

/// Sharp upper bound on the wrapped information gain; equality is approached
/// as `X^T X` grows without bound. Defined for the Normal-MGIG prior (through
/// B0) and the general independent prior (through the marginal coefficients
/// of the evaluation point).
pub fn info_bound(prior: &PriorSpec, params: &ChainGraphParams) -> Result<SymMatrix> {
    match prior {
        PriorSpec::NormalMgig(nm) => {
            let inner = info_bound_inner(nm, params.omega())?;
            wrap_inner(params.omega(), &inner)
        }
        PriorSpec::GeneralIndependent(g) => {
            let k = params.responses();
            let omega_inv = params.omega().inverse_spd()?;
            let wrap = kron(
                &DMatrix::identity(k, k),
                &(omega_inv.as_matrix() * params.coefficients().transpose()),
            );
            let bound = &wrap * g.coef_curvature.as_matrix() * wrap.transpose();
            let dup = DuplicationMatrix::new(k);
            SymMatrix::from_matrix(&dup.sandwich(&bound)?)
        }
        _ => Err(Error::InvalidArgument(
            "information bound is defined for the Normal-MGIG and general independent priors"
                .into(),
        )),
    }
}

fn wrap_inner(omega: &SymMatrix, inner: &SymMatrix) -> Result<SymMatrix> {
    let dup = DuplicationMatrix::new(omega.dim());
    let omega_inv = omega.inverse_spd()?;
    SymMatrix::from_matrix(&dup.sandwich(&kron(omega_inv.as_matrix(), inner.as_matrix()))?)
}

/// Bayesian D-optimality score `log det(X^T X + Lambda^-1)`.
pub fn d_optimality_score(x: &DMatrix<f64>, lambda_b: &SymMatrix) -> Result<f64> {
    let lam_inv = lambda_b.inverse_spd()?;
    let m = SymMatrix::from_matrix(&(x.transpose() * x + lam_inv.as_matrix()))?;
    m.log_det()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::standard_normal_matrix;
    use crate::prior::{GeneralIndependentPrior, NormalWishartPrior};
    use crate::testutil::{random_params, random_spd};
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_nw(k: usize, p: usize, seed: u64) -> NormalWishartPrior {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        NormalWishartPrior::new(
            2.0 * k as f64 + 2.0 + rng.random_range(0.0..3.0),
            random_spd(k, &mut rng),
            DMatrix::from_fn(p, k, |_, _| rng.random_range(-1.0..1.0)),
            random_spd(p, &mut rng),
        )
        .unwrap()
    }

    fn random_nmgig(k: usize, p: usize, seed: u64) -> NormalMgigPrior {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        NormalMgigPrior::new(
            k as f64 + 1.0 + rng.random_range(0.0..2.0),
            random_spd(k, &mut rng),
            random_spd(k, &mut rng),
            DMatrix::from_fn(p, k, |_, _| rng.random_range(-1.0..1.0)),
            random_spd(p, &mut rng),
        )
        .unwrap()
    }

    fn random_general(k: usize, p: usize, seed: u64) -> GeneralIndependentPrior {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GeneralIndependentPrior::new(
            random_spd(k * (k + 1) / 2, &mut rng),
            random_spd(p * k, &mut rng),
        )
        .unwrap()
    }

    #[test]
    fn flat_prior_k2_identity_case() {
        let params =
            crate::model::ChainGraphParams::new(DMatrix::zeros(1, 2), SymMatrix::identity(2))
                .unwrap();
        let x = DMatrix::zeros(10, 1);
        let mp = marginal_precision(&PriorSpec::Flat, &params, &x, 10).unwrap();
        assert!(!mp.depends_on_design);
        // 5 * D2^T D2 = diag(5, 10, 5).
        let expected = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![5.0, 10.0, 5.0]));
        assert_relative_eq!(*mp.matrix.as_matrix(), expected, max_relative = 1e-14);
    }

    #[test]
    fn nw_precision_ignores_design() {
        let (k, p, n) = (3, 2, 15);
        let prior = PriorSpec::NormalWishart(random_nw(k, p, 1));
        let params = random_params(k, p, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x1 = standard_normal_matrix(n, p, &mut rng);
            let x2 = standard_normal_matrix(n, p, &mut rng);
            let m1 = marginal_precision(&prior, &params, &x1, n).unwrap();
            let m2 = marginal_precision(&prior, &params, &x2, n).unwrap();
            assert!(!m1.depends_on_design);
            let dev = (m1.matrix.as_matrix() - m2.matrix.as_matrix()).abs().max();
            assert!(dev <= 1e-12 * m1.matrix.as_matrix().abs().max());
        }
    }

    #[test]
    fn nmgig_zero_design_keeps_only_psi_term() {
        let (k, p, n) = (3, 2, 12);
        let nm = random_nmgig(k, p, 5);
        let params = random_params(k, p, 6);
        let x = DMatrix::zeros(n, p);
        let mp = marginal_precision(&PriorSpec::NormalMgig(nm.clone()), &params, &x, n).unwrap();
        assert!(mp.depends_on_design);
        let dup = DuplicationMatrix::new(k);
        let oi = params.omega().inverse_spd().unwrap();
        let oi = oi.as_matrix();
        let expected = dup
            .sandwich(&(kron(oi, oi) * (n as f64 / 2.0 + nm.alpha())))
            .unwrap()
            + dup
                .sandwich(&kron(oi, &(oi * nm.psi.as_matrix() * oi)))
                .unwrap();
        assert_relative_eq!(*mp.matrix.as_matrix(), expected, max_relative = 1e-10);
    }

    #[test]
    fn generic_matches_closed_form_for_all_priors() {
        let (k, p, n) = (3, 2, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..20u64 {
            let params = random_params(k, p, 100 + trial);
            let x = standard_normal_matrix(n, p, &mut rng);
            let priors = [
                PriorSpec::Flat,
                PriorSpec::NormalWishart(random_nw(k, p, 200 + trial)),
                PriorSpec::NormalMgig(random_nmgig(k, p, 300 + trial)),
                PriorSpec::GeneralIndependent(random_general(k, p, 400 + trial)),
            ];
            for prior in &priors {
                let closed = marginal_precision(prior, &params, &x, n).unwrap();
                let generic = marginal_precision_generic(prior, &params, &x, n).unwrap();
                let dev = (closed.matrix.as_matrix() - generic.matrix.as_matrix())
                    .abs()
                    .max()
                    / closed.matrix.as_matrix().abs().max();
                assert!(
                    dev < 1e-8,
                    "{} prior: generic vs closed deviation {dev}",
                    prior.name()
                );
            }
        }
    }

    #[test]
    fn info_gain_vanishes_without_design_or_prior_mean() {
        let (k, p) = (3, 2);
        let nm = random_nmgig(k, p, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let omega = random_spd(k, &mut rng);
        let zero_x = DMatrix::zeros(7, p);
        let g = info_gain(&nm, &omega, &zero_x).unwrap();
        assert_eq!(g.as_matrix().abs().max(), 0.0);

        let mut nm0 = nm.clone();
        nm0.b0 = DMatrix::zeros(p, k);
        let x = standard_normal_matrix(7, p, &mut rng);
        let g0 = info_gain(&nm0, &omega, &x).unwrap();
        assert_eq!(g0.as_matrix().abs().max(), 0.0);
        let b0 = info_bound(&PriorSpec::NormalMgig(nm0), &random_params(k, p, 11)).unwrap();
        assert_eq!(b0.as_matrix().abs().max(), 0.0);
    }

    #[test]
    fn info_gain_monotone_in_design_scale() {
        let (k, p) = (3, 2);
        let nm = random_nmgig(k, p, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let omega = random_spd(k, &mut rng);
        let x0 = standard_normal_matrix(8, p, &mut rng);
        let mut prev: Option<SymMatrix> = None;
        for &t in &[0.1f64, 1.0, 10.0, 100.0] {
            let x = &x0 * t.sqrt();
            let g = info_gain(&nm, &omega, &x).unwrap();
            if let Some(prev) = &prev {
                let diff = g.sub(prev);
                let scale = g.as_matrix().abs().max();
                assert!(
                    diff.min_eigenvalue() >= -1e-10 * (1.0 + scale),
                    "gain not monotone at t = {t}"
                );
            }
            prev = Some(g);
        }
    }

    #[test]
    fn bound_dominates_gain_and_is_sharp() {
        let (k, p) = (3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for trial in 0..50u64 {
            let nm = random_nmgig(k, p, 500 + trial);
            let params = random_params(k, p, 600 + trial);
            let x = standard_normal_matrix(6, p, &mut rng);
            let gain = info_gain(&nm, params.omega(), &x).unwrap();
            let bound = info_bound(&PriorSpec::NormalMgig(nm.clone()), &params).unwrap();
            let diff = bound.sub(&gain);
            let scale = bound.as_matrix().abs().max();
            assert!(diff.min_eigenvalue() >= -1e-10 * (1.0 + scale));
            assert!(gain.min_eigenvalue() >= -1e-10 * (1.0 + scale));

            // Sharpness at X scaled by 1e4.
            let gain_large = info_gain(&nm, params.omega(), &(&x * 1e4)).unwrap();
            let rel =
                (bound.as_matrix() - gain_large.as_matrix()).norm() / bound.as_matrix().norm();
            assert!(rel < 1e-6, "sharpness ratio {rel}");
        }
    }

    #[test]
    fn general_prior_gain_respects_bound() {
        // The design term of the general-independent marginal precision is
        // bounded by the wrapped (I (x) (B O^-1)^T) L^-1 (..)^T matrix.
        let (k, p, n) = (3, 2, 8);
        let g = random_general(k, p, 21);
        let params = random_params(k, p, 22);
        let prior = PriorSpec::GeneralIndependent(g);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let zero = DMatrix::zeros(n, p);
        let base = marginal_precision(&prior, &params, &zero, n).unwrap();
        let bound = info_bound(&prior, &params).unwrap();
        for _ in 0..20 {
            let x = standard_normal_matrix(n, p, &mut rng);
            let with_x = marginal_precision(&prior, &params, &x, n).unwrap();
            let gain = with_x.matrix.sub(&base.matrix);
            let scale = bound.as_matrix().abs().max();
            assert!(gain.min_eigenvalue() >= -1e-10 * (1.0 + scale));
            let slack = bound.sub(&gain);
            assert!(slack.min_eigenvalue() >= -1e-10 * (1.0 + scale));
        }
        // Sharp as the design grows.
        let x_large = standard_normal_matrix(n, p, &mut rng) * 1e4;
        let with_large = marginal_precision(&prior, &params, &x_large, n).unwrap();
        let gain_large = with_large.matrix.sub(&base.matrix);
        let rel = (bound.as_matrix() - gain_large.as_matrix()).norm() / bound.as_matrix().norm();
        assert!(rel < 1e-6, "general-prior sharpness ratio {rel}");
    }

    #[test]
    fn d_optimality_properties() {
        let p = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let lambda_b = random_spd(p, &mut rng);
        let zero = DMatrix::zeros(5, p);
        let lam_inv = lambda_b.inverse_spd().unwrap();
        assert_relative_eq!(
            d_optimality_score(&zero, &lambda_b).unwrap(),
            lam_inv.log_det().unwrap(),
            max_relative = 1e-12
        );

        // Appending a row never decreases the score; scaling increases it.
        let x = standard_normal_matrix(6, p, &mut rng);
        let score = d_optimality_score(&x, &lambda_b).unwrap();
        let mut extended = DMatrix::zeros(7, p);
        extended.view_mut((0, 0), (6, p)).copy_from(&x);
        for j in 0..p {
            extended[(6, j)] = rng.random_range(-1.0..1.0);
        }
        assert!(d_optimality_score(&extended, &lambda_b).unwrap() >= score - 1e-12);
        assert!(d_optimality_score(&(&x * 2.0), &lambda_b).unwrap() > score);
    }

    #[test]
    fn bound_rejects_flat_and_wishart() {
        let params = random_params(2, 1, 41);
        assert!(info_bound(&PriorSpec::Flat, &params).is_err());
        assert!(info_bound(&PriorSpec::NormalWishart(random_nw(2, 1, 42)), &params).is_err());
    }
}
