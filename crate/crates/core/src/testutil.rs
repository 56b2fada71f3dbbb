//! Shared helpers for unit and integration tests.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::matrix::{unvech, vec_matrix, vech, SymMatrix};
use crate::model::ChainGraphParams;

pub fn random_sym(k: usize, rng: &mut impl Rng) -> SymMatrix {
    let m = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
    SymMatrix::from_matrix(&(&m + &m.transpose())).unwrap()
}

pub fn random_spd(k: usize, rng: &mut impl Rng) -> SymMatrix {
    let m = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
    let s = &m * m.transpose() + DMatrix::identity(k, k) * (0.5 + rng.random_range(0.0..1.0));
    SymMatrix::from_matrix(&s).unwrap()
}

pub fn random_params(k: usize, p: usize, seed: u64) -> ChainGraphParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = random_spd(k, &mut rng);
    let b = DMatrix::from_fn(p, k, |_, _| rng.random_range(-1.0..1.0));
    ChainGraphParams::new(b, omega).unwrap()
}

/// Central finite differences of a scalar function of (vech Omega, vec B).
pub fn finite_diff_hessian<F: Fn(&ChainGraphParams) -> f64>(
    f: F,
    params: &ChainGraphParams,
    step: f64,
) -> DMatrix<f64> {
    let k = params.responses();
    let p = params.predictors();
    let m = k * (k + 1) / 2;
    let dim = m + p * k;
    let mut theta0 = DVector::zeros(dim);
    theta0.rows_mut(0, m).copy_from(&vech(params.omega()));
    theta0
        .rows_mut(m, p * k)
        .copy_from(&vec_matrix(params.coefficients()));
    let eval = |t: &DVector<f64>| -> f64 {
        let omega = unvech(&t.rows(0, m).into_owned(), k).unwrap();
        let b = DMatrix::from_column_slice(p, k, t.rows(m, p * k).as_slice());
        f(&ChainGraphParams::new_unchecked(b, omega))
    };
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let mut tpp = theta0.clone();
            let mut tpm = theta0.clone();
            let mut tmp = theta0.clone();
            let mut tmm = theta0.clone();
            tpp[i] += step;
            tpp[j] += step;
            tpm[i] += step;
            tpm[j] -= step;
            tmp[i] -= step;
            tmp[j] += step;
            tmm[i] -= step;
            tmm[j] -= step;
            let v = (eval(&tpp) - eval(&tpm) - eval(&tmp) + eval(&tmm)) / (4.0 * step * step);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

/// Central finite-difference gradient in the same coordinates.
pub fn finite_diff_gradient<F: Fn(&ChainGraphParams) -> f64>(
    f: F,
    params: &ChainGraphParams,
    step: f64,
) -> DVector<f64> {
    let k = params.responses();
    let p = params.predictors();
    let m = k * (k + 1) / 2;
    let dim = m + p * k;
    let mut theta0 = DVector::zeros(dim);
    theta0.rows_mut(0, m).copy_from(&vech(params.omega()));
    theta0
        .rows_mut(m, p * k)
        .copy_from(&vec_matrix(params.coefficients()));
    let eval = |t: &DVector<f64>| -> f64 {
        let omega = unvech(&t.rows(0, m).into_owned(), k).unwrap();
        let b = DMatrix::from_column_slice(p, k, t.rows(m, p * k).as_slice());
        f(&ChainGraphParams::new_unchecked(b, omega))
    };
    let mut g = DVector::zeros(dim);
    for i in 0..dim {
        let mut tp = theta0.clone();
        let mut tm = theta0.clone();
        tp[i] += step;
        tm[i] -= step;
        g[i] = (eval(&tp) - eval(&tm)) / (2.0 * step);
    }
    g
}
