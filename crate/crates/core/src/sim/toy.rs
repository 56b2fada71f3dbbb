//! The three-response toy study: posterior draws of the partial correlation
//! between the first two responses, with and without an experiment that
//! targets only the third response, under both prior families and both
//! uncertainty levels.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::derive_seed;
use super::models::covariance_model;
use crate::error::Result;
use crate::estimators::partial_correlation;
use crate::matrix::SymMatrix;
use crate::mgig::{sample_nmgig_posterior_omega, sample_nw_posterior};
use crate::model::{sample_responses_with_noise, standard_normal_matrix, ChainGraphParams, Dataset};
use crate::prior::{nw_posterior, NormalMgigPrior, NormalWishartPrior};

/// Knobs of the toy study; defaults follow the motivating example
/// (k = 3 responses, p = 1 predictor, n = 200 samples, AR(1) truth).
#[derive(Debug, Clone)]
pub struct ToyConfig {
    pub n: usize,
    /// Effect of the predictor on the third response in the experiment arm.
    pub effect: f64,
    /// Posterior draws per cell.
    pub draws: usize,
    pub base_seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            n: 200,
            effect: 1.0,
            draws: 2000,
            base_seed: 0,
        }
    }
}

/// One labeled posterior draw of rho_12.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToyRecord {
    pub prior: String,
    pub lambda_level: String,
    pub experiment: String,
    pub draw_index: usize,
    pub weight: f64,
    pub value: f64,
}

/// Runs the eight cells (2 priors x 2 uncertainty levels x experiment /
/// no-experiment) and returns the labeled draw sets for external plotting.
/// The predictor draw and the response innovations are shared across cells
/// so that experiment/no-experiment contrasts are paired.
pub fn run_toy(config: &ToyConfig) -> Result<Vec<ToyRecord>> {
    let k = 3usize;
    let p = 1usize;
    let omega_true = covariance_model(1, k)?;
    let mut records = Vec::new();

    let mut x_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.base_seed, &[101]));
    let x = standard_normal_matrix(config.n, p, &mut x_rng);
    let mut z_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.base_seed, &[102]));
    let z = standard_normal_matrix(config.n, k, &mut z_rng);

    for (cell, &(family, level, experiment)) in [
        ("wishart", "certain", false),
        ("wishart", "certain", true),
        ("wishart", "uncertain", false),
        ("wishart", "uncertain", true),
        ("mgig", "certain", false),
        ("mgig", "certain", true),
        ("mgig", "uncertain", false),
        ("mgig", "uncertain", true),
    ]
    .iter()
    .enumerate()
    {
        let pair_tag = cell as u64 / 2;
        // The predictor affects only the third response, or nothing at all.
        let b = if experiment {
            DMatrix::from_row_slice(p, k, &[0.0, 0.0, config.effect])
        } else {
            DMatrix::zeros(p, k)
        };
        let params = ChainGraphParams::new(b.clone(), omega_true.clone())?;
        let y = sample_responses_with_noise(&x, &params, &z)?;
        let data = Dataset::new(x.clone(), y)?;

        let lambda_b = match level {
            "certain" => SymMatrix::scaled_identity(p, 1e-3),
            _ => SymMatrix::scaled_identity(p, 1e3),
        };
        // Arms of the same (prior, level) pair share the draw stream.
        let draw_seed = derive_seed(config.base_seed, &[pair_tag, 3]);
        let draws: Vec<(f64, f64)> = match family {
            "wishart" => {
                let prior = NormalWishartPrior::new(
                    2.0 * k as f64 + 2.0,
                    SymMatrix::scaled_identity(k, 1e-3),
                    b.clone(),
                    lambda_b,
                )?;
                let post = nw_posterior(&prior, &data)?;
                sample_nw_posterior(&post, config.draws, draw_seed)?
                    .iter()
                    .map(|omega| Ok((1.0, partial_correlation(omega, 0, 1)?)))
                    .collect::<Result<_>>()?
            }
            _ => {
                let prior = NormalMgigPrior::new(
                    k as f64 + 1.0,
                    SymMatrix::scaled_identity(k, 1e-3),
                    SymMatrix::scaled_identity(k, 1e-3),
                    b.clone(),
                    lambda_b,
                )?;
                let batch = sample_nmgig_posterior_omega(&prior, &data, config.draws, draw_seed)?;
                batch
                    .samples
                    .iter()
                    .map(|s| Ok((s.weight, partial_correlation(&s.omega, 0, 1)?)))
                    .collect::<Result<_>>()?
            }
        };
        for (draw_index, (weight, value)) in draws.into_iter().enumerate() {
            records.push(ToyRecord {
                prior: family.to_string(),
                lambda_level: level.to_string(),
                experiment: if experiment { "experiment" } else { "null" }.to_string(),
                draw_index,
                weight,
                value,
            });
        }
    }
    Ok(records)
}

/// Weighted standard deviation with self-normalized weights.
pub fn weighted_std(values: &[f64], weights: &[f64]) -> f64 {
    let wsum: f64 = weights.iter().sum();
    let mean: f64 = values
        .iter()
        .zip(weights)
        .map(|(v, w)| v * w)
        .sum::<f64>()
        / wsum;
    let var: f64 = values
        .iter()
        .zip(weights)
        .map(|(v, w)| w * (v - mean).powi(2))
        .sum::<f64>()
        / wsum;
    var.sqrt()
}
