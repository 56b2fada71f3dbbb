//! The six true-precision structures used by the simulation studies.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::{SymMatrix, PD_RELATIVE_TOL};

/// Builds the true precision matrix for models 1-6:
///
/// 1. AR(1): covariance `sigma_ij = 0.7^|i-j|`, precision is its inverse
/// 2. AR(2): banded precision, diagonal 1, first band 0.5, second band 0.25
/// 3. Block: covariance with two equal diagonal blocks of within-block
///    correlation 0.5, inverted
/// 4. Star: precision with diagonal 1 and first row/column 0.1
/// 5. Circle: precision with diagonal 2, first band 1, corner 0.9
/// 6. Full: precision with diagonal 2 and 1 everywhere else
///
/// Positive definiteness is verified before returning; a failed construction
/// raises rather than repairing.
pub fn covariance_model(model_id: u8, k: usize) -> Result<SymMatrix> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "covariance model needs k >= 2, got {k}"
        )));
    }
    let omega = match model_id {
        1 => {
            let sigma = DMatrix::from_fn(k, k, |i, j| 0.7f64.powi((i as i32 - j as i32).abs()));
            SymMatrix::from_matrix(&sigma)?.inverse_spd()?
        }
        2 => {
            let m = DMatrix::from_fn(k, k, |i, j| {
                match (i as i32 - j as i32).abs() {
                    0 => 1.0,
                    1 => 0.5,
                    2 => 0.25,
                    _ => 0.0,
                }
            });
            SymMatrix::from_matrix(&m)?
        }
        3 => {
            let half = k / 2;
            let sigma = DMatrix::from_fn(k, k, |i, j| {
                if i == j {
                    1.0
                } else if (i < half) == (j < half) {
                    0.5
                } else {
                    0.0
                }
            });
            SymMatrix::from_matrix(&sigma)?.inverse_spd()?
        }
        4 => {
            let m = DMatrix::from_fn(k, k, |i, j| {
                if i == j {
                    1.0
                } else if i == 0 || j == 0 {
                    0.1
                } else {
                    0.0
                }
            });
            SymMatrix::from_matrix(&m)?
        }
        5 => {
            let m = DMatrix::from_fn(k, k, |i, j| {
                let d = (i as i32 - j as i32).abs();
                if d == 0 {
                    2.0
                } else if d == 1 {
                    1.0
                } else if d == k as i32 - 1 {
                    0.9
                } else {
                    0.0
                }
            });
            SymMatrix::from_matrix(&m)?
        }
        6 => {
            let m = DMatrix::from_fn(k, k, |i, j| if i == j { 2.0 } else { 1.0 });
            SymMatrix::from_matrix(&m)?
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "model id must be 1..=6, got {model_id}"
            )))
        }
    };
    if !omega.is_pd(PD_RELATIVE_TOL) {
        return Err(Error::ModelNotPositiveDefinite { model_id, k });
    }
    Ok(omega)
}
