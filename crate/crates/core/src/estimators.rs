//! Point-estimate quality and summary functionals.

use crate::error::{Error, Result};
use crate::matrix::{SymMatrix, PD_RELATIVE_TOL};

/// Stein's loss for precision matrices:
/// `tr(est truth^-1) - log det(est truth^-1) - k`. Nonnegative, zero only at
/// `est == truth`, and invariant under joint congruence.
pub fn steins_loss(estimate: &SymMatrix, truth: &SymMatrix) -> Result<f64> {
    if estimate.dim() != truth.dim() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: {} vs {}",
            estimate.dim(),
            truth.dim()
        )));
    }
    for (name, m) in [("estimate", estimate), ("truth", truth)] {
        if !m.is_pd(PD_RELATIVE_TOL) {
            return Err(Error::NotPositiveDefinite(name.into()));
        }
    }
    let k = estimate.dim() as f64;
    let truth_inv = truth.inverse_spd()?;
    let product = estimate.as_matrix() * truth_inv.as_matrix();
    let log_det = estimate.log_det()? - truth.log_det()?;
    Ok(product.trace() - log_det - k)
}

/// Partial correlation `rho_ij = -w_ij / sqrt(w_ii w_jj)` between responses
/// i and j given all others.
pub fn partial_correlation(omega: &SymMatrix, i: usize, j: usize) -> Result<f64> {
    let k = omega.dim();
    if i >= k || j >= k {
        return Err(Error::InvalidArgument(format!(
            "index ({i}, {j}) out of range for dimension {k}"
        )));
    }
    if i == j {
        return Err(Error::InvalidArgument(
            "partial correlation needs two distinct responses".into(),
        ));
    }
    Ok(-omega.entry(i, j) / (omega.entry(i, i) * omega.entry(j, j)).sqrt())
}
