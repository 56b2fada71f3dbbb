//! The Gaussian chain graph sampling model.
//!
//! Each response row is drawn conditionally on its predictor row:
//!
//! ```text
//! Y_i | X_i ~ N(Omega^-1 B^T X_i, Omega^-1)
//! ```
//!
//! with B (p x k) the conditional regression coefficients and Omega (k x k,
//! positive definite) the precision among responses. The module provides the
//! exact log likelihood, response simulation, the analytic joint Hessian /
//! Fisher information in (vech Omega, vec B) coordinates, the MLE through the
//! marginal parameterization, and the conditional-to-marginal coefficient map.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{kron, DuplicationMatrix, SymMatrix, PD_RELATIVE_TOL};

/// Parameters of the chain graph model: conditional coefficients and the
/// precision among responses.
#[derive(Debug, Clone)]
pub struct ChainGraphParams {
    b: DMatrix<f64>,
    omega: SymMatrix,
}

impl ChainGraphParams {
    /// Skips the positive-definiteness check; used where the caller perturbs
    /// a known-PD matrix by infinitesimal steps.
    #[doc(hidden)]
    pub fn new_unchecked(b: DMatrix<f64>, omega: SymMatrix) -> Self {
        Self { b, omega }
    }

    pub fn new(b: DMatrix<f64>, omega: SymMatrix) -> Result<Self> {
        if b.ncols() != omega.dim() {
            return Err(Error::InvalidArgument(format!(
                "B has {} columns but Omega is {}x{}",
                b.ncols(),
                omega.dim(),
                omega.dim()
            )));
        }
        if !omega.is_pd(PD_RELATIVE_TOL) {
            return Err(Error::NotPositiveDefinite("Omega".into()));
        }
        Ok(Self { b, omega })
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn omega(&self) -> &SymMatrix {
        &self.omega
    }

    /// Number of response nodes k.
    pub fn responses(&self) -> usize {
        self.omega.dim()
    }

    /// Number of predictor nodes p.
    pub fn predictors(&self) -> usize {
        self.b.nrows()
    }
}

/// Paired design and response matrices with matching row counts.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::InvalidArgument(format!(
                "X has {} rows but Y has {}",
                x.nrows(),
                y.nrows()
            )));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Exact log likelihood of the dataset:
///
/// ```text
/// l = (n/2) log|Omega| - (n k / 2) log(2 pi) + tr(Y^T X B)
///     - (1/2) tr(Y^T Y Omega) - (1/2) tr(X^T X B Omega^-1 B^T)
/// ```
pub fn log_likelihood(data: &Dataset, params: &ChainGraphParams) -> Result<f64> {
    let n = data.len() as f64;
    let k = params.responses() as f64;
    let omega = params.omega();
    let log_det = omega.log_det()?;
    let omega_inv = omega.inverse_spd()?;

    let b = params.coefficients();
    let xtx = data.x().transpose() * data.x();
    let tr_ytxb = (data.y().transpose() * data.x() * b).trace();
    let tr_yty_omega = (data.y().transpose() * data.y() * omega.as_matrix()).trace();
    let tr_quad = (xtx * b * omega_inv.as_matrix() * b.transpose()).trace();

    Ok(0.5 * n * log_det - 0.5 * n * k * (2.0 * std::f64::consts::PI).ln() + tr_ytxb
        - 0.5 * tr_yty_omega
        - 0.5 * tr_quad)
}

/// Draws responses row by row from `N(Omega^-1 B^T X_i, Omega^-1)`,
/// deterministic given the seed.
pub fn sample_responses(
    x: &DMatrix<f64>,
    params: &ChainGraphParams,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = standard_normal_matrix(x.nrows(), params.responses(), &mut rng);
    sample_responses_with_noise(x, params, &z)
}

/// Same sampler with caller-supplied standard-normal noise, so that paired
/// designs can share their innovations.
pub fn sample_responses_with_noise(
    x: &DMatrix<f64>,
    params: &ChainGraphParams,
    z: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    let k = params.responses();
    if z.nrows() != n || z.ncols() != k {
        return Err(Error::InvalidArgument(format!(
            "noise must be {}x{}, got {}x{}",
            n,
            k,
            z.nrows(),
            z.ncols()
        )));
    }
    // Row mean is Omega^-1 B^T x_i, stacked: X B Omega^-1.
    let omega_inv = params.omega().inverse_spd()?;
    let mean = x * params.coefficients() * omega_inv.as_matrix();
    // If Omega = L L^T then each row of Z L^-1 has covariance
    // L^-T L^-1 = Omega^-1.
    let l = params.omega().cholesky()?;
    let l_inv = l
        .try_inverse()
        .ok_or_else(|| Error::Singular("cholesky factor".into()))?;
    Ok(mean + z * l_inv)
}

/// An n x k matrix of independent standard normal draws.
pub fn standard_normal_matrix(n: usize, k: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, k, |_, _| rng.sample(StandardNormal))
}

/// Joint Hessian of the log likelihood in (vech Omega, vec B) coordinates.
///
/// Block form (m = k(k+1)/2 first, then p k):
///
/// ```text
/// d2l/dvech(O)2  = -D^T [ (n/2) O^-1 (x) O^-1 + O^-1 (x) O^-1 B^T X^T X B O^-1 ] D
/// d2l/dvech(O) dvec(B) =  D^T [ O^-1 (x) O^-1 B^T X^T X ]
/// d2l/dvec(B)2   = -O^-1 (x) X^T X
/// ```
pub fn likelihood_hessian(
    params: &ChainGraphParams,
    x: &DMatrix<f64>,
    n: usize,
) -> Result<DMatrix<f64>> {
    let k = params.responses();
    let p = params.predictors();
    if x.ncols() != p {
        return Err(Error::InvalidArgument(format!(
            "design has {} columns, expected {}",
            x.ncols(),
            p
        )));
    }
    let dup = DuplicationMatrix::new(k);
    let m = k * (k + 1) / 2;
    let omega_inv = params.omega().inverse_spd()?;
    let oi = omega_inv.as_matrix();
    let b = params.coefficients();
    let xtx = x.transpose() * x;

    let bxxb = b.transpose() * &xtx * b; // k x k
    // Dk^T [ O^-1 (x) ((n/2) O^-1 + O^-1 B^T X^T X B O^-1) ] Dk
    let oo_block = dup.sandwich(&kron(oi, &(oi * ((n as f64) * 0.5) + oi * &bxxb * oi)))?;

    let cross = dup.left(&kron(oi, &(oi * b.transpose() * &xtx))); // m x pk
    let bb_block = kron(oi, &xtx); // pk x pk

    let dim = m + p * k;
    let mut h = DMatrix::zeros(dim, dim);
    h.view_mut((0, 0), (m, m)).copy_from(&(-&oo_block));
    h.view_mut((0, m), (m, p * k)).copy_from(&cross);
    h.view_mut((m, 0), (p * k, m)).copy_from(&cross.transpose());
    h.view_mut((m, m), (p * k, p * k)).copy_from(&(-bb_block));
    Ok(h)
}

/// Fisher information: the negative of [`likelihood_hessian`], symmetric PSD.
pub fn fisher_information(
    params: &ChainGraphParams,
    x: &DMatrix<f64>,
    n: usize,
) -> Result<SymMatrix> {
    let h = likelihood_hessian(params, x, n)?;
    SymMatrix::from_matrix(&(-h))
}

/// Maximum likelihood estimate through the marginal parameterization:
/// Gamma = (X^T X)^-1 X^T Y, Sigma = residual covariance, then
/// Omega = Sigma^-1 and B = Gamma Omega.
pub fn mle(data: &Dataset) -> Result<ChainGraphParams> {
    let n = data.len();
    let k = data.y().ncols();
    let p = data.x().ncols();
    if n <= k {
        return Err(Error::InvalidArgument("need n > k".into()));
    }
    let gamma = if p == 0 {
        DMatrix::zeros(0, k)
    } else {
        let xtx = data.x().transpose() * data.x();
        let xtx_lu = xtx.lu();
        if !xtx_lu.is_invertible() {
            return Err(Error::Singular("design not full rank".into()));
        }
        xtx_lu
            .solve(&(data.x().transpose() * data.y()))
            .ok_or_else(|| Error::Singular("design not full rank".into()))?
    };
    let resid = data.y() - data.x() * &gamma;
    let sigma_hat =
        SymMatrix::from_matrix(&(resid.transpose() * &resid / (n as f64)))?;
    if !sigma_hat.is_pd(PD_RELATIVE_TOL) {
        return Err(Error::Singular("need n > k".into()));
    }
    let omega_hat = sigma_hat.inverse_spd()?;
    let b_hat = &gamma * omega_hat.as_matrix();
    ChainGraphParams::new(b_hat, omega_hat)
}

/// Marginal regression coefficients `B Omega^-1`: the observable regression
/// of responses on predictors.
pub fn marginal_coefficients(params: &ChainGraphParams) -> Result<DMatrix<f64>> {
    let omega_inv = params.omega().inverse_spd()?;
    Ok(params.coefficients() * omega_inv.as_matrix())
}
