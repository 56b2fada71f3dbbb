//! Dense symmetric-matrix utilities: vectorization, the duplication matrix,
//! Kronecker products, factorizations and Schur-complement marginalization.
//!
//! Conventions fixed once and used by every Hessian in the crate:
//! - `vech` stacks the lower triangle in column-major order, so for a k x k
//!   symmetric S the order is (s_11, s_21, .., s_k1, s_22, s_32, ..).
//! - The duplication matrix D_k (k^2 x k(k+1)/2) satisfies D_k vech(S) = vec(S).
//! - A matrix counts as positive definite when its minimum eigenvalue exceeds
//!   `PD_RELATIVE_TOL * (1 + max eigenvalue)`, a relative criterion that
//!   survives hyperparameter scales from 1e-3 to 1e3.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative eigenvalue tolerance for positive-definiteness checks.
pub const PD_RELATIVE_TOL: f64 = 1e-12;

/// Dense symmetric matrix. Construction mirrors the lower triangle into the
/// upper one, so `entry(i, j) == entry(j, i)` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    data: DMatrix<f64>,
}

impl SymMatrix {
    /// Builds from an arbitrary square matrix, averaging `m` with its
    /// transpose. Exact for already-symmetric input.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidArgument(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let k = m.nrows();
        let mut data = DMatrix::zeros(k, k);
        for j in 0..k {
            data[(j, j)] = m[(j, j)];
            for i in (j + 1)..k {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                data[(i, j)] = v;
                data[(j, i)] = v;
            }
        }
        Ok(Self { data })
    }

    /// Builds from the lower triangle of `m`, mirroring it upward.
    pub fn from_lower(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidArgument(
                "symmetric matrix must be square".into(),
            ));
        }
        let k = m.nrows();
        let mut data = DMatrix::zeros(k, k);
        for j in 0..k {
            for i in j..k {
                data[(i, j)] = m[(i, j)];
                data[(j, i)] = m[(i, j)];
            }
        }
        Ok(Self { data })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            data: DMatrix::identity(k, k),
        }
    }

    pub fn zeros(k: usize) -> Self {
        Self {
            data: DMatrix::zeros(k, k),
        }
    }

    /// Scalar multiple of the identity.
    pub fn scaled_identity(k: usize, c: f64) -> Self {
        Self {
            data: DMatrix::identity(k, k) * c,
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    /// Borrow the underlying dense storage.
    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut eig: Vec<f64> = self
            .data
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        eig
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Relative positive-definiteness test: min eig > tol * (1 + max eig).
    pub fn is_pd(&self, tol: f64) -> bool {
        let eig = self.eigenvalues();
        let max = eig[eig.len() - 1];
        eig[0] > tol * (1.0 + max.abs())
    }

    /// Cholesky factor (lower triangular); errors when not PD.
    pub fn cholesky(&self) -> Result<DMatrix<f64>> {
        nalgebra::Cholesky::new(self.data.clone())
            .map(|c| c.l())
            .ok_or_else(|| Error::NotPositiveDefinite("cholesky factorization failed".into()))
    }

    /// log det via Cholesky; errors when not PD.
    pub fn log_det(&self) -> Result<f64> {
        let l = self.cholesky()?;
        Ok(2.0 * (0..self.dim()).map(|i| l[(i, i)].ln()).sum::<f64>())
    }

    /// Solves S x = rhs for symmetric positive definite S.
    pub fn solve_spd(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let chol = nalgebra::Cholesky::new(self.data.clone())
            .ok_or_else(|| Error::NotPositiveDefinite("solve_spd: matrix not PD".into()))?;
        Ok(chol.solve(rhs))
    }

    /// Inverse via Cholesky; errors when not PD.
    pub fn inverse_spd(&self) -> Result<SymMatrix> {
        let chol = nalgebra::Cholesky::new(self.data.clone())
            .ok_or_else(|| Error::NotPositiveDefinite("inverse_spd: matrix not PD".into()))?;
        SymMatrix::from_matrix(&chol.inverse())
    }

    /// Unique symmetric PSD square root via eigendecomposition. Eigenvalues
    /// in `[-tol, 0)` are clamped to zero; below `-tol` is an error, with
    /// `tol = PD_RELATIVE_TOL * (1 + max |eig|)`.
    pub fn sym_sqrt(&self) -> Result<SymMatrix> {
        let eig = self.data.clone().symmetric_eigen();
        let max_abs = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let tol = PD_RELATIVE_TOL * (1.0 + max_abs);
        let mut roots = DVector::zeros(self.dim());
        for (i, &v) in eig.eigenvalues.iter().enumerate() {
            if v < -tol {
                return Err(Error::NotPsd { min_eig: v });
            }
            roots[i] = v.max(0.0).sqrt();
        }
        let q = eig.eigenvectors;
        let r = &q * DMatrix::from_diagonal(&roots) * q.transpose();
        SymMatrix::from_matrix(&r)
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix {
            data: &self.data * c,
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            data: &self.data + &other.data,
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            data: &self.data - &other.data,
        }
    }

    pub fn trace(&self) -> f64 {
        self.data.trace()
    }
}

/// Stacks the unique entries of a symmetric matrix: lower triangle,
/// column-major.
pub fn vech(s: &SymMatrix) -> DVector<f64> {
    let k = s.dim();
    let mut out = DVector::zeros(k * (k + 1) / 2);
    let mut idx = 0;
    for j in 0..k {
        for i in j..k {
            out[idx] = s.entry(i, j);
            idx += 1;
        }
    }
    out
}

/// Inverse of [`vech`]: rebuilds the symmetric matrix of dimension `k`.
pub fn unvech(v: &DVector<f64>, k: usize) -> Result<SymMatrix> {
    if v.len() != k * (k + 1) / 2 {
        return Err(Error::InvalidArgument(format!(
            "unvech: length {} does not match dimension {}",
            v.len(),
            k
        )));
    }
    let mut m = DMatrix::zeros(k, k);
    let mut idx = 0;
    for j in 0..k {
        for i in j..k {
            m[(i, j)] = v[idx];
            m[(j, i)] = v[idx];
            idx += 1;
        }
    }
    SymMatrix::from_matrix(&m)
}

/// The duplication matrix D_k (zero/one entries, k^2 x k(k+1)/2) with
/// D_k vech(S) = vec(S) for every symmetric S. Each row carries exactly one 1.
#[derive(Debug, Clone)]
pub struct DuplicationMatrix {
    k: usize,
    data: DMatrix<f64>,
}

impl DuplicationMatrix {
    pub fn new(k: usize) -> Self {
        let m = k * (k + 1) / 2;
        let mut data = DMatrix::zeros(k * k, m);
        // Column index of the vech entry for (i, j) with i >= j.
        let vech_index = |i: usize, j: usize| -> usize {
            // Entries preceding column j: k + (k-1) + .. + (k-j+1).
            j * k - (j * j - j) / 2 + (i - j)
        };
        for b in 0..k {
            for a in 0..k {
                let row = a + b * k; // vec position of entry (a, b)
                let col = if a >= b {
                    vech_index(a, b)
                } else {
                    vech_index(b, a)
                };
                data[(row, col)] = 1.0;
            }
        }
        Self { k, data }
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// D_k^T M D_k, the sandwich appearing in every vech-coordinate Hessian.
    pub fn sandwich(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let k2 = self.k * self.k;
        if m.nrows() != k2 || m.ncols() != k2 {
            return Err(Error::InvalidArgument(format!(
                "sandwich: expected {}x{} matrix, got {}x{}",
                k2,
                k2,
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(self.data.transpose() * m * &self.data)
    }

    /// D_k^T M for a k^2 x c matrix M (vech rows, original columns).
    pub fn left(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.data.transpose() * m
    }
}

/// Column-major vectorization of a dense matrix.
pub fn vec_matrix(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Kronecker product A (x) B.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Marginal precision block of a partitioned precision matrix
/// `[[A, G], [C, D]]`: returns `A - G D^-1 C` where A is `m x m`.
/// Errors with "nuisance block singular" when D has no inverse.
pub fn schur_marginal(h: &DMatrix<f64>, m: usize) -> Result<DMatrix<f64>> {
    let n = h.nrows();
    if h.ncols() != n || m > n {
        return Err(Error::InvalidArgument(format!(
            "schur_marginal: bad partition m = {} of {}x{}",
            m,
            h.nrows(),
            h.ncols()
        )));
    }
    let q = n - m;
    let a = h.view((0, 0), (m, m)).into_owned();
    if q == 0 {
        return Ok(a);
    }
    let g = h.view((0, m), (m, q)).into_owned();
    let c = h.view((m, 0), (q, m)).into_owned();
    let d = h.view((m, m), (q, q)).into_owned();
    let d_lu = d.lu();
    if !d_lu.is_invertible() {
        return Err(Error::NuisanceBlockSingular);
    }
    let d_inv_c = d_lu
        .solve(&c)
        .ok_or(Error::NuisanceBlockSingular)?;
    Ok(a - g * d_inv_c)
}
