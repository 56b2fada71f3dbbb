//! The three design families compared in the studies, plus user-supplied
//! designs.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::standard_normal_matrix;

/// Family of a design matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignKind {
    /// X = 0: no experiment.
    Null,
    /// Orthonormal columns (X^T X = I_p) from a QR of a Gaussian draw.
    RandomOrthogonal,
    /// Stacked 3 I_p blocks, truncated to n rows: each predictor targets one
    /// response.
    Specific,
    /// Anything read from a file.
    Custom,
}

impl DesignKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "null" => Ok(Self::Null),
            "random" => Ok(Self::RandomOrthogonal),
            "specific" => Ok(Self::Specific),
            "custom" => Ok(Self::Custom),
            _ => Err(Error::Config(format!(
                "unknown design kind '{s}' (expected null, random, specific or custom)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Null => "null",
            Self::RandomOrthogonal => "random",
            Self::Specific => "specific",
            Self::Custom => "custom",
        }
    }
}

/// A design matrix tagged with its family.
#[derive(Debug, Clone)]
pub struct Design {
    pub matrix: DMatrix<f64>,
    pub kind: DesignKind,
}

/// Builds an n x p design of the requested family; deterministic in the seed
/// (only the random family consumes it).
pub fn make_design(kind: DesignKind, n: usize, p: usize, seed: u64) -> Result<Design> {
    let matrix = match kind {
        DesignKind::Null => DMatrix::zeros(n, p),
        DesignKind::RandomOrthogonal => {
            if n < p {
                return Err(Error::InvalidArgument(format!(
                    "random orthogonal design needs n >= p, got n = {n}, p = {p}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = standard_normal_matrix(n, p, &mut rng);
            g.qr().q()
        }
        DesignKind::Specific => {
            DMatrix::from_fn(n, p, |i, j| if i % p == j { 3.0 } else { 0.0 })
        }
        DesignKind::Custom => {
            return Err(Error::InvalidArgument(
                "custom designs are loaded from files, not generated".into(),
            ))
        }
    };
    Ok(Design { matrix, kind })
}
