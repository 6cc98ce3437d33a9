//! Structured correlation matrices: identity, equicorrelated,
//! block-equicorrelated, and the nearly independent family with constant
//! off-diagonal `delta = scale * n^(-beta)`.
//!
//! Off-diagonal summaries (mean, RMS, max) come straight from the
//! structure in O(1); a dense matrix is materialized only on request and
//! only below a configurable size limit.

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

pub const DEFAULT_DENSE_LIMIT: usize = 2000;

#[derive(Clone, Debug, PartialEq)]
pub enum Structure {
    Identity,
    Equicorrelated {
        rho: f64,
    },
    BlockEquicorrelated {
        block_size: usize,
        num_blocks: usize,
        rho: f64,
    },
    /// Equicorrelated realization with `rho = delta = scale * n^(-beta)`.
    NearlyIndependent {
        beta: f64,
        scale: f64,
        delta: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationModel {
    n: usize,
    structure: Structure,
}

/// Positive definiteness of an equicorrelated block: eigenvalues are
/// `1 - rho` and `1 + (n-1) rho`, so `-1/(n-1) < rho < 1` is exact.
fn check_equicorrelated_pd(n: usize, rho: f64) -> Result<()> {
    let lo = if n > 1 { -1.0 / (n as f64 - 1.0) } else { -1.0 };
    if n > 1 && !(rho > lo && rho < 1.0) {
        return Err(Error::NotPositiveDefinite { rho, lo });
    }
    Ok(())
}

pub fn build_identity(n: usize) -> Result<CorrelationModel> {
    if n == 0 {
        return Err(Error::InvalidDimension { min: 1, got: 0 });
    }
    Ok(CorrelationModel {
        n,
        structure: Structure::Identity,
    })
}

pub fn build_equicorrelated(n: usize, rho: f64) -> Result<CorrelationModel> {
    if n == 0 {
        return Err(Error::InvalidDimension { min: 1, got: 0 });
    }
    check_equicorrelated_pd(n, rho)?;
    Ok(CorrelationModel {
        n,
        structure: Structure::Equicorrelated { rho },
    })
}

pub fn build_block_equicorrelated(
    block_size: usize,
    num_blocks: usize,
    rho: f64,
) -> Result<CorrelationModel> {
    if block_size == 0 || num_blocks == 0 {
        return Err(Error::InvalidDimension { min: 1, got: 0 });
    }
    check_equicorrelated_pd(block_size, rho)?;
    Ok(CorrelationModel {
        n: block_size * num_blocks,
        structure: Structure::BlockEquicorrelated {
            block_size,
            num_blocks,
            rho,
        },
    })
}

pub fn build_nearly_independent(n: usize, beta: f64, scale: f64) -> Result<CorrelationModel> {
    if n == 0 {
        return Err(Error::InvalidDimension { min: 1, got: 0 });
    }
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    if !(scale > 0.0) {
        return Err(Error::Domain(format!("scale must be positive, got {scale}")));
    }
    let delta = scale * (n as f64).powf(-beta);
    if delta >= 1.0 {
        return Err(Error::NotPositiveDefinite {
            rho: delta,
            lo: 0.0,
        });
    }
    Ok(CorrelationModel {
        n,
        structure: Structure::NearlyIndependent { beta, scale, delta },
    })
}

impl CorrelationModel {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    /// Matrix entry `(i, j)` implied by the structure.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 1.0;
        }
        match self.structure {
            Structure::Identity => 0.0,
            Structure::Equicorrelated { rho } => rho,
            Structure::BlockEquicorrelated {
                block_size, rho, ..
            } => {
                if i / block_size == j / block_size {
                    rho
                } else {
                    0.0
                }
            }
            Structure::NearlyIndependent { delta, .. } => delta,
        }
    }

    /// Mean of the `n(n-1)` off-diagonal entries (rho-bar, the driver of
    /// the correction term).
    pub fn mean_offdiag(&self) -> Result<f64> {
        if self.n < 2 {
            return Err(Error::UndefinedStatistic(self.n));
        }
        Ok(match self.structure {
            Structure::Identity => 0.0,
            Structure::Equicorrelated { rho } => rho,
            Structure::BlockEquicorrelated {
                block_size: b,
                num_blocks: m,
                rho,
            } => {
                // m*b*(b-1) within-block ordered pairs out of bm*(bm-1)
                rho * (b as f64 - 1.0) / ((b * m) as f64 - 1.0)
            }
            Structure::NearlyIndependent { delta, .. } => delta,
        })
    }

    /// Root mean square of the off-diagonal entries.
    pub fn rms_offdiag(&self) -> Result<f64> {
        if self.n < 2 {
            return Err(Error::UndefinedStatistic(self.n));
        }
        Ok(match self.structure {
            Structure::Identity => 0.0,
            Structure::Equicorrelated { rho } => rho.abs(),
            Structure::BlockEquicorrelated {
                block_size: b,
                num_blocks: m,
                rho,
            } => (rho * rho * (b as f64 - 1.0) / ((b * m) as f64 - 1.0)).sqrt(),
            Structure::NearlyIndependent { delta, .. } => delta,
        })
    }

    /// Largest absolute off-diagonal entry.
    pub fn max_abs_offdiag(&self) -> Result<f64> {
        if self.n < 2 {
            return Err(Error::UndefinedStatistic(self.n));
        }
        Ok(match self.structure {
            Structure::Identity => 0.0,
            Structure::Equicorrelated { rho } => rho.abs(),
            Structure::BlockEquicorrelated {
                block_size, rho, ..
            } => {
                if block_size > 1 {
                    rho.abs()
                } else {
                    0.0
                }
            }
            Structure::NearlyIndependent { delta, .. } => delta,
        })
    }

    pub fn to_dense(&self) -> Result<SquareMatrix> {
        self.to_dense_with_limit(DEFAULT_DENSE_LIMIT)
    }

    pub fn to_dense_with_limit(&self, limit: usize) -> Result<SquareMatrix> {
        if self.n > limit {
            return Err(Error::DenseTooLarge { n: self.n, limit });
        }
        let mut m = SquareMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m.set(i, j, self.entry(i, j));
            }
        }
        Ok(m)
    }
}
