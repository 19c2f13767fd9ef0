//! Gaussian-observation reference: the Efron–Morris singular value
//! shrinkage estimator, the moment estimate of the row prior covariance and
//! the posterior mean under a given covariance.
//!
//! For `Y_ij ~ N(M_ij, 1)` with rows `m_i ~ N_q(0, Sigma)`:
//!
//! * posterior mean: `Y (I - (I + Sigma)^{-1})`
//! * moment estimate: `(I + Sigma_hat)^{-1} = (p - q - 1) (Y^T Y)^{-1}`
//! * plugging one into the other: `Y (I - (p - q - 1) (Y^T Y)^{-1})`

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Continuous `p x q` observation with unit noise variance.
#[derive(Clone, Debug)]
pub struct GaussianMatrixObservation {
    y: DMatrix<f64>,
}

impl GaussianMatrixObservation {
    pub fn new(y: DMatrix<f64>) -> Result<Self> {
        if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(*bad));
        }
        Ok(Self { y })
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    /// `p - q - 1`, which must be positive.
    fn shrinkage_dof(&self) -> Result<f64> {
        let (p, q) = self.y.shape();
        if p <= q + 1 {
            return Err(Error::Dimension {
                expected: (q + 2, q),
                found: (p, q),
            });
        }
        Ok((p - q - 1) as f64)
    }

    fn gram(&self) -> DMatrix<f64> {
        self.y.transpose() * &self.y
    }
}

/// `Y (I - (p - q - 1)(Y^T Y)^{-1})`, via a Cholesky solve against `Y^T Y`.
pub fn efron_morris_estimate(obs: &GaussianMatrixObservation) -> Result<DMatrix<f64>> {
    let c = obs.shrinkage_dof()?;
    let chol = obs.gram().cholesky().ok_or(Error::SingularGram)?;
    // Y G^{-1} = (G^{-1} Y^T)^T since G is symmetric.
    let y_ginv = chol.solve(&obs.y.transpose()).transpose();
    Ok(&obs.y - y_ginv * c)
}

/// Moment estimate of `Sigma` together with its definiteness.
#[derive(Clone, Debug)]
pub struct SigmaEstimate {
    pub sigma: DMatrix<f64>,
    pub min_eigenvalue: f64,
}

impl SigmaEstimate {
    /// Positive definite, so usable as a prior covariance.
    pub fn is_valid(&self) -> bool {
        self.min_eigenvalue > 0.0
    }

    /// Smallest eigenvalue within `tol` of zero.
    pub fn is_boundary(&self, tol: f64) -> bool {
        self.min_eigenvalue.abs() <= tol
    }
}

/// `Y^T Y / (p - q - 1) - I`, reported as-is (it may be indefinite).
pub fn moment_match_sigma(obs: &GaussianMatrixObservation) -> Result<SigmaEstimate> {
    let c = obs.shrinkage_dof()?;
    let gram = obs.gram();
    if gram.clone().cholesky().is_none() {
        return Err(Error::SingularGram);
    }
    let q = gram.nrows();
    let mut sigma = gram / c - DMatrix::<f64>::identity(q, q);
    crate::matrix::symmetrize(&mut sigma);
    let min_eigenvalue = sigma
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(SigmaEstimate {
        sigma,
        min_eigenvalue,
    })
}

/// Posterior mean `Y (I - (I + Sigma)^{-1})` for a positive definite `Sigma`.
pub fn bayes_estimate_given_sigma(
    obs: &GaussianMatrixObservation,
    sigma: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let q = obs.y.ncols();
    if sigma.shape() != (q, q) {
        return Err(Error::Dimension {
            expected: (q, q),
            found: sigma.shape(),
        });
    }
    let asym = (sigma - sigma.transpose()).abs().max();
    if asym > 1e-12 * sigma.abs().max().max(f64::MIN_POSITIVE) {
        return Err(Error::Covariance("sigma is not symmetric".into()));
    }
    if sigma.clone().cholesky().is_none() {
        return Err(Error::Covariance("sigma is not positive definite".into()));
    }
    let chol = (sigma + DMatrix::<f64>::identity(q, q))
        .cholesky()
        .ok_or_else(|| Error::Covariance("I + sigma is not positive definite".into()))?;
    let y_inv = chol.solve(&obs.y.transpose()).transpose();
    Ok(&obs.y - y_inv)
}
