//! Observation model: probit link and the observed-data log-likelihood.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::normal;
use crate::observations::BinaryObservationMatrix;

/// Smallest value the link may return.
pub const LINK_FLOOR: f64 = f64::MIN_POSITIVE;
/// Largest value the link may return.
pub const LINK_CEIL: f64 = 1.0 - f64::EPSILON;

/// Link between latent values and Bernoulli probabilities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LinkFunction {
    #[default]
    Probit,
}

impl LinkFunction {
    /// Evaluate the link, clamped into `[LINK_FLOOR, LINK_CEIL]`.
    pub fn eval(self, m: f64) -> Result<f64> {
        if !m.is_finite() {
            return Err(Error::Domain(m));
        }
        Ok(self.eval_unchecked(m))
    }

    #[inline]
    pub(crate) fn eval_unchecked(self, m: f64) -> f64 {
        match self {
            LinkFunction::Probit => normal::cdf(m).clamp(LINK_FLOOR, LINK_CEIL),
        }
    }
}

/// Probit link `Phi(m)`, clamped away from 0 and 1.
pub fn link_eval(m: f64) -> Result<f64> {
    LinkFunction::Probit.eval(m)
}

#[inline]
pub(crate) fn probit(m: f64) -> f64 {
    LinkFunction::Probit.eval_unchecked(m)
}

/// `sum_{(i,j) in omega} y log f(M_ij) + (1 - y) log(1 - f(M_ij))`.
pub fn observed_log_likelihood(m: &DenseMatrix, y: &BinaryObservationMatrix) -> Result<f64> {
    if m.shape() != y.shape() {
        return Err(Error::Dimension {
            expected: y.shape(),
            found: m.shape(),
        });
    }
    Ok(y
        .entries()
        .iter()
        .map(|e| {
            let f = probit(m.get(e.i, e.j));
            if e.y == 1 {
                f.ln()
            } else {
                (1.0 - f).ln()
            }
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn link_center_and_domain() {
        assert_eq!(link_eval(0.0).unwrap(), 0.5);
        assert!(matches!(link_eval(f64::NAN), Err(Error::Domain(_))));
        assert!(link_eval(f64::INFINITY).is_err());
    }

    #[test]
    fn link_is_clamped_inside_unit_interval() {
        assert_eq!(link_eval(-100.0).unwrap(), LINK_FLOOR);
        assert_eq!(link_eval(100.0).unwrap(), LINK_CEIL);
        assert!(link_eval(-38.0).unwrap() > 0.0);
    }

    #[test]
    fn log_likelihood_zero_matrix() {
        let y = BinaryObservationMatrix::from_triplets(2, 2, &[(0, 0, 1), (1, 1, 0), (0, 1, 0)])
            .unwrap();
        let m = DenseMatrix::zeros(2, 2);
        let ll = observed_log_likelihood(&m, &y).unwrap();
        assert!((ll - 3.0 * 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn log_likelihood_single_entries() {
        let y = BinaryObservationMatrix::from_triplets(1, 1, &[(0, 0, 0)]).unwrap();
        let ll = observed_log_likelihood(&DenseMatrix::zeros(1, 1), &y).unwrap();
        assert!((ll - 0.5f64.ln()).abs() < 1e-15);

        let y = BinaryObservationMatrix::from_triplets(1, 1, &[(0, 0, 1)]).unwrap();
        let m = DenseMatrix::from_vec(1, 1, vec![1.959_964]).unwrap();
        let ll = observed_log_likelihood(&m, &y).unwrap();
        assert!((ll - 0.975f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn log_likelihood_finite_at_extremes() {
        let y = BinaryObservationMatrix::from_triplets(1, 2, &[(0, 0, 1), (0, 1, 0)]).unwrap();
        let m = DenseMatrix::from_vec(1, 2, vec![-1e6, 1e6]).unwrap();
        assert!(observed_log_likelihood(&m, &y).unwrap().is_finite());
    }

    #[test]
    fn log_likelihood_shape_mismatch() {
        let y = BinaryObservationMatrix::from_triplets(1, 2, &[(0, 0, 1)]).unwrap();
        assert!(matches!(
            observed_log_likelihood(&DenseMatrix::zeros(2, 2), &y),
            Err(Error::Dimension { .. })
        ));
    }
}
