use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalue ratio below which a covariance counts as near-singular.
pub const MIN_RECIPROCAL_CONDITION: f64 = 1e-12;

/// Ridge used when the configured relative ridge would be zero because the
/// covariance diagonal is itself all zero (e.g. noise-free training data).
pub const ABSOLUTE_RIDGE_FLOOR: f64 = 1e-6;

/// Relative ridge factor applied to the mean diagonal by default.
pub const DEFAULT_RELATIVE_RIDGE: f64 = 1e-6;

/// An inverted covariance ready for quadratic forms.
#[derive(Debug, Clone)]
pub(crate) struct PreparedCovariance {
    /// Row-major inverse.
    inverse: Vec<f64>,
    bands: usize,
    pub log_det: f64,
    pub ridge: f64,
}

impl PreparedCovariance {
    /// (x − μ)ᵀ Σ⁻¹ (x − μ), accumulated row by row.
    #[inline]
    pub fn quad_form(&self, diff: &[f64]) -> f64 {
        let b = self.bands;
        let mut total = 0.0;
        for (i, di) in diff.iter().enumerate() {
            let row = &self.inverse[i * b..(i + 1) * b];
            let mut inner = 0.0;
            for (a, dj) in row.iter().zip(diff) {
                inner += a * dj;
            }
            total += di * inner;
        }
        total
    }
}

fn condition_estimate(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let max = eig.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    if min <= 0.0 || max == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn try_invert(m: &DMatrix<f64>) -> Option<(DMatrix<f64>, f64)> {
    if !m.iter().all(|v| v.is_finite()) {
        return None;
    }
    if condition_estimate(m) * MIN_RECIPROCAL_CONDITION > 1.0 {
        return None;
    }
    let chol = m.clone().cholesky()?;
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Some((chol.inverse(), log_det))
}

/// Inverts `cov`, adding a diagonal ridge first if it is near-singular.
///
/// `ridge = None` uses [`DEFAULT_RELATIVE_RIDGE`] × mean diagonal (or
/// [`ABSOLUTE_RIDGE_FLOOR`] when that diagonal is zero); `Some(0.0)` disables
/// the ridge.
pub(crate) fn prepare(cov: &DMatrix<f64>, ridge: Option<f64>, what: &str) -> Result<PreparedCovariance> {
    let bands = cov.nrows();
    let pack = |inv: DMatrix<f64>, log_det: f64, ridge: f64| {
        // Transpose of the column-major buffer gives row-major order.
        let inverse = inv.transpose().as_slice().to_vec();
        PreparedCovariance {
            inverse,
            bands,
            log_det,
            ridge,
        }
    };

    if let Some((inv, log_det)) = try_invert(cov) {
        return Ok(pack(inv, log_det, 0.0));
    }

    let eps = ridge.unwrap_or_else(|| {
        let mean_diag = cov.diagonal().mean();
        if mean_diag > 0.0 {
            DEFAULT_RELATIVE_RIDGE * mean_diag
        } else {
            ABSOLUTE_RIDGE_FLOOR
        }
    });
    if eps > 0.0 {
        let mut ridged = cov.clone();
        for i in 0..bands {
            ridged[(i, i)] += eps;
        }
        if let Some((inv, log_det)) = try_invert(&ridged) {
            return Ok(pack(inv, log_det, eps));
        }
        return Err(Error::SingularCovariance {
            what: what.to_string(),
            condition: condition_estimate(&ridged),
        });
    }
    Err(Error::SingularCovariance {
        what: what.to_string(),
        condition: condition_estimate(cov),
    })
}
