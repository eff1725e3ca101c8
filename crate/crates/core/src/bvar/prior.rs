use nalgebra::{DMatrix, DVector};

use super::{BvarSpec, Regressors};
use crate::error::{Error, Result};
use crate::linalg::ols_vec;

/// Normal-inverse-Wishart prior in Kronecker form.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugatePrior {
    /// Prior mean of the stacked coefficients, `k x n`.
    pub mean: DMatrix<f64>,
    /// Diagonal of Ω (coefficient-side prior covariance), length `k`.
    pub omega: DVector<f64>,
    /// Inverse-Wishart scale Ψ.
    pub scale: DMatrix<f64>,
    pub df: f64,
}

/// Residual variance of a univariate AR(p) with intercept for each variable,
/// fitted on the rows of the VAR regression.
pub fn ar_residual_variances(reg: &Regressors, lags: usize) -> Result<Vec<f64>> {
    let (rows, n) = reg.y.shape();
    if rows <= lags + 1 {
        return Err(Error::InvalidInput("too few observations for AR residual variances".into()));
    }
    (0..n)
        .map(|i| {
            let mut design = DMatrix::zeros(rows, lags + 1);
            for l in 0..lags {
                design.set_column(l, &reg.x.column(l * n + i));
            }
            design.set_column(lags, &DVector::from_element(rows, 1.0));
            let y = reg.y.column(i).into_owned();
            let beta = ols_vec(&design, &y).map_err(|e| {
                Error::Numerical(format!("AR({lags}) fit for variable {i}: {e}"))
            })?;
            let resid = &y - &design * beta;
            let var = resid.norm_squared() / (rows - lags - 1) as f64;
            if var > 0.0 && var.is_finite() {
                Ok(var)
            } else {
                Err(Error::NotPositiveDefinite(format!(
                    "AR residual variance of variable {i} is {var}"
                )))
            }
        })
        .collect()
}

/// Minnesota layout: own-first-lag mean δ_i, zero elsewhere; lag-l variable-j
/// coefficient variance `λ² / (l² σ_j²)` on the Ω side, so that with
/// `E[Σ_ii] = σ_i²` the implied variance is `(λ²/l²) σ_i²/σ_j²`.
pub fn build_prior(spec: &BvarSpec, reg: &Regressors) -> Result<ConjugatePrior> {
    let n = reg.y.ncols();
    spec.validate(n)?;
    let p = spec.lags;
    let k = spec.k(n);
    if reg.x.ncols() != k {
        return Err(Error::Dimension(format!(
            "regressor matrix has {} columns, spec implies {k}",
            reg.x.ncols()
        )));
    }
    let sigma2 = match &spec.residual_variances {
        Some(v) => v.clone(),
        None => ar_residual_variances(reg, p)?,
    };
    let mut mean = DMatrix::zeros(k, n);
    for i in 0..n {
        mean[(i, i)] = spec.own_lag_mean_for(i);
    }
    let lambda2 = spec.lambda * spec.lambda;
    let mut omega = DVector::zeros(k);
    for l in 1..=p {
        for j in 0..n {
            omega[(l - 1) * n + j] = lambda2 / ((l * l) as f64 * sigma2[j]);
        }
    }
    if spec.intercept {
        omega[n * p] = spec.intercept_variance;
    }
    Ok(ConjugatePrior {
        mean,
        omega,
        scale: DMatrix::from_diagonal(&DVector::from_vec(sigma2)),
        df: spec.df(n),
    })
}
