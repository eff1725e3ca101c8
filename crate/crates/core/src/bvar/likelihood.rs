use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use super::covid::covid_scales;
use super::prior::{build_prior, ConjugatePrior};
use super::{build_regressors, BvarSpec, Regressors};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_lower, log_det_pd, symmetrize, RANK_TOL};
use crate::timeseries::MacroDataset;

/// Posterior of the conjugate model plus the log marginal likelihood.
#[derive(Debug, Clone)]
pub struct ConjugatePosterior {
    /// Posterior mean of the coefficients, `k x n`.
    pub mean: DMatrix<f64>,
    /// `(X'X + Ω⁻¹)⁻¹`
    pub coef_cov: DMatrix<f64>,
    /// Posterior inverse-Wishart scale.
    pub scale: DMatrix<f64>,
    pub df: f64,
    pub log_ml: f64,
}

fn ln_multivariate_gamma(n: usize, a: f64) -> f64 {
    let nf = n as f64;
    nf * (nf - 1.0) / 4.0 * std::f64::consts::PI.ln()
        + (1..=n).map(|j| ln_gamma(a + (1.0 - j as f64) / 2.0)).sum::<f64>()
}

fn check_full_column_rank(y: &DMatrix<f64>) -> Result<()> {
    let r = y.clone().qr().r();
    let scale = r.diagonal().iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    for j in 0..y.ncols().min(y.nrows()) {
        if r[(j, j)].abs() <= RANK_TOL * scale {
            return Err(Error::Singular(format!(
                "variable {j} is a linear combination of the other variables"
            )));
        }
    }
    Ok(())
}

/// Closed-form posterior and matrix-variate-t marginal likelihood
/// `log p(Y | prior)`.
///
/// Uses `D = diag(sqrt(Ω))` and `M = I + D X'X D` so that nearly dogmatic
/// or nearly flat priors stay well conditioned:
/// `(X'X + Ω⁻¹)⁻¹ = D M⁻¹ D` and `|Ω| |X'X + Ω⁻¹| = |M|`.
pub fn conjugate_posterior(prior: &ConjugatePrior, y: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<ConjugatePosterior> {
    let (t, n) = y.shape();
    let k = x.ncols();
    if x.nrows() != t || prior.mean.shape() != (k, n) || prior.omega.len() != k {
        return Err(Error::Dimension("prior and data dimensions disagree".into()));
    }
    if prior.omega.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::NotPositiveDefinite("prior coefficient variances".into()));
    }
    check_full_column_rank(y)?;

    let d: DVector<f64> = prior.omega.map(f64::sqrt);
    let xtx = x.transpose() * x;
    let mut m = DMatrix::identity(k, k);
    for i in 0..k {
        for j in 0..k {
            m[(i, j)] += d[i] * xtx[(i, j)] * d[j];
        }
    }
    let m_chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("X'X + prior precision is degenerate".into()))?;
    let log_det_m = 2.0 * m_chol.l().diagonal().iter().map(|v: &f64| v.ln()).sum::<f64>();

    // rhs = D X'Y + D⁻¹ B0
    let xty = x.transpose() * y;
    let mut rhs = DMatrix::zeros(k, n);
    for i in 0..k {
        for j in 0..n {
            rhs[(i, j)] = d[i] * xty[(i, j)] + prior.mean[(i, j)] / d[i];
        }
    }
    let inner = m_chol.solve(&rhs);
    let mean = DMatrix::from_fn(k, n, |i, j| d[i] * inner[(i, j)]);
    let m_inv = m_chol.inverse();
    let coef_cov = symmetrize(&DMatrix::from_fn(k, k, |i, j| d[i] * m_inv[(i, j)] * d[j]));

    let resid = y - x * &mean;
    let dev = &mean - &prior.mean;
    let mut dev_prec = DMatrix::zeros(n, n);
    for i in 0..k {
        let row = dev.row(i);
        dev_prec += row.transpose() * row / prior.omega[i];
    }
    let scale = symmetrize(&(&prior.scale + resid.transpose() * &resid + dev_prec));

    let df_post = prior.df + t as f64;
    let log_det_psi = log_det_pd(&prior.scale, "prior inverse-Wishart scale")?;
    let log_det_s = log_det_pd(&scale, "posterior inverse-Wishart scale")?;
    let nf = n as f64;
    let log_ml = -(t as f64 * nf / 2.0) * std::f64::consts::PI.ln()
        + ln_multivariate_gamma(n, df_post / 2.0)
        - ln_multivariate_gamma(n, prior.df / 2.0)
        - nf / 2.0 * log_det_m
        + prior.df / 2.0 * log_det_psi
        - df_post / 2.0 * log_det_s;
    if !log_ml.is_finite() {
        return Err(Error::Numerical(format!("log marginal likelihood is {log_ml}")));
    }
    // Fail early if the coefficient covariance cannot be factored for sampling.
    cholesky_lower(&coef_cov, "posterior coefficient covariance")?;
    Ok(ConjugatePosterior {
        mean,
        coef_cov,
        scale,
        df: df_post,
        log_ml,
    })
}

/// Divides row t of `(Y, X)` by `s_t`.
pub(crate) fn rescale_rows(reg: &Regressors, scales: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut y = reg.y.clone();
    let mut x = reg.x.clone();
    for (r, s) in scales.iter().enumerate() {
        y.row_mut(r).unscale_mut(*s);
        x.row_mut(r).unscale_mut(*s);
    }
    (y, x)
}

/// Marginal likelihood of the row-rescaled model, including the Jacobian
/// `-n Σ log s_t` of the rescaling. The prior is built from the unscaled
/// regression.
pub fn log_marginal_likelihood_scaled(reg: &Regressors, prior: &ConjugatePrior, scales: &[f64]) -> Result<f64> {
    if scales.len() != reg.y.nrows() {
        return Err(Error::Dimension(format!(
            "{} scales for {} observations",
            scales.len(),
            reg.y.nrows()
        )));
    }
    let (y, x) = rescale_rows(reg, scales);
    let post = conjugate_posterior(prior, &y, &x)?;
    let n = reg.y.ncols() as f64;
    Ok(post.log_ml - n * scales.iter().map(|s| s.ln()).sum::<f64>())
}

/// `log p(Y | λ, spec)` for the VAR implied by `spec`, with pandemic
/// rescaling when `spec.covid` is set.
pub fn log_marginal_likelihood(data: &MacroDataset, spec: &BvarSpec) -> Result<f64> {
    let reg = build_regressors(data, spec)?;
    let prior = build_prior(spec, &reg)?;
    let scales = match &spec.covid {
        Some(profile) => covid_scales(profile, &reg.dates)?,
        None => vec![1.0; reg.y.nrows()],
    };
    log_marginal_likelihood_scaled(&reg, &prior, &scales)
}
