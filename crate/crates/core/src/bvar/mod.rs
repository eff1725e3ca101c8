//! Reduced-form Bayesian VAR with a conjugate Minnesota-style
//! normal-inverse-Wishart prior.
//!
//! Model: `Y = X B + E`, rows of `E` are `N(0, Σ)`, with
//! `Σ ~ IW(Ψ, d)` and `vec(B) | Σ ~ N(vec(B0), Σ ⊗ Ω)`. The prior variance of
//! the lag-`l` coefficient of variable `j` in equation `i` is
//! `(λ² / l²) · σ_i² / σ_j²` with `σ²` from univariate AR residuals, and
//! `Ψ = diag(σ²)`, `d = n + 2`.

mod covid;
mod likelihood;
mod optimize;
mod prior;
mod sampler;

pub use covid::{covid_scales, estimate_covid_profile, estimate_covid_profile_on, CovidProfile};
pub use likelihood::{conjugate_posterior, log_marginal_likelihood, log_marginal_likelihood_scaled, ConjugatePosterior};
pub use optimize::{golden_section_max, nelder_mead_min, optimize_hyperparameters};
pub use prior::{ar_residual_variances, build_prior, ConjugatePrior};
pub use sampler::{data_hash, draw_inverse_wishart, posterior_sample, posterior_sample_range, BvarPosterior, PosteriorDraw};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::timeseries::{MacroDataset, QuarterIndex};

/// Prior variance of the intercept; large enough to be nearly flat.
pub const INTERCEPT_PRIOR_VARIANCE: f64 = 1e6;

/// Model and prior configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BvarSpec {
    pub lags: usize,
    pub intercept: bool,
    /// Prior mean of each variable's own first lag. A single entry applies
    /// to every variable.
    pub own_lag_mean: Vec<f64>,
    /// Overall tightness λ.
    pub lambda: f64,
    pub intercept_variance: f64,
    /// Prior degrees of freedom; `None` means `n + 2`.
    pub prior_df: Option<f64>,
    /// Prior residual variances σ²; `None` means univariate AR(p) residual
    /// variances on the estimation sample.
    pub residual_variances: Option<Vec<f64>>,
    pub covid: Option<CovidProfile>,
}

impl Default for BvarSpec {
    fn default() -> Self {
        Self {
            lags: 4,
            intercept: true,
            own_lag_mean: vec![0.0],
            lambda: 0.2,
            intercept_variance: INTERCEPT_PRIOR_VARIANCE,
            prior_df: None,
            residual_variances: None,
            covid: None,
        }
    }
}

impl BvarSpec {
    pub fn new(lags: usize, intercept: bool, own_lag_mean: f64, lambda: f64) -> Self {
        Self {
            lags,
            intercept,
            own_lag_mean: vec![own_lag_mean],
            lambda,
            ..Self::default()
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }

    pub fn with_covid(&self, covid: Option<CovidProfile>) -> Self {
        Self {
            covid,
            ..self.clone()
        }
    }

    /// Number of regressors per equation.
    pub fn k(&self, n: usize) -> usize {
        n * self.lags + usize::from(self.intercept)
    }

    pub fn df(&self, n: usize) -> f64 {
        self.prior_df.unwrap_or(n as f64 + 2.0)
    }

    pub fn own_lag_mean_for(&self, i: usize) -> f64 {
        match self.own_lag_mean.len() {
            0 => 0.0,
            1 => self.own_lag_mean[0],
            _ => self.own_lag_mean[i],
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.lags == 0 {
            return Err(Error::InvalidInput("lag order must be at least 1".into()));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.df(n) < n as f64 + 2.0 {
            return Err(Error::InvalidInput(format!(
                "prior degrees of freedom {} below n + 2 = {}",
                self.df(n),
                n + 2
            )));
        }
        if self.own_lag_mean.len() > 1 && self.own_lag_mean.len() != n {
            return Err(Error::Dimension(format!(
                "{} own-lag prior means for {n} variables",
                self.own_lag_mean.len()
            )));
        }
        if let Some(v) = &self.residual_variances {
            if v.len() != n || v.iter().any(|s| !(*s > 0.0)) {
                return Err(Error::InvalidInput("residual variances must be n positive values".into()));
            }
        }
        if !(self.intercept_variance > 0.0) {
            return Err(Error::InvalidInput("intercept prior variance must be positive".into()));
        }
        Ok(())
    }
}

/// Stacked regression `Y = X B + E` for a VAR(p).
#[derive(Debug, Clone, PartialEq)]
pub struct Regressors {
    /// `(T - p) x n`
    pub y: DMatrix<f64>,
    /// `(T - p) x (n p + intercept)`; row t is `[y_{t-1}', ..., y_{t-p}', 1]`.
    pub x: DMatrix<f64>,
    /// Date of each `Y` row.
    pub dates: Vec<QuarterIndex>,
}

/// Builds the lagged regressor layout. Every cell of the data window must be
/// observed.
pub fn build_regressors(data: &MacroDataset, spec: &BvarSpec) -> Result<Regressors> {
    let (t, n, p) = (data.t(), data.n(), spec.lags);
    if p == 0 {
        return Err(Error::InvalidInput("lag order must be at least 1".into()));
    }
    if t <= n * p + 1 {
        return Err(Error::InvalidInput(format!(
            "insufficient observations: T = {t} must exceed n p + 1 = {}",
            n * p + 1
        )));
    }
    let values = data.complete_values()?;
    Ok(regressors_from_matrix(&values, p, spec.intercept, &data.dates()[p..]))
}

/// Lagged layout for a complete `T x n` matrix; `dates` labels the `T - p`
/// regression rows.
pub fn regressors_from_matrix(
    values: &DMatrix<f64>,
    p: usize,
    intercept: bool,
    dates: &[QuarterIndex],
) -> Regressors {
    let (t, n) = values.shape();
    let rows = t - p;
    let k = n * p + usize::from(intercept);
    let y = values.rows(p, rows).into_owned();
    let mut x = DMatrix::zeros(rows, k);
    for r in 0..rows {
        for lag in 1..=p {
            for j in 0..n {
                x[(r, (lag - 1) * n + j)] = values[(p + r - lag, j)];
            }
        }
        if intercept {
            x[(r, n * p)] = 1.0;
        }
    }
    Regressors {
        y,
        x,
        dates: dates.to_vec(),
    }
}

/// Splits a stacked `k x n` coefficient matrix into lag matrices
/// `A_1..A_p` (each `n x n`, acting on column vectors) and the intercept.
pub fn split_coefficients(b: &DMatrix<f64>, n: usize, p: usize) -> (Vec<DMatrix<f64>>, Option<Vec<f64>>) {
    let lags = (0..p)
        .map(|l| b.rows(l * n, n).transpose())
        .collect();
    let intercept = (b.nrows() > n * p).then(|| b.row(n * p).iter().copied().collect());
    (lags, intercept)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(t: usize, n: usize) -> MacroDataset {
        let d0: QuarterIndex = "2000Q1".parse().unwrap();
        let cols = (0..n)
            .map(|j| (0..t).map(|i| Some((i * 10 + j) as f64)).collect())
            .collect();
        MacroDataset::from_columns(
            (0..t as i64).map(|k| d0.offset(k)).collect(),
            (0..n).map(|j| format!("v{j}")).collect(),
            cols,
        )
        .unwrap()
    }

    #[test]
    fn regressor_dimensions() {
        let r = build_regressors(&toy(10, 2), &BvarSpec::new(2, true, 0.0, 0.2)).unwrap();
        assert_eq!(r.y.shape(), (8, 2));
        assert_eq!(r.x.shape(), (8, 5));
        // row 0 corresponds to t = 2: [y_1, y_0, 1]
        assert_eq!(r.x.row(0).iter().copied().collect::<Vec<_>>(), vec![10.0, 11.0, 0.0, 1.0, 1.0]);
        assert_eq!(r.y[(0, 1)], 21.0);
        let r = build_regressors(&toy(10, 2), &BvarSpec::new(1, false, 0.0, 0.2)).unwrap();
        assert_eq!(r.x.ncols(), 2);
    }

    #[test]
    fn regressor_contract_errors() {
        assert!(build_regressors(&toy(5, 2), &BvarSpec::new(2, true, 0.0, 0.2)).is_err());
        let mut cols: Vec<Vec<Option<f64>>> = (0..2).map(|_| vec![Some(1.0); 10]).collect();
        cols[1][4] = None;
        let d0: QuarterIndex = "2000Q1".parse().unwrap();
        let ds = MacroDataset::from_columns(
            (0..10).map(|k| d0.offset(k)).collect(),
            vec!["a".into(), "b".into()],
            cols,
        )
        .unwrap();
        assert!(matches!(
            build_regressors(&ds, &BvarSpec::new(2, true, 0.0, 0.2)),
            Err(Error::Missing(_))
        ));
    }

    #[test]
    fn split_roundtrip() {
        let b = DMatrix::from_fn(5, 2, |i, j| (i * 2 + j) as f64);
        let (lags, c) = split_coefficients(&b, 2, 2);
        assert_eq!(lags[0][(1, 0)], b[(0, 1)]);
        assert_eq!(lags[1][(0, 1)], b[(3, 0)]);
        assert_eq!(c.unwrap(), vec![8.0, 9.0]);
    }
}
