use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::covid::covid_scales;
use super::likelihood::{conjugate_posterior, rescale_rows};
use super::prior::build_prior;
use super::{build_regressors, BvarSpec};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_lower, inv_pd, symmetrize};
use crate::seeding::substream;
use crate::timeseries::{MacroDataset, QuarterIndex};

/// One draw of the reduced-form parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraw {
    /// Stacked coefficients `k x n` (lag blocks then intercept row).
    pub coefficients: DMatrix<f64>,
    /// Innovation covariance `n x n`.
    pub sigma: DMatrix<f64>,
}

/// Posterior draws plus the metadata needed to reproduce them.
#[derive(Debug, Clone, PartialEq)]
pub struct BvarPosterior {
    pub draws: Vec<PosteriorDraw>,
    pub spec: BvarSpec,
    pub names: Vec<String>,
    /// First and last date of the data window (including initial lags).
    pub sample: (QuarterIndex, QuarterIndex),
    pub data_hash: String,
    pub seed: u64,
    /// Substream index of `draws[0]`.
    pub first_draw: u64,
    pub log_ml: f64,
}

impl BvarPosterior {
    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn lags(&self) -> usize {
        self.spec.lags
    }
}

/// SHA-256 over dates, names and present values of a dataset.
pub fn data_hash(data: &MacroDataset) -> String {
    let mut h = Sha256::new();
    for d in data.dates() {
        h.update(d.to_string().as_bytes());
    }
    for name in data.names() {
        h.update(name.as_bytes());
        h.update([0u8]);
    }
    for i in 0..data.t() {
        for j in 0..data.n() {
            match data.get(i, j) {
                Some(v) => h.update(v.to_le_bytes()),
                None => h.update(b"NA"),
            }
        }
    }
    hex::encode(h.finalize())
}

/// Draws `Σ ~ IW(scale, df)` through the Bartlett decomposition of the
/// Wishart precision: with `C C' = scale⁻¹` and lower-triangular `A`
/// (`A_ii² ~ χ²(df - i)`, `A_ij ~ N(0,1)` below the diagonal),
/// `Σ = (C A)⁻ᵀ (C A)⁻¹`.
pub fn draw_inverse_wishart<R: Rng + ?Sized>(scale: &DMatrix<f64>, df: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    let n = scale.nrows();
    if df <= n as f64 - 1.0 {
        return Err(Error::InvalidInput(format!("inverse-Wishart df {df} too small for n = {n}")));
    }
    let precision = inv_pd(scale, "inverse-Wishart scale")?;
    let c = cholesky_lower(&precision, "inverse-Wishart precision")?;
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let chi = ChiSquared::new(df - i as f64)
            .map_err(|e| Error::Numerical(format!("chi-squared: {e}")))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample(StandardNormal);
        }
    }
    let m = c * a;
    let m_inv = m
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::Singular("Bartlett factor".into()))?;
    Ok(symmetrize(&(m_inv.transpose() * m_inv)))
}

struct SamplerState {
    mean: DMatrix<f64>,
    coef_chol: DMatrix<f64>,
    scale: DMatrix<f64>,
    df: f64,
    log_ml: f64,
}

fn prepare(data: &MacroDataset, spec: &BvarSpec) -> Result<SamplerState> {
    let reg = build_regressors(data, spec)?;
    let prior = build_prior(spec, &reg)?;
    let scales = match &spec.covid {
        Some(profile) => covid_scales(profile, &reg.dates)?,
        None => vec![1.0; reg.y.nrows()],
    };
    let (y, x) = rescale_rows(&reg, &scales);
    let post = conjugate_posterior(&prior, &y, &x)?;
    let coef_chol = cholesky_lower(&post.coef_cov, "posterior coefficient covariance")?;
    cholesky_lower(&post.scale, "posterior inverse-Wishart scale")?;
    let n = reg.y.ncols() as f64;
    Ok(SamplerState {
        mean: post.mean,
        coef_chol,
        scale: post.scale,
        df: post.df,
        log_ml: post.log_ml - n * scales.iter().map(|s| s.ln()).sum::<f64>(),
    })
}

fn draw_one(state: &SamplerState, seed: u64, index: u64) -> Result<PosteriorDraw> {
    let mut rng = substream(seed, index);
    let sigma = draw_inverse_wishart(&state.scale, state.df, &mut rng)?;
    let sigma_chol = cholesky_lower(&sigma, "inverse-Wishart draw")?;
    let (k, n) = state.mean.shape();
    let z = DMatrix::from_fn(k, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let coefficients = &state.mean + &state.coef_chol * z * sigma_chol.transpose();
    Ok(PosteriorDraw { coefficients, sigma })
}

/// Independent draws from the conjugate posterior: `Σ | Y` inverse-Wishart,
/// `B | Σ, Y` matrix normal. Rows are rescaled by the pandemic profile when
/// `spec.covid` is set. Draw `i` uses substream `i` of `seed`.
pub fn posterior_sample(data: &MacroDataset, spec: &BvarSpec, n_draws: usize, seed: u64) -> Result<BvarPosterior> {
    posterior_sample_range(data, spec, 0, n_draws, seed)
}

/// Draws `start..start + count` of the stream defined by `seed`; two calls
/// over adjacent ranges concatenate to one call over the union.
pub fn posterior_sample_range(
    data: &MacroDataset,
    spec: &BvarSpec,
    start: u64,
    count: usize,
    seed: u64,
) -> Result<BvarPosterior> {
    if count == 0 {
        return Err(Error::InvalidInput("number of draws must be at least 1".into()));
    }
    let state = prepare(data, spec)?;
    let draws = (start..start + count as u64)
        .into_par_iter()
        .map(|i| draw_one(&state, seed, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(BvarPosterior {
        draws,
        spec: spec.clone(),
        names: data.names().to_vec(),
        sample: (data.dates()[0], *data.dates().last().expect("non-empty")),
        data_hash: data_hash(data),
        seed,
        first_draw: start,
        log_ml: state.log_ml,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::substream;

    #[test]
    fn inverse_wishart_mean() {
        // E[Σ] = S / (df - n - 1)
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let df = 12.0;
        let m = 20_000;
        let mut acc = DMatrix::zeros(2, 2);
        for i in 0..m {
            let mut rng = substream(99, i);
            acc += draw_inverse_wishart(&s, df, &mut rng).unwrap();
        }
        acc /= m as f64;
        let expected = &s / (df - 3.0);
        for (a, e) in acc.iter().zip(expected.iter()) {
            assert!((a - e).abs() < 0.03 * expected.max().abs(), "{a} vs {e}");
        }
    }
}
