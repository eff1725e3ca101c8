use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;

use super::restrictions::RestrictionSet;
use super::rotation::{log_importance_weight, rotation_from_chol};
use crate::bvar::{regressors_from_matrix, BvarPosterior};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_lower, median};
use crate::seeding::{derive_seed, substream};
use crate::timeseries::MacroDataset;

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifyOptions {
    /// Number of accepted rotations wanted.
    pub target: usize,
    /// Rotation attempts per reduced-form draw.
    pub max_tries: usize,
    pub seed: u64,
    /// Reweight accepted draws for the zero-restriction volume element and
    /// resample.
    pub importance_weights: bool,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        Self { target: 1000, max_tries: 1000, seed: 7, importance_weights: false }
    }
}

/// An accepted rotation of reduced-form draw `draw`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralDraw {
    /// Index into the posterior's draws.
    pub draw: usize,
    pub rotation: DMatrix<f64>,
    /// `chol(Σ)·Q`, columns in shock order.
    pub impact: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuralDrawSet {
    pub draws: Vec<StructuralDraw>,
    pub shocks: Vec<String>,
    pub names: Vec<String>,
    pub restrictions: RestrictionSet,
    /// Rotation attempts made.
    pub tried: usize,
    /// Reduced-form draws visited.
    pub visited: usize,
    pub seed: u64,
    /// Log importance weights of the accepted draws before resampling.
    pub log_weights: Option<Vec<f64>>,
}

impl StructuralDrawSet {
    pub fn accepted(&self) -> usize {
        self.draws.len()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.tried == 0 {
            0.0
        } else {
            self.draws.len() as f64 / self.tried as f64
        }
    }

    /// Kish effective sample size of the importance weights.
    pub fn effective_sample_size(&self) -> Option<f64> {
        let logs = self.log_weights.as_ref()?;
        let w = normalized_weights(logs);
        Some(1.0 / w.iter().map(|x| x * x).sum::<f64>())
    }
}

fn normalized_weights(logs: &[f64]) -> Vec<f64> {
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

struct Attempt {
    tries: usize,
    rotation: Option<DMatrix<f64>>,
}

fn attempt(posterior: &BvarPosterior, restrictions: &RestrictionSet, index: usize, opts: &IdentifyOptions) -> Result<Attempt> {
    let draw = &posterior.draws[index];
    let chol = cholesky_lower(&draw.sigma, "innovation covariance draw")?;
    let mut rng = substream(opts.seed, posterior.first_draw + index as u64);
    for tries in 1..=opts.max_tries {
        if let Some(q) = rotation_from_chol(&chol, restrictions, &mut rng) {
            return Ok(Attempt { tries, rotation: Some(q) });
        }
    }
    Ok(Attempt { tries: opts.max_tries, rotation: None })
}

/// Visits reduced-form draws in order, keeping the first accepted rotation of
/// each, until `opts.target` are accepted or the draws run out. Draws are
/// processed in parallel; the result depends only on the seed.
pub fn identify(
    posterior: &BvarPosterior,
    restrictions: &RestrictionSet,
    opts: &IdentifyOptions,
) -> Result<StructuralDrawSet> {
    let n = posterior.n();
    if restrictions.n() != n {
        return Err(Error::Dimension(format!(
            "restrictions are for {} variables, posterior has {n}",
            restrictions.n()
        )));
    }
    restrictions.validate()?;
    if posterior.draws.is_empty() {
        return Err(Error::InvalidInput("posterior has no draws".into()));
    }
    let mut set = StructuralDrawSet {
        draws: Vec::new(),
        shocks: restrictions.shocks().to_vec(),
        names: posterior.names.clone(),
        restrictions: restrictions.clone(),
        tried: 0,
        visited: 0,
        seed: opts.seed,
        log_weights: None,
    };
    if opts.target == 0 {
        return Ok(set);
    }
    if opts.max_tries == 0 {
        return Err(Error::InvalidInput("max tries per draw must be positive".into()));
    }

    let chunk = (rayon::current_num_threads() * 8).max(16);
    let total = posterior.draws.len();
    let mut start = 0;
    'outer: while start < total {
        let end = (start + chunk).min(total);
        let attempts = (start..end)
            .into_par_iter()
            .map(|i| attempt(posterior, restrictions, i, opts))
            .collect::<Result<Vec<_>>>()?;
        for (offset, a) in attempts.into_iter().enumerate() {
            let index = start + offset;
            set.tried += a.tries;
            set.visited += 1;
            if let Some(q) = a.rotation {
                let chol = cholesky_lower(&posterior.draws[index].sigma, "innovation covariance draw")?;
                set.draws.push(StructuralDraw { draw: index, impact: chol * &q, rotation: q });
                if set.draws.len() == opts.target {
                    break 'outer;
                }
            }
        }
        start = end;
    }

    if set.draws.is_empty() {
        return Err(Error::Identification(format!(
            "no rotation satisfied the restrictions: {} attempts over {} reduced-form draws ({} tries each)",
            set.tried, set.visited, opts.max_tries
        )));
    }
    if opts.importance_weights {
        let logs = set
            .draws
            .par_iter()
            .map(|d| {
                let draw = &posterior.draws[d.draw];
                log_importance_weight(&draw.coefficients, &draw.sigma, &d.rotation, restrictions)
            })
            .collect::<Result<Vec<_>>>()?;
        let weights = normalized_weights(&logs);
        let picker = WeightedIndex::new(&weights)
            .map_err(|e| Error::Numerical(format!("importance weights: {e}")))?;
        let mut rng = substream(derive_seed(opts.seed, "importance-resampling"), 0);
        let resampled = (0..set.draws.len()).map(|_| set.draws[picker.sample(&mut rng)].clone()).collect();
        set.draws = resampled;
        set.log_weights = Some(logs);
    }
    Ok(set)
}

/// Posterior-median structural shocks `w_t = L⁻¹ε_t` over the whole span of
/// `data`, which may extend past the estimation sample. Columns are named
/// after the shocks.
pub fn extract_shocks(posterior: &BvarPosterior, set: &StructuralDrawSet, data: &MacroDataset) -> Result<MacroDataset> {
    if set.draws.is_empty() {
        return Err(Error::InvalidInput("no structural draws".into()));
    }
    let names: Vec<&str> = posterior.names.iter().map(String::as_str).collect();
    let data = data.select(&names)?;
    let p = posterior.lags();
    if data.t() <= p {
        return Err(Error::InvalidInput(format!("{} observations for {p} lags", data.t())));
    }
    let values = data.complete_values()?;
    let reg = regressors_from_matrix(&values, p, posterior.spec.intercept, &data.dates()[p..]);
    let shocks = set
        .draws
        .par_iter()
        .map(|d| {
            let b = &posterior.draws[d.draw].coefficients;
            let resid = &reg.y - &reg.x * b;
            let lu = d.impact.clone().lu();
            if lu.determinant().abs() < 1e-300 {
                return Err(Error::Singular("impact matrix".into()));
            }
            let w = lu
                .solve(&resid.transpose())
                .ok_or_else(|| Error::Singular("impact matrix".into()))?;
            Ok(w.transpose())
        })
        .collect::<Result<Vec<DMatrix<f64>>>>()?;
    let (t, n) = shocks[0].shape();
    let mut column = vec![0.0; shocks.len()];
    let med = DMatrix::from_fn(t, n, |i, j| {
        for (c, s) in column.iter_mut().zip(&shocks) {
            *c = s[(i, j)];
        }
        median(&column)
    });
    MacroDataset::from_matrix(reg.dates.clone(), set.shocks.clone(), med)
}
