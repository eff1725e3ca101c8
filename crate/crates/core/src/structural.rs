//! Impulse responses, credible bands, historical decompositions and
//! recursive generalized impulse responses.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::bvar::{regressors_from_matrix, split_coefficients, BvarPosterior};
use crate::error::{Error, Result};
use crate::identification::StructuralDrawSet;
use crate::linalg::{cholesky_lower, quantile_sorted};
use crate::timeseries::{MacroDataset, QuarterIndex};

pub const DEFAULT_HORIZON: usize = 20;
pub const DEFAULT_COVERAGE: f64 = 0.68;

/// `Θ_0 = L`, `Θ_h = Σ_{j=1..min(h,p)} A_j Θ_{h-j}`; element `(i, k)` of
/// `Θ_h` is the response of variable `i` to a one-standard-deviation shock
/// `k` after `h` periods.
pub fn irf(lags: &[DMatrix<f64>], impact: &DMatrix<f64>, horizon: usize) -> Result<Vec<DMatrix<f64>>> {
    let n = impact.nrows();
    if let Some(bad) = lags.iter().find(|a| a.shape() != (n, n)) {
        return Err(Error::Dimension(format!(
            "lag matrix is {}x{} but the impact matrix has {n} rows",
            bad.nrows(),
            bad.ncols()
        )));
    }
    let mut theta: Vec<DMatrix<f64>> = Vec::with_capacity(horizon + 1);
    theta.push(impact.clone());
    for h in 1..=horizon {
        let mut next = DMatrix::zeros(n, impact.ncols());
        for (j, a) in lags.iter().enumerate().take(h) {
            next += a * &theta[h - 1 - j];
        }
        theta.push(next);
    }
    Ok(theta)
}

/// Pointwise posterior summaries of impulse responses.
#[derive(Debug, Clone, PartialEq)]
pub struct IrfResult {
    pub variables: Vec<String>,
    pub shocks: Vec<String>,
    pub coverage: f64,
    /// One `variables x shocks` matrix per horizon.
    pub median: Vec<DMatrix<f64>>,
    pub lower: Vec<DMatrix<f64>>,
    pub upper: Vec<DMatrix<f64>>,
}

impl IrfResult {
    pub fn horizon(&self) -> usize {
        self.median.len() - 1
    }

    /// Tidy CSV: `variable,shock,horizon,median,lo,hi`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "variable,shock,horizon,median,lo,hi")?;
        for (i, var) in self.variables.iter().enumerate() {
            for (k, shock) in self.shocks.iter().enumerate() {
                for h in 0..self.median.len() {
                    writeln!(
                        w,
                        "{var},{shock},{h},{},{},{}",
                        self.median[h][(i, k)],
                        self.lower[h][(i, k)],
                        self.upper[h][(i, k)]
                    )?;
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }
}

/// Pointwise quantiles `(1 ± coverage)/2` and the median across draws, with
/// linear interpolation between order statistics.
pub fn summarize_draws(
    draws: &[Vec<DMatrix<f64>>],
    coverage: f64,
    variables: Vec<String>,
    shocks: Vec<String>,
) -> Result<IrfResult> {
    if draws.is_empty() {
        return Err(Error::InvalidInput("no draws to summarize".into()));
    }
    if !(0.0..1.0).contains(&coverage) {
        return Err(Error::InvalidInput(format!("coverage {coverage} outside [0, 1)")));
    }
    let (rows, cols) = draws[0][0].shape();
    let horizons = draws[0].len();
    let lo_p = (1.0 - coverage) / 2.0;
    let hi_p = (1.0 + coverage) / 2.0;
    let mut median = Vec::with_capacity(horizons);
    let mut lower = Vec::with_capacity(horizons);
    let mut upper = Vec::with_capacity(horizons);
    let mut column = vec![0.0; draws.len()];
    for h in 0..horizons {
        let mut m = DMatrix::zeros(rows, cols);
        let mut lo = DMatrix::zeros(rows, cols);
        let mut hi = DMatrix::zeros(rows, cols);
        for i in 0..rows {
            for k in 0..cols {
                for (c, d) in column.iter_mut().zip(draws) {
                    *c = d[h][(i, k)];
                }
                column.sort_by(f64::total_cmp);
                m[(i, k)] = quantile_sorted(&column, 0.5);
                lo[(i, k)] = quantile_sorted(&column, lo_p);
                hi[(i, k)] = quantile_sorted(&column, hi_p);
            }
        }
        median.push(m);
        lower.push(lo);
        upper.push(hi);
    }
    Ok(IrfResult { variables, shocks, coverage, median, lower, upper })
}

fn structural_irfs(posterior: &BvarPosterior, set: &StructuralDrawSet, horizon: usize) -> Result<Vec<Vec<DMatrix<f64>>>> {
    let (n, p) = (posterior.n(), posterior.lags());
    set.draws
        .par_iter()
        .map(|d| {
            let draw = posterior.draws.get(d.draw).ok_or_else(|| {
                Error::InvalidInput(format!("structural draw refers to missing posterior draw {}", d.draw))
            })?;
            let (lags, _) = split_coefficients(&draw.coefficients, n, p);
            irf(&lags, &d.impact, horizon)
        })
        .collect()
}

/// Pointwise bands of the structural impulse responses.
pub fn irf_bands(posterior: &BvarPosterior, set: &StructuralDrawSet, horizon: usize, coverage: f64) -> Result<IrfResult> {
    if set.draws.is_empty() {
        return Err(Error::InvalidInput("empty structural draw set".into()));
    }
    let draws = structural_irfs(posterior, set, horizon)?;
    summarize_draws(&draws, coverage, posterior.names.clone(), set.shocks.clone())
}

/// Index into `set.draws` of the draw whose responses are closest to the
/// pointwise median, each point scaled by its cross-draw standard deviation.
pub fn median_target_draw(posterior: &BvarPosterior, set: &StructuralDrawSet, horizon: usize) -> Result<usize> {
    let draws = structural_irfs(posterior, set, horizon)?;
    let bands = summarize_draws(&draws, 0.0, posterior.names.clone(), set.shocks.clone())?;
    let m = draws.len() as f64;
    let sd: Vec<DMatrix<f64>> = (0..=horizon)
        .map(|h| {
            let mean = draws.iter().fold(DMatrix::zeros(bands.median[h].nrows(), bands.median[h].ncols()), |acc, d| acc + &d[h]) / m;
            let var = draws.iter().fold(DMatrix::zeros(mean.nrows(), mean.ncols()), |acc, d| {
                acc + (&d[h] - &mean).map(|x| x * x)
            }) / m;
            var.map(|v| v.sqrt())
        })
        .collect();
    let distance = |d: &Vec<DMatrix<f64>>| -> f64 {
        (0..=horizon)
            .map(|h| {
                (&d[h] - &bands.median[h])
                    .zip_map(&sd[h], |x, s| if s > 0.0 { (x / s).powi(2) } else { 0.0 })
                    .sum()
            })
            .sum()
    };
    let (best, _) = draws
        .iter()
        .map(distance)
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    Ok(best)
}

/// Additive decomposition of each series into shock contributions and a
/// deterministic component, with parameters held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoricalDecomposition {
    /// Dates after the initial lags.
    pub dates: Vec<QuarterIndex>,
    pub variables: Vec<String>,
    pub shocks: Vec<String>,
    /// Per variable, a `T x shocks` matrix of contributions.
    pub contributions: Vec<DMatrix<f64>>,
    /// `T x variables`: dynamic forecast from the initial lags with zero shocks.
    pub deterministic: DMatrix<f64>,
    pub observed: DMatrix<f64>,
    /// Structural shocks `T x shocks`.
    pub shocks_series: DMatrix<f64>,
    /// Last date of the sample the parameters were estimated on.
    pub truncation: Option<QuarterIndex>,
}

impl HistoricalDecomposition {
    /// Largest absolute gap between the observed series and the sum of its
    /// components.
    pub fn additivity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, contrib) in self.contributions.iter().enumerate() {
            for t in 0..self.dates.len() {
                let total = self.deterministic[(t, i)] + contrib.row(t).sum();
                worst = worst.max((total - self.observed[(t, i)]).abs());
            }
        }
        worst
    }

    /// Tidy CSV: `variable,date,component,value`, components being each
    /// shock, `deterministic` and `observed`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "variable,date,component,value")?;
        for (i, var) in self.variables.iter().enumerate() {
            for (t, date) in self.dates.iter().enumerate() {
                for (k, shock) in self.shocks.iter().enumerate() {
                    writeln!(w, "{var},{date},{shock},{}", self.contributions[i][(t, k)])?;
                }
                writeln!(w, "{var},{date},deterministic,{}", self.deterministic[(t, i)])?;
                writeln!(w, "{var},{date},observed,{}", self.observed[(t, i)])?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }
}

/// Decomposes every observation of `data` after the first `p` using frozen
/// coefficients (`k x n`, lag blocks then intercept) and impact matrix.
pub fn historical_decomposition(
    coefficients: &DMatrix<f64>,
    impact: &DMatrix<f64>,
    lags: usize,
    intercept: bool,
    data: &MacroDataset,
    shocks: &[String],
) -> Result<HistoricalDecomposition> {
    let n = data.n();
    let p = lags;
    let k = n * p + usize::from(intercept);
    if coefficients.shape() != (k, n) || impact.shape() != (n, n) || shocks.len() != n {
        return Err(Error::Dimension(format!(
            "coefficients {}x{}, impact {}x{} and {} shock names do not fit {n} variables with {p} lags",
            coefficients.nrows(),
            coefficients.ncols(),
            impact.nrows(),
            impact.ncols(),
            shocks.len()
        )));
    }
    if data.t() <= p {
        return Err(Error::InvalidInput(format!("{} observations for {p} lags", data.t())));
    }
    let values = data.complete_values()?;
    let reg = regressors_from_matrix(&values, p, intercept, &data.dates()[p..]);
    let lu = impact.clone().lu();
    if lu.determinant().abs() < 1e-300 {
        return Err(Error::Singular("impact matrix".into()));
    }
    let resid = &reg.y - &reg.x * coefficients;
    let w = lu
        .solve(&resid.transpose())
        .ok_or_else(|| Error::Singular("impact matrix".into()))?
        .transpose();
    let (a, c) = split_coefficients(coefficients, n, p);
    let c = c.map(nalgebra::DVector::from_vec).unwrap_or_else(|| nalgebra::DVector::zeros(n));

    let total = values.nrows();
    let t_out = total - p;
    // deterministic path, seeded with the observed initial lags
    let mut det = values.rows(0, p).clone_owned().resize_vertically(total, 0.0);
    for t in p..total {
        let mut next = c.clone();
        for (j, aj) in a.iter().enumerate() {
            next += aj * det.row(t - 1 - j).transpose();
        }
        det.set_row(t, &next.transpose());
    }
    // contribution paths of each shock, zero over the initial lags
    let mut contributions = vec![DMatrix::zeros(t_out, n); n];
    for s in 0..n {
        let mut path = DMatrix::<f64>::zeros(total, n);
        for t in p..total {
            let mut next = impact.column(s) * w[(t - p, s)];
            for (j, aj) in a.iter().enumerate() {
                next += aj * path.row(t - 1 - j).transpose();
            }
            path.set_row(t, &next.transpose());
        }
        for (i, contrib) in contributions.iter_mut().enumerate() {
            for t in 0..t_out {
                contrib[(t, s)] = path[(p + t, i)];
            }
        }
    }
    Ok(HistoricalDecomposition {
        dates: reg.dates,
        variables: data.names().to_vec(),
        shocks: shocks.to_vec(),
        contributions,
        deterministic: det.rows(p, t_out).clone_owned(),
        observed: reg.y,
        shocks_series: w,
        truncation: None,
    })
}

/// Historical decomposition over all of `data` with the median-target
/// structural draw; `data` may run past the estimation sample.
pub fn historical_decomposition_median_target(
    posterior: &BvarPosterior,
    set: &StructuralDrawSet,
    data: &MacroDataset,
    horizon: usize,
) -> Result<HistoricalDecomposition> {
    let names: Vec<&str> = posterior.names.iter().map(String::as_str).collect();
    let data = data.select(&names)?;
    let pick = &set.draws[median_target_draw(posterior, set, horizon)?];
    let coefficients = &posterior.draws[pick.draw].coefficients;
    let mut hd = historical_decomposition(
        coefficients,
        &pick.impact,
        posterior.lags(),
        posterior.spec.intercept,
        &data,
        &set.shocks,
    )?;
    hd.truncation = Some(posterior.sample.1);
    Ok(hd)
}

/// Responses to a one-standard-deviation innovation in the first variable,
/// identified recursively by the lower Cholesky factor of each `Σ` draw.
pub fn girf_recursive(posterior: &BvarPosterior, horizon: usize, coverage: f64) -> Result<IrfResult> {
    if posterior.draws.is_empty() {
        return Err(Error::InvalidInput("posterior has no draws".into()));
    }
    let (n, p) = (posterior.n(), posterior.lags());
    let draws = posterior
        .draws
        .par_iter()
        .map(|d| {
            let chol = cholesky_lower(&d.sigma, "innovation covariance draw")?;
            let (lags, _) = split_coefficients(&d.coefficients, n, p);
            irf(&lags, &chol.columns(0, 1).clone_owned(), horizon)
        })
        .collect::<Result<Vec<_>>>()?;
    summarize_draws(&draws, coverage, posterior.names.clone(), vec![posterior.names[0].clone()])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn var1_closed_form() {
        let a = DMatrix::identity(3, 3) * 0.5;
        let theta = irf(&[a], &DMatrix::identity(3, 3), 8).unwrap();
        for (h, m) in theta.iter().enumerate() {
            assert_eq!(*m, DMatrix::identity(3, 3) * 0.5f64.powi(h as i32));
        }
    }

    #[test]
    fn no_propagation() {
        let l = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.3, 2.0]);
        let theta = irf(&[DMatrix::zeros(2, 2), DMatrix::zeros(2, 2)], &l, 5).unwrap();
        assert_eq!(theta[0], l);
        assert!(theta[1..].iter().all(|m| m.iter().all(|x| *x == 0.0)));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(irf(&[DMatrix::zeros(3, 3)], &DMatrix::identity(2, 2), 3).is_err());
    }

    fn constant(v: f64) -> Vec<DMatrix<f64>> {
        vec![DMatrix::from_element(1, 1, v); 3]
    }

    #[test]
    fn band_rules() {
        let names = || vec!["y".to_string()];
        let same = summarize_draws(&[constant(1.0), constant(1.0)], 0.68, names(), names()).unwrap();
        assert!(same.lower.iter().zip(&same.upper).all(|(l, u)| l == u));
        let two = summarize_draws(&[constant(1.0), constant(3.0)], 0.68, names(), names()).unwrap();
        assert_eq!(two.median[0][(0, 0)], 2.0);
        assert!((two.lower[0][(0, 0)] - (1.0 + 0.16 * 2.0)).abs() < 1e-12);
        let zero = summarize_draws(&[constant(1.0), constant(3.0), constant(7.0)], 0.0, names(), names()).unwrap();
        assert_eq!(zero.lower, zero.median);
        assert_eq!(zero.upper, zero.median);
        assert!(summarize_draws(&[], 0.68, names(), names()).is_err());
    }
}
