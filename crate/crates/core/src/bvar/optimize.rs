use super::covid::covid_scales;
use super::likelihood::log_marginal_likelihood_scaled;
use super::prior::{ar_residual_variances, build_prior};
use super::{build_regressors, BvarSpec};
use crate::error::{Error, Result};
use crate::timeseries::MacroDataset;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximum of `f` on `[lo, hi]` to interval
/// width `tol`. Non-finite values count as `-inf`. The returned point is never
/// worse than either endpoint.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let eval = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    };
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c);
    let mut fd = eval(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d);
        }
    }
    let mid = 0.5 * (a + b);
    let mut best = (mid, eval(mid));
    for cand in [(c, fc), (d, fd), (lo, eval(lo)), (hi, eval(hi))] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    best
}

/// Nelder-Mead simplex minimization. Returns the best vertex and its value.
pub fn nelder_mead_min<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    step: f64,
    ftol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let dim = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = eval(&x);
        simplex.push((x, v));
    }
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        if worst.is_finite() && (worst - best).abs() <= ftol * (1.0 + best.abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|(x, _)| x[j]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            (0..dim)
                .map(|j| centroid[j] + t * (simplex[dim].0[j] - centroid[j]))
                .collect()
        };
        let xr = along(-1.0);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[dim].1 {
                let x = along(-0.5);
                let v = eval(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = eval(&x);
                (x, v)
            };
            if fc < simplex[dim].1.min(fr) {
                simplex[dim] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = (0..dim).map(|j| x_best[j] + 0.5 * (vertex.0[j] - x_best[j])).collect();
                    let v = eval(&x);
                    *vertex = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Golden-section tolerance on λ.
pub const LAMBDA_TOL: f64 = 1e-4;

/// Empirical-Bayes choice of the overall tightness: maximizes the log
/// marginal likelihood over `bounds`.
pub fn optimize_hyperparameters(data: &MacroDataset, spec: &BvarSpec, bounds: (f64, f64)) -> Result<f64> {
    let (lo, hi) = bounds;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidInput(format!("invalid lambda bounds [{lo}, {hi}]")));
    }
    let reg = build_regressors(data, spec)?;
    let mut base = spec.clone();
    if base.residual_variances.is_none() {
        base.residual_variances = Some(ar_residual_variances(&reg, spec.lags)?);
    }
    let scales = match &spec.covid {
        Some(profile) => covid_scales(profile, &reg.dates)?,
        None => vec![1.0; reg.y.nrows()],
    };
    let objective = |lambda: f64| -> f64 {
        build_prior(&base.with_lambda(lambda), &reg)
            .and_then(|prior| log_marginal_likelihood_scaled(&reg, &prior, &scales))
            .unwrap_or(f64::NEG_INFINITY)
    };
    let (best, value) = golden_section_max(objective, lo, hi, LAMBDA_TOL);
    if !value.is_finite() {
        return Err(Error::Numerical(
            "log marginal likelihood is non-finite across the whole lambda interval".into(),
        ));
    }
    Ok(best)
}
