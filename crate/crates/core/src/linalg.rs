//! Small dense linear algebra and statistics helpers shared across modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Lower Cholesky factor `P` with `P P' = m`.
pub fn cholesky_lower(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.unpack())
        .ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))
}

/// `log det m` for a symmetric positive definite matrix.
pub fn log_det_pd(m: &DMatrix<f64>, what: &str) -> Result<f64> {
    let l = cholesky_lower(m, what)?;
    Ok(2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Inverse of a symmetric positive definite matrix, symmetrized.
pub fn inv_pd(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))?;
    Ok(symmetrize(&chol.inverse()))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Relative threshold on `|R_ii|` below which a design is treated as rank
/// deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Least squares `argmin ||y - X b||` via Householder QR. Fails with
/// [`Error::Collinear`] when `X` is numerically rank deficient.
pub fn ols(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, cols) = x.shape();
    if rows < cols {
        return Err(Error::InvalidInput(format!(
            "{rows} observations for {cols} regressors"
        )));
    }
    if y.nrows() != rows {
        return Err(Error::Dimension(format!(
            "design has {rows} rows, response has {}",
            y.nrows()
        )));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if let Some(j) = (0..cols).find(|&j| r[(j, j)].abs() <= RANK_TOL * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::Collinear(format!(
            "regressor {j} is a linear combination of earlier columns"
        )));
    }
    let qty = qr.q().transpose() * y;
    r.solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Singular("triangular solve in least squares".into()))
}

pub fn ols_vec(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let b = ols(x, &DMatrix::from_column_slice(y.len(), 1, y.as_slice()))?;
    Ok(b.column(0).into_owned())
}

/// Quantile of an ascending-sorted slice with linear interpolation between
/// order statistics (position `p * (n - 1)`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let p = p.clamp(0.0, 1.0);
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation with `n - 1` denominator; 0 for fewer than two
/// values.
pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Companion matrix of `y_t = sum_j A_j y_{t-j}`.
pub fn companion(lags: &[DMatrix<f64>]) -> DMatrix<f64> {
    let p = lags.len();
    let n = lags[0].nrows();
    let mut c = DMatrix::zeros(n * p, n * p);
    for (j, a) in lags.iter().enumerate() {
        c.view_mut((0, j * n), (n, n)).copy_from(a);
    }
    for i in n..n * p {
        c[(i, i - n)] = 1.0;
    }
    c
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let ma = mean(a);
    let mb = mean(b);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}
