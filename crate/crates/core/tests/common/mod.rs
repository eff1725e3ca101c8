#![allow(dead_code)]

use nalgebra::DMatrix;
use svarlab_core::timeseries::{MacroDataset, QuarterIndex};

pub fn quarterly(values: DMatrix<f64>, start: &str) -> MacroDataset {
    let d0: QuarterIndex = start.parse().unwrap();
    let n = values.ncols();
    MacroDataset::from_matrix(
        (0..values.nrows() as i64).map(|k| d0.offset(k)).collect(),
        (0..n).map(|j| format!("v{j}")).collect(),
        values,
    )
    .unwrap()
}

/// `log(sum(exp(x)))` over a slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
