//! Local projections with smooth-transition state interaction, lag
//! augmentation, a decaying pandemic dummy and Newey–West covariance.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::RANK_TOL;
use crate::timeseries::QuarterIndex;

pub const DEFAULT_RHO_D: f64 = 0.5;

/// Bartlett bandwidth rule for the covariance at horizon `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bandwidth {
    /// `h + 1`.
    Auto,
    Fixed(usize),
    /// Heteroskedasticity-robust covariance without autocorrelation terms.
    Off,
}

impl Bandwidth {
    pub fn at(self, h: usize) -> usize {
        match self {
            Bandwidth::Auto => h + 1,
            Bandwidth::Fixed(l) => l,
            Bandwidth::Off => 0,
        }
    }
}

impl std::str::FromStr for Bandwidth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Bandwidth::Auto),
            "off" | "none" => Ok(Bandwidth::Off),
            n => n
                .parse()
                .map(Bandwidth::Fixed)
                .map_err(|_| Error::InvalidInput(format!("bandwidth {n:?} is not auto, off or an integer"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSpec {
    pub horizon: usize,
    /// Lags of the dependent variable.
    pub lags: usize,
    pub shock_lags: usize,
    pub bandwidth: Bandwidth,
    pub rho_d: f64,
    /// Include the pandemic dummy.
    pub covid_dummy: bool,
}

impl Default for LpSpec {
    fn default() -> Self {
        Self { horizon: 12, lags: 2, shock_lags: 2, bandwidth: Bandwidth::Auto, rho_d: DEFAULT_RHO_D, covid_dummy: true }
    }
}

impl LpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lags == 0 {
            return Err(Error::InvalidInput("lag augmentation needs at least one lag of the dependent variable".into()));
        }
        if !(self.rho_d > 0.0 && self.rho_d < 1.0) {
            return Err(Error::InvalidInput(format!("dummy decay {} outside (0, 1)", self.rho_d)));
        }
        Ok(())
    }
}

/// Estimates at one horizon. The low-state fields are `None` when the state
/// block drops out (a transition that never leaves one regime).
#[derive(Debug, Clone, PartialEq)]
pub struct LpHorizon {
    pub h: usize,
    pub beta_high: Option<f64>,
    pub se_high: Option<f64>,
    pub beta_low: Option<f64>,
    pub se_low: Option<f64>,
    pub t_eff: usize,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub horizons: Vec<LpHorizon>,
}

impl LpResult {
    /// CSV: `horizon,beta_high,se_high,beta_low,se_low,t_eff,r2`; dropped
    /// blocks are written as `NA`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let cell = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
        writeln!(w, "horizon,beta_high,se_high,beta_low,se_low,t_eff,r2")?;
        for r in &self.horizons {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.h,
                cell(r.beta_high),
                cell(r.se_high),
                cell(r.beta_low),
                cell(r.se_low),
                r.t_eff,
                r.r2
            )?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }
}

/// Pandemic dummy: 0 before 2020Q2, then `ρ_D^k` at `2020Q2 + k`.
pub fn covid_dummy(dates: &[QuarterIndex], rho_d: f64) -> Result<Vec<f64>> {
    if !(rho_d > 0.0 && rho_d < 1.0) {
        return Err(Error::InvalidInput(format!("dummy decay {rho_d} outside (0, 1)")));
    }
    let onset = QuarterIndex::new(2020, 2)?;
    Ok(dates
        .iter()
        .map(|d| {
            let k = d.quarters_since(onset);
            if k < 0 {
                0.0
            } else {
                rho_d.powi(k as i32)
            }
        })
        .collect())
}

/// `(X'X)⁻¹ S (X'X)⁻¹` with
/// `S = Σ_t u_t² x_t x_t' + Σ_{l=1..L} (1 - l/(L+1)) Σ_t u_t u_{t-l} (x_t x_{t-l}' + x_{t-l} x_t')`.
/// Bandwidth 0 gives the heteroskedasticity-robust covariance.
pub fn newey_west(x: &DMatrix<f64>, resid: &DVector<f64>, bandwidth: usize) -> Result<DMatrix<f64>> {
    let (t, k) = x.shape();
    if resid.len() != t {
        return Err(Error::Dimension(format!("{t} regressor rows but {} residuals", resid.len())));
    }
    if t <= k {
        return Err(Error::InvalidInput(format!("{t} observations for {k} regressors")));
    }
    let bread = (x.transpose() * x)
        .try_inverse()
        .ok_or_else(|| Error::Singular("X'X".into()))?;
    // rows scaled by residuals
    let g = DMatrix::from_fn(t, k, |i, j| x[(i, j)] * resid[i]);
    let mut meat = g.transpose() * &g;
    for l in 1..=bandwidth.min(t - 1) {
        let weight = 1.0 - l as f64 / (bandwidth as f64 + 1.0);
        let cross = g.rows(l, t - l).transpose() * g.rows(0, t - l);
        meat += (&cross + cross.transpose()) * weight;
    }
    let v = &bread * meat * &bread;
    Ok((&v + v.transpose()) * 0.5)
}

/// Heteroskedasticity-robust (kernel-free) covariance.
pub fn hc0_covariance(x: &DMatrix<f64>, resid: &DVector<f64>) -> Result<DMatrix<f64>> {
    newey_west(x, resid, 0)
}

/// Series entering a local projection, aligned on `dates`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpData {
    pub dates: Vec<QuarterIndex>,
    pub y: Vec<f64>,
    pub shock: Vec<f64>,
    /// Transition probability of the high state; `None` for a linear LP.
    pub z: Option<Vec<f64>>,
    /// Tight-labor probability interacted with the shock as a control.
    pub s: Option<Vec<f64>>,
}

impl LpData {
    fn validate(&self) -> Result<()> {
        let t = self.dates.len();
        let lens = [Some(self.y.len()), Some(self.shock.len()), self.z.as_ref().map(Vec::len), self.s.as_ref().map(Vec::len)];
        if lens.iter().flatten().any(|&l| l != t) {
            return Err(Error::Dimension("local projection series are not date-aligned".into()));
        }
        Ok(())
    }
}

struct Design {
    x: DMatrix<f64>,
    y: DVector<f64>,
    high: Option<usize>,
    low: Option<usize>,
}

fn build_design(data: &LpData, spec: &LpSpec, h: usize, dummy: &[f64]) -> Result<Design> {
    let t_total = data.dates.len();
    let needs_lag_state = data.z.is_some() || data.s.is_some();
    let start = spec.lags.max(spec.shock_lags).max(usize::from(needs_lag_state));
    if t_total <= start + h {
        return Err(Error::InvalidInput(format!(
            "window too short: {t_total} observations, {start} initial lags, horizon {h}"
        )));
    }
    let rows: Vec<usize> = (start..t_total - h).collect();

    let block = |t: usize| -> Vec<f64> {
        let mut b = Vec::with_capacity(2 + spec.shock_lags + spec.lags);
        b.push(data.shock[t]);
        b.extend((1..=spec.shock_lags).map(|l| data.shock[t - l]));
        b.extend((1..=spec.lags).map(|l| data.y[t - l]));
        if let Some(s) = &data.s {
            b.push(data.shock[t] * s[t - 1]);
        }
        b.push(1.0);
        b
    };
    let blocks: Vec<Vec<f64>> = rows.iter().map(|&t| block(t)).collect();
    let width = blocks[0].len();
    let states: Vec<Vec<f64>> = match &data.z {
        Some(z) => vec![rows.iter().map(|&t| z[t - 1]).collect(), rows.iter().map(|&t| 1.0 - z[t - 1]).collect()],
        None => vec![vec![1.0; rows.len()]],
    };
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for weights in &states {
        for c in 0..width {
            columns.push(blocks.iter().zip(weights).map(|(b, w)| w * b[c]).collect());
        }
    }
    if spec.covid_dummy {
        columns.push(rows.iter().map(|&t| dummy[t]).collect());
    }
    let y: Vec<f64> = rows.iter().map(|&t| data.y[t + h]).collect();
    if y.iter().chain(columns.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::Missing("non-finite value inside the regression window".into()));
    }

    // drop columns that are identically zero, remembering where the shock
    // coefficients land
    let mut kept = Vec::new();
    let mut high = None;
    let mut low = None;
    for (c, col) in columns.into_iter().enumerate() {
        if col.iter().all(|v| *v == 0.0) {
            continue;
        }
        if c == 0 {
            high = Some(kept.len());
        } else if data.z.is_some() && c == width {
            low = Some(kept.len());
        }
        kept.push(col);
    }
    let x = DMatrix::from_fn(rows.len(), kept.len(), |i, j| kept[j][i]);
    Ok(Design { x, y: DVector::from_vec(y), high, low })
}

fn estimate_horizon(data: &LpData, spec: &LpSpec, h: usize, dummy: &[f64]) -> Result<LpHorizon> {
    let d = build_design(data, spec, h, dummy)?;
    let (t, k) = d.x.shape();
    if t <= k {
        return Err(Error::InvalidInput(format!("horizon {h}: {t} observations for {k} regressors")));
    }
    let qr = d.x.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(j) = (0..k).find(|&j| r[(j, j)].abs() <= RANK_TOL * scale) {
        return Err(Error::Collinear(format!(
            "horizon {h}: design column {j} is a linear combination of the others (a constant transition makes the state blocks collinear)"
        )));
    }
    let beta = r
        .solve_upper_triangular(&(qr.q().transpose() * &d.y))
        .ok_or_else(|| Error::Singular("local projection design".into()))?;
    let resid = &d.y - &d.x * &beta;
    let cov = newey_west(&d.x, &resid, spec.bandwidth.at(h))?;
    let mean = d.y.mean();
    let sst: f64 = d.y.iter().map(|v| (v - mean).powi(2)).sum();
    let r2 = if sst > 0.0 { 1.0 - resid.norm_squared() / sst } else { 0.0 };
    let pick = |idx: Option<usize>| idx.map(|i| (beta[i], cov[(i, i)].max(0.0).sqrt()));
    let high = pick(d.high);
    let low = pick(d.low);
    Ok(LpHorizon {
        h,
        beta_high: high.map(|v| v.0),
        se_high: high.map(|v| v.1),
        beta_low: low.map(|v| v.0),
        se_low: low.map(|v| v.1),
        t_eff: t,
        r2,
    })
}

/// Regresses `y_{t+h}` on the block `[shock_t, shock lags, y lags,
/// shock_t·S_{t-1}, 1]` interacted with `Z_{t-1}` and `1 - Z_{t-1}`, plus the
/// pandemic dummy, for `h = 0..=horizon`.
pub fn lp_state_dependent(data: &LpData, spec: &LpSpec) -> Result<LpResult> {
    spec.validate()?;
    data.validate()?;
    let dummy = covid_dummy(&data.dates, spec.rho_d)?;
    let horizons = (0..=spec.horizon)
        .into_par_iter()
        .map(|h| estimate_horizon(data, spec, h, &dummy))
        .collect::<Result<Vec<_>>>()?;
    Ok(LpResult { horizons })
}

/// Single-state projection; the coefficient is reported as `beta_high`.
pub fn lp_linear(data: &LpData, spec: &LpSpec) -> Result<LpResult> {
    lp_state_dependent(&LpData { z: None, ..data.clone() }, spec)
}
