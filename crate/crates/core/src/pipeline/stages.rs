//! Stage parameters and the work each stage performs. The pipeline and the
//! CLI subcommands both go through these functions.

use std::path::{Path, PathBuf};

use log::info;
use serde::Deserialize;

use crate::bundle::{load_drawset, load_posterior, save_drawset, save_posterior};
use crate::bvar::{estimate_covid_profile, optimize_hyperparameters, posterior_sample, BvarSpec, CovidProfile};
use crate::error::{Error, Result};
use crate::identification::{extract_shocks, identify, paper_restrictions, IdentifyOptions, RestrictionSet};
use crate::indexes::{
    diffusion_index, mean_forecast, state_variable, transition_prob, uncertainty_index, ExpectationScaling,
    RoundnessRule, DEFAULT_ETA, DEFAULT_MA_WEIGHTS,
};
use crate::lp::{lp_state_dependent, Bandwidth, LpData, LpSpec, DEFAULT_RHO_D};
use crate::simulate::{paper_like_dgp, simulate_with_scales};
use crate::structural::{girf_recursive, historical_decomposition_median_target, irf_bands};
use crate::timeseries::{load_firm_panel, load_macro, FirmSchema, MacroDataset, MacroSchema, QuarterIndex};

fn parse_date(raw: &Option<String>) -> Result<Option<QuarterIndex>> {
    raw.as_deref().map(str::parse).transpose()
}

/// Loads and inner-joins datasets on their common dates; earlier entries'
/// columns come first.
pub fn load_joined(paths: &[PathBuf]) -> Result<MacroDataset> {
    let (first, rest) = paths
        .split_first()
        .ok_or_else(|| Error::InvalidInput("no input datasets".into()))?;
    let mut data = load_macro(first, None)?;
    for path in rest {
        data = load_macro(path, None)?.prepend(&data)?;
    }
    Ok(data)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateParams {
    pub preset: String,
    pub t: usize,
    pub seed: Option<u64>,
    /// Multiplies the structural shocks of 2020Q2..2020Q4 (1 = no break).
    pub covid_factor: f64,
}

impl Default for SimulateParams {
    fn default() -> Self {
        Self { preset: "paper-like".into(), t: 300, seed: None, covid_factor: 1.0 }
    }
}

pub fn run_simulate(p: &SimulateParams, seed: u64, out: &Path, shocks_out: Option<&Path>) -> Result<()> {
    let mut dgp = match p.preset.as_str() {
        "paper-like" => paper_like_dgp(),
        other => return Err(Error::InvalidInput(format!("unknown simulation preset `{other}`"))),
    };
    dgp.t = p.t;
    dgp.seed = p.seed.unwrap_or(seed);
    let onset = QuarterIndex::new(2020, 2)?;
    let scales: Vec<f64> = dgp
        .dates()
        .iter()
        .map(|d| if (0..3).contains(&d.quarters_since(onset)) { p.covid_factor } else { 1.0 })
        .collect();
    let (data, shocks) = simulate_with_scales(&dgp, &scales)?;
    data.save(out)?;
    if let Some(path) = shocks_out {
        let names = crate::identification::PAPER_SHOCKS.iter().map(|s| s.to_string()).collect();
        MacroDataset::from_matrix(data.dates().to_vec(), names, shocks)?.save(path)?;
    }
    info!("simulated {} quarters of the {} DGP", p.t, p.preset);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IngestParams {
    pub data: String,
    pub schema: Option<String>,
    pub variables: Vec<String>,
    pub start: Option<String>,
    pub end: Option<String>,
}

impl Default for IngestParams {
    fn default() -> Self {
        Self { data: String::new(), schema: None, variables: Vec::new(), start: None, end: None }
    }
}

pub fn run_ingest(p: &IngestParams, data: &Path, schema: Option<&Path>, out: &Path) -> Result<()> {
    let schema = schema.map(MacroSchema::load).transpose()?;
    let mut ds = load_macro(data, schema.as_ref())?;
    if !p.variables.is_empty() {
        let names: Vec<&str> = p.variables.iter().map(String::as_str).collect();
        ds = ds.select(&names)?;
    }
    ds.window(parse_date(&p.start)?, parse_date(&p.end)?)?.save(out)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndexesParams {
    pub panel: String,
    pub schema: String,
    /// Factors to summarize; empty means every factor in the schema.
    pub factors: Vec<String>,
    pub uncertainty: bool,
    pub base: f64,
    pub tolerance: f64,
    pub p0: f64,
    /// `multiply` or `divide`.
    pub scaling: String,
    pub informed_only: bool,
}

impl Default for IndexesParams {
    fn default() -> Self {
        let rule = RoundnessRule::default();
        Self {
            panel: String::new(),
            schema: String::new(),
            factors: Vec::new(),
            uncertainty: true,
            base: rule.base,
            tolerance: rule.tolerance,
            p0: rule.p0,
            scaling: "multiply".into(),
            informed_only: false,
        }
    }
}

/// Writes `indexes.csv`-style wide data (one column per index, joinable on
/// dates) to `out`, and per-index band files into `bands_dir` when given.
pub fn run_indexes(p: &IndexesParams, panel: &Path, schema: &Path, out: &Path, bands_dir: Option<&Path>) -> Result<()> {
    let schema = FirmSchema::load(schema)?;
    let mut panel = load_firm_panel(panel, &schema)?;
    if p.informed_only {
        panel = panel.informed_only();
    }
    let factors = if p.factors.is_empty() { panel.factors().to_vec() } else { p.factors.clone() };
    let dates = panel.waves();
    let mut names = Vec::new();
    let mut columns: Vec<Vec<Option<f64>>> = Vec::new();
    let save_bands = |name: &str, series: &crate::indexes::IndexSeries| -> Result<()> {
        if let Some(dir) = bands_dir {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            series.save(&dir.join(format!("{name}.csv")))?;
        }
        Ok(())
    };
    for factor in &factors {
        let series = diffusion_index(&panel, factor)?;
        save_bands(&format!("diffusion_{factor}"), &series)?;
        names.push(format!("diffusion_{factor}"));
        columns.push(align(&dates, &series.dates, &series.value));
    }
    if p.uncertainty {
        let rule = RoundnessRule::new(p.base, p.tolerance, p.p0)?;
        let unc = uncertainty_index(&panel, &rule)?;
        save_bands("uncertainty", &unc)?;
        let expectations = mean_forecast(&panel);
        let scaling = match p.scaling.as_str() {
            "multiply" => ExpectationScaling::Multiply,
            "divide" => ExpectationScaling::Divide,
            other => return Err(Error::InvalidInput(format!("scaling `{other}` is not multiply or divide"))),
        };
        let state = state_variable(&unc, &expectations, DEFAULT_MA_WEIGHTS, scaling)?;
        names.extend(["uncertainty".to_string(), "mean_forecast".to_string(), "uncertainty_state".to_string()]);
        columns.push(align(&dates, &unc.dates, &unc.value));
        columns.push(expectations.values.clone());
        columns.push(state);
    }
    MacroDataset::from_columns(dates, names, columns)?.save(out)
}

fn align(dates: &[QuarterIndex], have: &[QuarterIndex], values: &[f64]) -> Vec<Option<f64>> {
    dates
        .iter()
        .map(|d| have.iter().position(|h| h == d).map(|i| values[i]))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateParams {
    /// Datasets inner-joined on dates, earlier ones' columns first.
    pub data: Vec<String>,
    pub variables: Vec<String>,
    pub start: Option<String>,
    pub end: Option<String>,
    pub lags: usize,
    pub delta: f64,
    pub lambda: f64,
    pub optimize_lambda: bool,
    pub lambda_bounds: [f64; 2],
    pub covid_correction: bool,
    pub covid_onset: String,
    pub draws: usize,
    pub seed: Option<u64>,
}

impl Default for EstimateParams {
    fn default() -> Self {
        Self {
            data: Vec::new(),
            variables: Vec::new(),
            start: None,
            end: None,
            lags: 4,
            delta: 0.0,
            lambda: 0.2,
            optimize_lambda: false,
            lambda_bounds: [0.01, 2.0],
            covid_correction: false,
            covid_onset: "2020Q2".into(),
            draws: 2000,
            seed: None,
        }
    }
}

pub fn run_estimate(p: &EstimateParams, data: &[PathBuf], seed: u64, out: &Path) -> Result<()> {
    let mut ds = load_joined(data)?;
    if !p.variables.is_empty() {
        let names: Vec<&str> = p.variables.iter().map(String::as_str).collect();
        ds = ds.select(&names)?;
    }
    let ds = ds.window(parse_date(&p.start)?, parse_date(&p.end)?)?;
    let mut spec = BvarSpec::new(p.lags, true, p.delta, p.lambda);
    let bounds = (p.lambda_bounds[0], p.lambda_bounds[1]);
    if p.optimize_lambda {
        spec.lambda = optimize_hyperparameters(&ds, &spec, bounds)?;
        info!("λ* = {}", spec.lambda);
    }
    if p.covid_correction {
        let onset: QuarterIndex = p.covid_onset.parse()?;
        let seeded = spec.with_covid(Some(CovidProfile { onset, ..CovidProfile::neutral() }));
        let profile = estimate_covid_profile(&ds, &seeded)?;
        info!("volatility profile {profile:?}");
        spec = spec.with_covid(Some(profile));
        if p.optimize_lambda {
            spec.lambda = optimize_hyperparameters(&ds, &spec, bounds)?;
            info!("λ* with volatility profile = {}", spec.lambda);
        }
    }
    let posterior = posterior_sample(&ds, &spec, p.draws, p.seed.unwrap_or(seed))?;
    save_posterior(&posterior, out)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentifyParams {
    pub posterior: String,
    /// `builtin:paper` or a restriction file.
    pub restrictions: String,
    pub accepted: usize,
    pub max_tries: usize,
    pub importance_weights: bool,
    pub seed: Option<u64>,
    /// Datasets over which to extract median shocks (optional).
    pub data: Vec<String>,
}

impl Default for IdentifyParams {
    fn default() -> Self {
        Self {
            posterior: String::new(),
            restrictions: "builtin:paper".into(),
            accepted: 1000,
            max_tries: 1000,
            importance_weights: false,
            seed: None,
            data: Vec::new(),
        }
    }
}

pub fn load_restrictions(spec: &str, resolve: impl Fn(&str) -> Result<PathBuf>) -> Result<RestrictionSet> {
    match spec {
        "builtin:paper" => Ok(paper_restrictions()),
        other => RestrictionSet::load(&resolve(other)?),
    }
}

pub fn run_identify(
    p: &IdentifyParams,
    posterior: &Path,
    restrictions: &RestrictionSet,
    data: &[PathBuf],
    seed: u64,
    out: &Path,
    shocks_out: Option<&Path>,
) -> Result<()> {
    let post = load_posterior(posterior)?;
    let opts = IdentifyOptions {
        target: p.accepted,
        max_tries: p.max_tries,
        seed: p.seed.unwrap_or(seed),
        importance_weights: p.importance_weights,
    };
    let set = identify(&post, restrictions, &opts)?;
    info!(
        "accepted {} of {} rotations ({:.2}%) over {} draws",
        set.accepted(),
        set.tried,
        100.0 * set.acceptance_rate(),
        set.visited
    );
    save_drawset(&set, out)?;
    if let Some(path) = shocks_out {
        let ds = load_joined(data)?;
        extract_shocks(&post, &set, &ds)?.save(path)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IrfParams {
    pub posterior: String,
    pub drawset: String,
    pub horizon: usize,
    pub coverage: f64,
}

impl Default for IrfParams {
    fn default() -> Self {
        Self { posterior: String::new(), drawset: String::new(), horizon: 20, coverage: 0.68 }
    }
}

pub fn run_irf(p: &IrfParams, posterior: &Path, drawset: &Path, out: &Path) -> Result<()> {
    let post = load_posterior(posterior)?;
    let set = load_drawset(drawset)?;
    irf_bands(&post, &set, p.horizon, p.coverage)?.save(out)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HdParams {
    pub posterior: String,
    pub drawset: String,
    pub data: Vec<String>,
    /// Horizon of the responses used to pick the median-target draw.
    pub horizon: usize,
}

impl Default for HdParams {
    fn default() -> Self {
        Self { posterior: String::new(), drawset: String::new(), data: Vec::new(), horizon: 20 }
    }
}

pub fn run_hd(p: &HdParams, posterior: &Path, drawset: &Path, data: &[PathBuf], out: &Path) -> Result<()> {
    let post = load_posterior(posterior)?;
    let set = load_drawset(drawset)?;
    let ds = load_joined(data)?;
    let hd = historical_decomposition_median_target(&post, &set, &ds, p.horizon)?;
    info!("decomposition additivity error {:e}", hd.additivity_error());
    hd.save(out)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GirfParams {
    pub posterior: String,
    pub horizon: usize,
    pub coverage: f64,
}

impl Default for GirfParams {
    fn default() -> Self {
        Self { posterior: String::new(), horizon: 20, coverage: 0.68 }
    }
}

pub fn run_girf(p: &GirfParams, posterior: &Path, out: &Path) -> Result<()> {
    girf_recursive(&load_posterior(posterior)?, p.horizon, p.coverage)?.save(out)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LpParams {
    pub data: Vec<String>,
    pub y: String,
    pub shock: String,
    pub z: Option<String>,
    pub s: Option<String>,
    /// Treat `z` (and `s`) as probabilities instead of state variables to
    /// pass through the transition function.
    pub z_prob: bool,
    pub s_prob: bool,
    pub eta: f64,
    pub horizons: usize,
    pub lags: usize,
    pub shock_lags: usize,
    /// `auto` (h + 1), `off`, or a fixed integer.
    pub nw: String,
    pub rho_d: f64,
    pub covid_dummy: bool,
}

impl Default for LpParams {
    fn default() -> Self {
        let spec = LpSpec::default();
        Self {
            data: Vec::new(),
            y: String::new(),
            shock: String::new(),
            z: None,
            s: None,
            z_prob: false,
            s_prob: false,
            eta: DEFAULT_ETA,
            horizons: spec.horizon,
            lags: spec.lags,
            shock_lags: spec.shock_lags,
            nw: "auto".into(),
            rho_d: DEFAULT_RHO_D,
            covid_dummy: true,
        }
    }
}

/// Selects the needed columns and trims leading and trailing quarters where
/// any of them is missing.
fn lp_inputs(p: &LpParams, ds: &MacroDataset) -> Result<LpData> {
    let mut cols = vec![p.y.as_str(), p.shock.as_str()];
    cols.extend(p.z.as_deref());
    cols.extend(p.s.as_deref());
    let ds = ds.select(&cols)?;
    let complete: Vec<bool> = (0..ds.t()).map(|i| (0..ds.n()).all(|j| ds.is_present(i, j))).collect();
    let first = complete
        .iter()
        .position(|c| *c)
        .ok_or_else(|| Error::Missing("no quarter has every local projection input".into()))?;
    let last = complete.iter().rposition(|c| *c).expect("first exists");
    let ds = ds.window(Some(ds.dates()[first]), Some(ds.dates()[last]))?;
    let col = |name: &str| -> Vec<f64> {
        ds.column(name).expect("selected").into_iter().map(|v| v.unwrap_or(f64::NAN)).collect()
    };
    let prob = |name: &Option<String>, already: bool| -> Result<Option<Vec<f64>>> {
        name.as_deref()
            .map(|n| {
                let v = col(n);
                if already {
                    Ok(v)
                } else {
                    transition_prob(&v, p.eta)
                }
            })
            .transpose()
    };
    Ok(LpData {
        dates: ds.dates().to_vec(),
        y: col(&p.y),
        shock: col(&p.shock),
        z: prob(&p.z, p.z_prob)?,
        s: prob(&p.s, p.s_prob)?,
    })
}

pub fn run_lp(p: &LpParams, data: &[PathBuf], out: &Path) -> Result<()> {
    let ds = load_joined(data)?;
    let inputs = lp_inputs(p, &ds)?;
    let spec = LpSpec {
        horizon: p.horizons,
        lags: p.lags,
        shock_lags: p.shock_lags,
        bandwidth: p.nw.parse::<Bandwidth>()?,
        rho_d: p.rho_d,
        covid_dummy: p.covid_dummy,
    };
    lp_state_dependent(&inputs, &spec)?.save(out)
}
