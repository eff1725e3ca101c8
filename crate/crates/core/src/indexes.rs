//! Survey aggregates: diffusion indexes, the round-number inflation
//! uncertainty index, the smoothed state variable and the logistic
//! transition function used to weight regimes in the local projections.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{mean, median, sample_sd};
use crate::timeseries::{FirmPanel, FirmRecord, QuarterIndex, QuarterlySeries};

/// Two-sided 95% normal critical value.
pub const Z95: f64 = 1.96;

/// Per-wave index values with normal-approximation 95% bands.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSeries {
    pub dates: Vec<QuarterIndex>,
    pub value: Vec<f64>,
    /// `None` where fewer than two responses back the wave.
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
    pub sample_size: Vec<usize>,
}

impl IndexSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// CSV with columns `date,value,lo,hi,n`; missing bands are empty cells.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "date,value,lo,hi,n")?;
        let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                self.dates[i],
                self.value[i],
                cell(self.lower[i]),
                cell(self.upper[i]),
                self.sample_size[i]
            )?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

/// Mean signed intensity per wave for one factor, with band
/// `mean ± 1.96 sd / sqrt(N)`.
pub fn diffusion_index(panel: &FirmPanel, factor: &str) -> Result<IndexSeries> {
    let k = panel
        .factor_index(factor)
        .ok_or_else(|| Error::InvalidInput(format!("unknown factor `{factor}`")))?;
    let mut out = empty_series();
    for (wave, records) in panel.by_wave() {
        let xs: Vec<f64> = records
            .iter()
            .filter_map(|r| r.intensities[k])
            .map(f64::from)
            .collect();
        if xs.is_empty() {
            return Err(Error::InvalidInput(format!(
                "wave {wave} has no responses for factor `{factor}`"
            )));
        }
        let m = mean(&xs);
        let n = xs.len();
        let (lo, hi) = if n >= 2 {
            let half = Z95 * sample_sd(&xs) / (n as f64).sqrt();
            (Some(m - half), Some(m + half))
        } else {
            (None, None)
        };
        out.dates.push(wave);
        out.value.push(m);
        out.lower.push(lo);
        out.upper.push(hi);
        out.sample_size.push(n);
    }
    Ok(out)
}

/// Classifies point forecasts as round or not.
///
/// A forecast is round when it lies within `tolerance` of an integer multiple
/// of `base`. `p0` is the round share expected among respondents who are not
/// uncertain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundnessRule {
    pub base: f64,
    pub tolerance: f64,
    pub p0: f64,
}

impl Default for RoundnessRule {
    /// Base 0.5pp; certain respondents reporting to one decimal place land on
    /// a multiple of 0.5 one time in five.
    fn default() -> Self {
        Self::new(0.5, 1e-9, 0.1 / 0.5).expect("valid default")
    }
}

impl RoundnessRule {
    pub fn new(base: f64, tolerance: f64, p0: f64) -> Result<Self> {
        if !(base > 0.0 && base.is_finite()) {
            return Err(Error::InvalidInput(format!("roundness base must be > 0, got {base}")));
        }
        if !(tolerance >= 0.0) {
            return Err(Error::InvalidInput(format!("negative tolerance {tolerance}")));
        }
        if !(0.0..1.0).contains(&p0) {
            return Err(Error::InvalidInput(format!("p0 must lie in [0, 1), got {p0}")));
        }
        Ok(Self { base, tolerance, p0 })
    }

    pub fn is_round(&self, forecast: f64) -> bool {
        (forecast - self.base * (forecast / self.base).round()).abs() <= self.tolerance
    }

    /// Affine map from round share to the uncertain share, clamped to [0, 1].
    pub fn index_from_share(&self, share: f64) -> f64 {
        ((share - self.p0) / (1.0 - self.p0)).clamp(0.0, 1.0)
    }

    /// Same map evaluated on counts, `(r - p0 N) / (N - p0 N)`, which is exact
    /// whenever `p0 N` is.
    pub fn index_from_counts(&self, rounds: usize, n: usize) -> f64 {
        let expected = self.p0 * n as f64;
        ((rounds as f64 - expected) / (n as f64 - expected)).clamp(0.0, 1.0)
    }
}

/// Share of likely-uncertain respondents per wave from the prevalence of
/// round forecasts. Bands come from the binomial normal approximation on
/// the round share pushed through the same clamped affine map.
pub fn uncertainty_index(panel: &FirmPanel, rule: &RoundnessRule) -> Result<IndexSeries> {
    RoundnessRule::new(rule.base, rule.tolerance, rule.p0)?;
    let mut out = empty_series();
    for (wave, records) in panel.by_wave() {
        let forecasts: Vec<f64> = records.iter().filter_map(|r| r.forecast).collect();
        if forecasts.is_empty() {
            return Err(Error::InvalidInput(format!("wave {wave} has no point forecasts")));
        }
        let n = forecasts.len();
        let rounds = forecasts.iter().filter(|f| rule.is_round(**f)).count();
        let share = rounds as f64 / n as f64;
        let (lo, hi) = if n >= 2 {
            let half = Z95 * (share * (1.0 - share) / n as f64).sqrt();
            (
                Some(rule.index_from_share(share - half)),
                Some(rule.index_from_share(share + half)),
            )
        } else {
            (None, None)
        };
        out.dates.push(wave);
        out.value.push(rule.index_from_counts(rounds, n));
        out.lower.push(lo);
        out.upper.push(hi);
        out.sample_size.push(n);
    }
    Ok(out)
}

/// Cross-firm mean point forecast per wave.
pub fn mean_forecast(panel: &FirmPanel) -> QuarterlySeries {
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for (wave, records) in panel.by_wave() {
        let f: Vec<f64> = records.iter().filter_map(|r: &FirmRecord| r.forecast).collect();
        dates.push(wave);
        values.push((!f.is_empty()).then(|| mean(&f)));
    }
    QuarterlySeries { dates, values }
}

/// How the uncertainty index is combined with mean expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExpectationScaling {
    #[default]
    Multiply,
    Divide,
}

/// Default backward-looking moving-average weights, most recent first.
pub const DEFAULT_MA_WEIGHTS: [f64; 4] = [0.4, 0.3, 0.2, 0.1];

/// Scales the uncertainty index by mean expectations and smooths it with a
/// four-period backward-looking weighted moving average. The first three
/// entries (and any window touching a missing input) are absent.
pub fn state_variable(
    uncertainty: &IndexSeries,
    expectations: &QuarterlySeries,
    weights: [f64; 4],
    scaling: ExpectationScaling,
) -> Result<Vec<Option<f64>>> {
    if uncertainty.dates != expectations.dates {
        return Err(Error::InvalidInput(
            "uncertainty index and expectations are not aligned on dates".into(),
        ));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::InvalidInput(format!("negative moving-average weight {w}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "moving-average weights sum to {total}, expected 1"
        )));
    }
    let scaled: Vec<Option<f64>> = uncertainty
        .value
        .iter()
        .zip(&expectations.values)
        .map(|(u, e)| match (scaling, e) {
            (_, None) => Ok(None),
            (ExpectationScaling::Multiply, Some(e)) => Ok(Some(u * e)),
            (ExpectationScaling::Divide, Some(e)) if *e > 0.0 => Ok(Some(u / e)),
            (ExpectationScaling::Divide, Some(e)) => Err(Error::InvalidInput(format!(
                "mean expectation {e} must be positive when dividing"
            ))),
        })
        .collect::<Result<_>>()?;
    Ok((0..scaled.len())
        .map(|t| {
            if t < 3 {
                return None;
            }
            let mut acc = 0.0;
            for (k, w) in weights.iter().enumerate() {
                acc += w * scaled[t - k]?;
            }
            Some(acc)
        })
        .collect())
}

/// Numerically symmetric logistic: `logistic(x) + logistic(-x) == 1` up to
/// one rounding.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Logistic transition `Z = logistic(eta * (x - center) / scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub center: f64,
    pub scale: f64,
    pub eta: f64,
}

/// Steepness used for the uncertainty regime weights.
pub const DEFAULT_ETA: f64 = 5.0;

impl Transition {
    /// Center at the median and scale by the sample standard deviation of
    /// the state variable.
    pub fn fit(state: &[f64], eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidInput(format!("eta must be positive, got {eta}")));
        }
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("state variable contains non-finite values".into()));
        }
        let scale = sample_sd(state);
        if !(scale > 0.0) {
            return Err(Error::InvalidInput(
                "state variable has zero dispersion".into(),
            ));
        }
        Ok(Self {
            center: median(state),
            scale,
            eta,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        logistic(self.eta * (x - self.center) / self.scale)
    }
}

/// Regime probabilities for every observation of the state variable.
pub fn transition_prob(state: &[f64], eta: f64) -> Result<Vec<f64>> {
    let tr = Transition::fit(state, eta)?;
    Ok(state.iter().map(|x| tr.eval(*x)).collect())
}

fn empty_series() -> IndexSeries {
    IndexSeries {
        dates: Vec::new(),
        value: Vec::new(),
        lower: Vec::new(),
        upper: Vec::new(),
        sample_size: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(q: &str) -> QuarterIndex {
        q.parse().unwrap()
    }

    fn panel(waves: &[(&str, Vec<Option<i8>>, Vec<Option<f64>>)]) -> FirmPanel {
        let mut records = Vec::new();
        for (w, codes, forecasts) in waves {
            let n = codes.len().max(forecasts.len());
            for i in 0..n {
                records.push(FirmRecord {
                    wave: wave(w),
                    firm: format!("f{i}"),
                    intensities: vec![codes.get(i).copied().flatten()],
                    forecast: forecasts.get(i).copied().flatten(),
                    informed: true,
                });
            }
        }
        FirmPanel::new(vec!["raw".into()], records).unwrap()
    }

    #[test]
    fn diffusion_degenerate_and_symmetric() {
        let p = panel(&[
            ("2021Q1", vec![Some(3); 4], vec![]),
            ("2021Q2", vec![Some(3), Some(-3), Some(3), Some(-3)], vec![]),
        ]);
        let idx = diffusion_index(&p, "raw").unwrap();
        assert_eq!(idx.value, vec![3.0, 0.0]);
        assert_eq!(idx.lower[0], Some(3.0));
        assert_eq!(idx.upper[0], Some(3.0));
        assert!(diffusion_index(&p, "labor").is_err());
    }

    #[test]
    fn diffusion_hand_oracle() {
        let p = panel(&[("2021Q1", vec![Some(1), Some(2), Some(3)], vec![])]);
        let idx = diffusion_index(&p, "raw").unwrap();
        let half = 1.96 / 3f64.sqrt();
        assert_eq!(idx.value[0], 2.0);
        assert!((idx.lower[0].unwrap() - (2.0 - half)).abs() < 1e-12);
        assert!((idx.upper[0].unwrap() - (2.0 + half)).abs() < 1e-12);
        assert_eq!(idx.sample_size[0], 3);
    }

    #[test]
    fn single_response_has_no_band_and_empty_wave_errors() {
        let p = panel(&[("2021Q1", vec![Some(2)], vec![])]);
        let idx = diffusion_index(&p, "raw").unwrap();
        assert_eq!(idx.lower[0], None);
        let p = panel(&[("2021Q1", vec![None, None], vec![Some(1.0), Some(2.0)])]);
        assert!(diffusion_index(&p, "raw").is_err());
    }

    #[test]
    fn uncertainty_bounds_and_affine() {
        let rule = RoundnessRule::new(0.5, 1e-9, 0.2).unwrap();
        let all_round = panel(&[("2021Q1", vec![], vec![Some(1.0), Some(2.5), Some(0.5)])]);
        assert_eq!(uncertainty_index(&all_round, &rule).unwrap().value, vec![1.0]);
        let none_round = panel(&[("2021Q1", vec![], vec![Some(1.3), Some(2.1), Some(0.7)])]);
        assert_eq!(uncertainty_index(&none_round, &rule).unwrap().value, vec![0.0]);
        let forecasts = [1.0, 2.0, 1.5, 1.2, 0.7].map(Some).to_vec();
        let mixed = panel(&[("2021Q1", vec![], forecasts)]);
        let idx = uncertainty_index(&mixed, &rule).unwrap();
        assert_eq!(idx.value, vec![0.5]);
        assert!(idx.lower[0].unwrap() <= 0.5 && idx.upper[0].unwrap() >= 0.5);
    }

    #[test]
    fn roundness_rule_contract() {
        assert!(RoundnessRule::new(0.5, 1e-9, 1.0).is_err());
        assert!(RoundnessRule::new(0.0, 1e-9, 0.1).is_err());
        let r = RoundnessRule::default();
        assert_eq!(r.p0, 0.2);
        assert!(r.is_round(-1.5) && r.is_round(0.0) && !r.is_round(0.3));
    }

    #[test]
    fn state_variable_examples() {
        let dates: Vec<QuarterIndex> = (0..6).map(|k| wave("2020Q1").offset(k)).collect();
        let series = |v: Vec<f64>| IndexSeries {
            dates: dates[..v.len()].to_vec(),
            lower: vec![None; v.len()],
            upper: vec![None; v.len()],
            sample_size: vec![10; v.len()],
            value: v,
        };
        let exp = |v: Vec<f64>| QuarterlySeries {
            dates: dates[..v.len()].to_vec(),
            values: v.into_iter().map(Some).collect(),
        };
        let out = state_variable(
            &series(vec![0.5; 6]),
            &exp(vec![2.0; 6]),
            [0.25, 0.25, 0.4, 0.1],
            ExpectationScaling::Multiply,
        )
        .unwrap();
        assert!(out[..3].iter().all(Option::is_none));
        assert!(out[3..].iter().all(|v| (v.unwrap() - 1.0).abs() < 1e-12));

        let u = series(vec![0.2, 0.4, 0.6, 0.8]);
        let e = exp(vec![1.0; 4]);
        let out = state_variable(&u, &e, DEFAULT_MA_WEIGHTS, ExpectationScaling::Multiply).unwrap();
        assert!((out[3].unwrap() - 0.60).abs() < 1e-12);
        let ident = state_variable(&u, &e, [1.0, 0.0, 0.0, 0.0], ExpectationScaling::Multiply).unwrap();
        assert_eq!(ident[3], Some(0.8));

        assert!(state_variable(&u, &e, [1.2, -0.2, 0.0, 0.0], ExpectationScaling::Multiply).is_err());
        let shifted = QuarterlySeries {
            dates: dates[1..5].to_vec(),
            values: vec![Some(1.0); 4],
        };
        assert!(state_variable(&u, &shifted, DEFAULT_MA_WEIGHTS, ExpectationScaling::Multiply).is_err());
        let div = state_variable(&u, &exp(vec![2.0; 4]), [1.0, 0.0, 0.0, 0.0], ExpectationScaling::Divide).unwrap();
        assert_eq!(div[3], Some(0.4));
    }

    #[test]
    fn transition_examples() {
        let state = [1.0, 2.0, 3.0, 4.0, 10.0];
        let tr = Transition::fit(&state, DEFAULT_ETA).unwrap();
        assert_eq!(tr.center, 3.0);
        assert_eq!(tr.eval(tr.center), 0.5);
        let z = tr.eval(tr.center + tr.scale);
        assert!((z - 5f64.exp() / (1.0 + 5f64.exp())).abs() < 1e-12);
        assert!((z - 0.99331).abs() < 1e-5);
        assert!(tr.eval(-1e6) < 1e-300);
        assert!(transition_prob(&[2.0, 2.0, 2.0], 5.0).is_err());
        assert!(transition_prob(&state, 0.0).is_err());
    }
}
