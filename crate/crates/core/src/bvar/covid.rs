use super::likelihood::log_marginal_likelihood_scaled;
use super::optimize::nelder_mead_min;
use super::prior::{build_prior, ConjugatePrior};
use super::{build_regressors, BvarSpec, Regressors};
use crate::error::{Error, Result};
use crate::indexes::logistic;
use crate::timeseries::{MacroDataset, QuarterIndex};

/// Residual standard-deviation multipliers for the pandemic quarters.
///
/// `s = 1` before `onset`; `s1, s2, s3` in the first three affected
/// quarters; afterwards `1 + (s3 - 1) ρ^(k - 2)` at `k` quarters past onset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovidProfile {
    pub onset: QuarterIndex,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub rho: f64,
}

impl CovidProfile {
    pub fn new(onset: QuarterIndex, s1: f64, s2: f64, s3: f64, rho: f64) -> Result<Self> {
        let p = Self { onset, s1, s2, s3, rho };
        p.validate()?;
        Ok(p)
    }

    /// Onset at 2020Q2 with no rescaling.
    pub fn neutral() -> Self {
        Self {
            onset: QuarterIndex::new(2020, 2).expect("valid quarter"),
            s1: 1.0,
            s2: 1.0,
            s3: 1.0,
            rho: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidInput(format!("decay rho must lie in (0, 1), got {}", self.rho)));
        }
        for s in [self.s1, self.s2, self.s3] {
            if !(s >= 1.0 && s.is_finite()) {
                return Err(Error::InvalidInput(format!("volatility scale {s} must be >= 1")));
            }
        }
        Ok(())
    }

    pub fn scale_at(&self, date: QuarterIndex) -> f64 {
        match date.quarters_since(self.onset) {
            k if k < 0 => 1.0,
            0 => self.s1,
            1 => self.s2,
            2 => self.s3,
            k => 1.0 + (self.s3 - 1.0) * self.rho.powi((k - 2) as i32),
        }
    }
}

/// Scale for each date. The onset must fall inside the date range.
pub fn covid_scales(profile: &CovidProfile, dates: &[QuarterIndex]) -> Result<Vec<f64>> {
    profile.validate()?;
    match (dates.first(), dates.last()) {
        (Some(first), Some(last)) if *first <= profile.onset && profile.onset <= *last => {}
        _ => {
            return Err(Error::InvalidInput(format!(
                "volatility onset {} outside the sample",
                profile.onset
            )))
        }
    }
    Ok(dates.iter().map(|d| profile.scale_at(*d)).collect())
}

fn profile_from_params(onset: QuarterIndex, theta: &[f64]) -> CovidProfile {
    CovidProfile {
        onset,
        s1: 1.0 + theta[0] * theta[0],
        s2: 1.0 + theta[1] * theta[1],
        s3: 1.0 + theta[2] * theta[2],
        rho: logistic(theta[3]).clamp(1e-6, 1.0 - 1e-6),
    }
}

/// Maximizes the rescaled-model marginal likelihood over `(s1, s2, s3, ρ)`
/// on an already built regression.
pub fn estimate_covid_profile_on(reg: &Regressors, prior: &ConjugatePrior, onset: QuarterIndex) -> Result<CovidProfile> {
    covid_scales(&CovidProfile { onset, ..CovidProfile::neutral() }, &reg.dates)?;
    let objective = |theta: &[f64]| -> f64 {
        let profile = profile_from_params(onset, theta);
        let scales: Vec<f64> = reg.dates.iter().map(|d| profile.scale_at(*d)).collect();
        match log_marginal_likelihood_scaled(reg, prior, &scales) {
            Ok(v) => -v,
            Err(_) => f64::INFINITY,
        }
    };
    let mut best = nelder_mead_min(&objective, &[1.0, 1.0, 1.0, 0.0], 0.5, 1e-10, 4000);
    for start in [[0.1, 0.1, 0.1, -2.0], [2.0, 1.5, 1.0, 1.0]] {
        let cand = nelder_mead_min(&objective, &start, 0.5, 1e-10, 4000);
        if cand.1 < best.1 {
            best = cand;
        }
    }
    // polish from the incumbent
    let polished = nelder_mead_min(&objective, &best.0, 0.1, 1e-12, 4000);
    if polished.1 < best.1 {
        best = polished;
    }
    if !best.1.is_finite() {
        return Err(Error::Numerical(
            "marginal likelihood is non-finite for every volatility profile tried".into(),
        ));
    }
    Ok(profile_from_params(onset, &best.0))
}

/// Estimates the pandemic volatility profile for `data`. The onset comes from
/// `spec.covid` when set, 2020Q2 otherwise.
pub fn estimate_covid_profile(data: &MacroDataset, spec: &BvarSpec) -> Result<CovidProfile> {
    let onset = spec.covid.map(|c| c.onset).unwrap_or(CovidProfile::neutral().onset);
    let reg = build_regressors(data, spec)?;
    let prior = build_prior(spec, &reg)?;
    estimate_covid_profile_on(&reg, &prior, onset)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> QuarterIndex {
        s.parse().unwrap()
    }

    #[test]
    fn before_onset_is_one() {
        let p = CovidProfile::new(q("2020Q2"), 8.0, 4.0, 2.0, 0.5).unwrap();
        let dates: Vec<_> = (0..8).map(|k| q("2018Q1").offset(k)).collect();
        assert!(dates.iter().all(|d| p.scale_at(*d) == 1.0));
        // onset outside the range is a contract error
        assert!(covid_scales(&p, &dates).is_err());
    }

    #[test]
    fn formula_values() {
        let p = CovidProfile::new(q("2020Q2"), 8.0, 4.0, 2.0, 0.5).unwrap();
        let dates: Vec<_> = (0..8).map(|k| q("2020Q1").offset(k)).collect();
        let s = covid_scales(&p, &dates).unwrap();
        assert_eq!(s[..5], [1.0, 8.0, 4.0, 2.0, 1.5]);
        assert_eq!(s[5], 1.25);
    }

    #[test]
    fn tiny_rho_reverts_immediately() {
        let p = CovidProfile::new(q("2020Q2"), 8.0, 4.0, 2.0, 1e-12).unwrap();
        assert!((p.scale_at(q("2021Q1")) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn rejects_bad_rho_and_scales() {
        assert!(CovidProfile::new(q("2020Q2"), 2.0, 2.0, 2.0, 1.0).is_err());
        assert!(CovidProfile::new(q("2020Q2"), 2.0, 2.0, 2.0, 0.0).is_err());
        assert!(CovidProfile::new(q("2020Q2"), 0.5, 2.0, 2.0, 0.5).is_err());
    }
}
