use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use svarlab_core::error::Error;
use svarlab_core::indexes::logistic;
use svarlab_core::lp::{hc0_covariance, lp_linear, lp_state_dependent, newey_west, Bandwidth, LpData, LpSpec};
use svarlab_core::seeding::substream;
use svarlab_core::timeseries::QuarterIndex;

fn dates(t: usize, end: &str) -> Vec<QuarterIndex> {
    let end: QuarterIndex = end.parse().unwrap();
    (0..t as i64).map(|k| end.offset(k - t as i64 + 1)).collect()
}

/// `y_t = 0.5 y_{t-1} + β(Z_{t-1}) w_t + e_t` with `β = 2` in the high state
/// and `-1` in the low state.
fn two_regime(t: usize, seed: u64, hard: bool, end: &str) -> LpData {
    let mut rng = substream(seed, 0);
    let mut state = 0.0;
    let mut z = Vec::with_capacity(t);
    for _ in 0..t {
        state = 0.9 * state + rng.sample::<f64, _>(StandardNormal);
        z.push(if hard { f64::from(u8::from(state > 0.0)) } else { logistic(5.0 * state / 2.3) });
    }
    let shock: Vec<f64> = (0..t).map(|_| rng.sample(StandardNormal)).collect();
    let mut y = vec![0.0; t];
    for i in 1..t {
        let beta = 2.0 * z[i - 1] - (1.0 - z[i - 1]);
        y[i] = 0.5 * y[i - 1] + beta * shock[i] + 0.5 * rng.sample::<f64, _>(StandardNormal);
    }
    LpData { dates: dates(t, end), y, shock, z: Some(z), s: None }
}

#[test]
fn recovers_state_dependent_responses() {
    let data = two_regime(400, 3, false, "2025Q2");
    let spec = LpSpec { horizon: 4, ..Default::default() };
    let res = lp_state_dependent(&data, &spec).unwrap();
    let h0 = &res.horizons[0];
    let (bh, sh) = (h0.beta_high.unwrap(), h0.se_high.unwrap());
    let (bl, sl) = (h0.beta_low.unwrap(), h0.se_low.unwrap());
    assert!((bh - 2.0).abs() < 3.0 * sh, "high {bh} ± {sh}");
    assert!((bl + 1.0).abs() < 3.0 * sl, "low {bl} ± {sl}");
    for w in res.horizons.windows(2) {
        assert_eq!(w[0].t_eff, w[1].t_eff + 1);
    }
    assert!(res.horizons.iter().all(|r| r.se_high.unwrap() > 0.0 && r.se_low.unwrap() > 0.0));
}

#[test]
fn degenerate_state_equals_linear() {
    let mut data = two_regime(200, 5, false, "2025Q2");
    data.z = Some(vec![1.0; 200]);
    let spec = LpSpec { horizon: 6, ..Default::default() };
    let state = lp_state_dependent(&data, &spec).unwrap();
    let linear = lp_linear(&data, &spec).unwrap();
    assert_eq!(state, linear);
    assert!(state.horizons.iter().all(|r| r.beta_low.is_none()));
}

#[test]
fn hard_regimes_match_subsample_ols() {
    let data = two_regime(300, 8, true, "2015Q4");
    let spec = LpSpec { horizon: 0, lags: 1, shock_lags: 1, ..Default::default() };
    let res = lp_state_dependent(&data, &spec).unwrap();
    let z = data.z.as_ref().unwrap();
    let rows: Vec<usize> = (1..300).filter(|&t| z[t - 1] == 1.0).collect();
    let x = DMatrix::from_fn(rows.len(), 4, |i, j| {
        let t = rows[i];
        [data.shock[t], data.shock[t - 1], data.y[t - 1], 1.0][j]
    });
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|&t| data.y[t]));
    let beta = svarlab_core::linalg::ols_vec(&x, &y).unwrap();
    assert!((res.horizons[0].beta_high.unwrap() - beta[0]).abs() < 1e-10);
}

#[test]
fn constant_half_transition_is_collinear() {
    let mut data = two_regime(120, 1, false, "2025Q2");
    data.z = Some(vec![0.5; 120]);
    let err = lp_state_dependent(&data, &LpSpec::default()).unwrap_err();
    assert!(matches!(err, Error::Collinear(_)), "{err}");
}

#[test]
fn shock_scaling_rescales_coefficients() {
    let data = two_regime(250, 9, false, "2025Q2");
    let spec = LpSpec { horizon: 3, ..Default::default() };
    let base = lp_state_dependent(&data, &spec).unwrap();
    let scaled = LpData { shock: data.shock.iter().map(|v| v * 4.0).collect(), ..data };
    let res = lp_state_dependent(&scaled, &spec).unwrap();
    for (a, b) in base.horizons.iter().zip(&res.horizons) {
        assert!((a.beta_high.unwrap() / 4.0 - b.beta_high.unwrap()).abs() < 1e-10);
        assert!((a.beta_low.unwrap() / 4.0 - b.beta_low.unwrap()).abs() < 1e-10);
    }
}

#[test]
fn standard_errors_shrink_with_sample_size() {
    let spec = LpSpec { horizon: 0, ..Default::default() };
    let se = |t: usize| -> f64 {
        let ses: Vec<f64> = (0..8)
            .map(|seed| lp_state_dependent(&two_regime(t, 100 + seed, false, "2019Q4"), &spec).unwrap().horizons[0].se_high.unwrap())
            .collect();
        svarlab_core::linalg::mean(&ses)
    };
    let ratio = se(200) / se(800);
    assert!((1.5..2.7).contains(&ratio), "ratio {ratio}");
}

#[test]
fn zero_bandwidth_is_robust_covariance() {
    let data = two_regime(150, 2, false, "2025Q2");
    let x = DMatrix::from_fn(150, 2, |i, j| if j == 0 { 1.0 } else { data.shock[i] });
    let u = DVector::from_vec(data.y.clone());
    assert_eq!(newey_west(&x, &u, 0).unwrap(), hc0_covariance(&x, &u).unwrap());
}

#[test]
fn iid_errors_match_homoskedastic_covariance() {
    let t = 10_000;
    let mut rng = substream(77, 0);
    let x = DMatrix::from_fn(t, 2, |_, j| if j == 0 { 1.0 } else { rng.sample(StandardNormal) });
    let u = DVector::from_fn(t, |_, _| 1.5 * rng.sample::<f64, _>(StandardNormal));
    let nw = newey_west(&x, &u, 8).unwrap();
    let sigma2 = u.norm_squared() / (t - 2) as f64;
    let ols = (x.transpose() * &x).try_inverse().unwrap() * sigma2;
    for i in 0..2 {
        assert!((nw[(i, i)] / ols[(i, i)] - 1.0).abs() < 0.1, "{i}: {} vs {}", nw[(i, i)], ols[(i, i)]);
    }
}

#[test]
fn contract_errors() {
    let data = two_regime(10, 1, false, "2025Q2");
    assert!(lp_state_dependent(&data, &LpSpec { horizon: 12, ..Default::default() }).is_err());
    assert!(lp_state_dependent(&data, &LpSpec { lags: 0, ..Default::default() }).is_err());
    let mut bad = two_regime(100, 1, false, "2025Q2");
    bad.y.pop();
    assert!(lp_state_dependent(&bad, &LpSpec::default()).is_err());
    let mut nan = two_regime(100, 1, false, "2025Q2");
    nan.y[50] = f64::NAN;
    assert!(lp_state_dependent(&nan, &LpSpec::default()).is_err());
    let off = LpSpec { bandwidth: Bandwidth::Off, horizon: 1, ..Default::default() };
    assert!(lp_state_dependent(&two_regime(120, 4, false, "2025Q2"), &off).is_ok());
}

#[test]
fn tight_labor_control_enters_both_blocks() {
    let mut data = two_regime(220, 6, false, "2025Q2");
    let mut rng = substream(6, 1);
    data.s = Some((0..220).map(|_| rng.random::<f64>()).collect());
    let res = lp_state_dependent(&data, &LpSpec { horizon: 2, ..Default::default() }).unwrap();
    assert!(res.horizons.iter().all(|r| r.beta_high.is_some() && r.beta_low.is_some()));
    let mut out = Vec::new();
    res.write_csv(&mut out).unwrap();
    assert!(String::from_utf8(out).unwrap().starts_with("horizon,beta_high,se_high,beta_low,se_low"));
}
