use std::ffi::{CStr, CString};
use std::ptr;

use svarlab::*;

fn last_error() -> String {
    let p = svl_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(svl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn simulate_estimate_identify_irf() {
    unsafe {
        let mut data = ptr::null_mut();
        let mut shocks = ptr::null_mut();
        assert_eq!(svl_simulate_paper_like(160, 4, &mut data, &mut shocks), SvlStatus::Ok);
        assert_eq!(svl_dataset_rows(data), 160);
        assert_eq!(svl_dataset_cols(data), 5);
        assert_eq!(svl_dataset_cols(shocks), 5);

        let mut lml = 0.0;
        assert_eq!(svl_log_marginal_likelihood(data, 2, 0.2, &mut lml), SvlStatus::Ok);
        assert!(lml.is_finite());

        let mut post = ptr::null_mut();
        assert_eq!(svl_posterior_sample(data, 2, 0.2, false, 200, 9, &mut post), SvlStatus::Ok);
        assert_eq!(svl_posterior_len(post), 200);
        assert_eq!(svl_posterior_lambda(post), 0.2);
        assert!((svl_posterior_log_ml(post) - lml).abs() < 1e-9);

        let mut sigma = [0.0; 25];
        assert_eq!(svl_posterior_sigma(post, 0, sigma.as_mut_ptr(), 25), SvlStatus::Ok);
        assert_eq!(sigma[1], sigma[5]);
        assert_eq!(svl_posterior_sigma(post, 0, sigma.as_mut_ptr(), 10), SvlStatus::BufferTooSmall);
        assert_eq!(svl_posterior_sigma(post, 999, sigma.as_mut_ptr(), 25), SvlStatus::InvalidArgument);

        let mut set = ptr::null_mut();
        assert_eq!(svl_identify_paper(post, 20, 1000, 3, &mut set), SvlStatus::Ok);
        assert_eq!(svl_drawset_len(set), 20);
        let mut impact = [0.0; 25];
        assert_eq!(svl_drawset_impact(set, 0, impact.as_mut_ptr(), 25), SvlStatus::Ok);
        // gas shock raises the gas price and has no impact effect on sentiment
        assert!(impact[0] > 0.0);
        assert!(impact[4 * 5].abs() < 1e-10);

        let h = 6;
        let len = (h + 1) * 25;
        let (mut med, mut lo, mut hi) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
        let status = svl_irf_bands(post, set, h, 0.68, med.as_mut_ptr(), lo.as_mut_ptr(), hi.as_mut_ptr(), len);
        assert_eq!(status, SvlStatus::Ok);
        for i in 0..len {
            assert!(lo[i] <= med[i] + 1e-12 && med[i] <= hi[i] + 1e-12);
        }

        svl_drawset_free(set);
        svl_posterior_free(post);
        svl_dataset_free(shocks);
        svl_dataset_free(data);
    }
}

#[test]
fn dataset_roundtrip_through_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let path = CString::new(tmp.path().join("d.csv").to_str().unwrap()).unwrap();
    let values = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    unsafe {
        let mut data = ptr::null_mut();
        assert_eq!(svl_dataset_from_values(values.as_ptr(), 3, 2, 2001, 4, &mut data), SvlStatus::Ok);
        assert_eq!(svl_dataset_save(data, path.as_ptr()), SvlStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(svl_dataset_load(path.as_ptr(), &mut back), SvlStatus::Ok);
        let mut v = 0.0;
        assert_eq!(svl_dataset_get(back, 2, 1, &mut v), SvlStatus::Ok);
        assert_eq!(v, 6.0);
        assert_eq!(svl_dataset_get(back, 3, 0, &mut v), SvlStatus::InvalidArgument);
        svl_dataset_free(back);
        svl_dataset_free(data);
    }
}

#[test]
fn errors_map_to_codes_and_messages() {
    unsafe {
        let mut data = ptr::null_mut();
        let missing = CString::new("/nonexistent/x.csv").unwrap();
        assert_eq!(svl_dataset_load(missing.as_ptr(), &mut data), SvlStatus::Io);
        assert!(last_error().contains("/nonexistent/x.csv"));
        assert!(data.is_null());

        assert_eq!(svl_dataset_load(ptr::null(), &mut data), SvlStatus::NullPointer);
        assert!(last_error().contains("path"));

        assert_eq!(svl_dataset_from_values(ptr::null(), 0, 0, 2000, 5, &mut data), SvlStatus::InvalidArgument);

        let mut lml = 0.0;
        assert_eq!(svl_log_marginal_likelihood(ptr::null(), 1, 0.2, &mut lml), SvlStatus::NullPointer);

        // zero-row handles and NULL frees are harmless
        assert_eq!(svl_dataset_rows(ptr::null()), 0);
        svl_dataset_free(ptr::null_mut());
        svl_posterior_free(ptr::null_mut());
        svl_drawset_free(ptr::null_mut());
    }
}

#[test]
fn identification_on_wrong_dimension_fails_cleanly() {
    let values: Vec<f64> = (0..120).map(|i| ((i * 37 % 11) as f64).sin()).collect();
    unsafe {
        let mut data = ptr::null_mut();
        assert_eq!(svl_dataset_from_values(values.as_ptr(), 40, 3, 2000, 1, &mut data), SvlStatus::Ok);
        let mut post = ptr::null_mut();
        assert_eq!(svl_posterior_sample(data, 1, 0.2, true, 10, 1, &mut post), SvlStatus::Ok);
        let mut set = ptr::null_mut();
        let status = svl_identify_paper(post, 5, 10, 1, &mut set);
        assert_ne!(status, SvlStatus::Ok);
        assert!(set.is_null());
        svl_posterior_free(post);
        svl_dataset_free(data);
    }
}

#[test]
fn transition_and_newey_west() {
    let state = [-1.0, 0.0, 1.0];
    let mut p = [0.0; 3];
    unsafe {
        assert_eq!(svl_transition_prob(state.as_ptr(), 3, 5.0, p.as_mut_ptr()), SvlStatus::Ok);
    }
    assert_eq!(p[1], 0.5);
    assert!((p[0] + p[2] - 1.0).abs() < 1e-12);

    // one regressor of ones: HC0 variance is sum(e^2) / t^2
    let x = [1.0; 4];
    let e = [1.0, -2.0, 0.5, 0.5];
    let mut v = [0.0];
    unsafe {
        assert_eq!(svl_newey_west(x.as_ptr(), 4, 1, e.as_ptr(), 0, v.as_mut_ptr()), SvlStatus::Ok);
    }
    assert!((v[0] - 5.5 / 16.0).abs() < 1e-12);
}
