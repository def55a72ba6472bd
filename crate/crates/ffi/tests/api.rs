use std::ffi::{c_char, CStr, CString};
use std::ptr;

use wmcs_ffi::*;

fn dataset(values: &[f64]) -> *mut WmcsDataset {
    let mut out = ptr::null_mut();
    let status = unsafe { wmcs_dataset_new(values.as_ptr(), values.len(), &mut out) };
    assert_eq!(status, WmcsStatus::Ok);
    assert!(!out.is_null());
    out
}

fn last_error() -> String {
    let p = wmcs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn take_string(p: *mut c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { wmcs_string_free(p) };
    s
}

/// Deterministic normal-looking sample via inverse transform on a lattice.
fn lattice_normal(n: usize, mu: f64, sd: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let p = (i as f64 + 0.5) / n as f64;
            mu + sd
                * wmcs::densities::ParamFamily::normal(0.0, 1.0)
                    .unwrap()
                    .quantile(p)
        })
        .collect()
}

#[test]
fn dataset_round_trip() {
    let d = dataset(&[3.0, 1.0, 2.0, 2.0]);
    let mut len = 0usize;
    let mut f = 0.0;
    unsafe {
        assert_eq!(wmcs_dataset_len(d, &mut len), WmcsStatus::Ok);
        assert_eq!(wmcs_ecdf(d, 2.0, &mut f), WmcsStatus::Ok);
        wmcs_dataset_free(d);
    }
    assert_eq!(len, 4);
    assert_eq!(f, 0.75);
}

#[test]
fn empty_and_non_finite_data_are_rejected() {
    let mut out = ptr::null_mut();
    let status = unsafe { wmcs_dataset_new(ptr::null(), 0, &mut out) };
    assert_ne!(status, WmcsStatus::Ok);
    assert!(out.is_null());
    let status = unsafe { wmcs_dataset_new([1.0, f64::NAN].as_ptr(), 2, &mut out) };
    assert_ne!(status, WmcsStatus::Ok);
    assert!(!last_error().is_empty());
}

#[test]
fn null_pointers_are_reported() {
    let mut x = 0.0;
    unsafe {
        assert_eq!(wmcs_ecdf(ptr::null(), 0.0, &mut x), WmcsStatus::NullPointer);
        assert_eq!(
            wmcs_critical_value(0.05, 3, ptr::null_mut()),
            WmcsStatus::NullPointer
        );
        wmcs_dataset_free(ptr::null_mut());
        wmcs_mcs_free(ptr::null_mut());
        wmcs_string_free(ptr::null_mut());
    }
    assert!(last_error().contains("null"));
}

#[test]
fn scalar_functions() {
    let mut c = 0.0;
    let mut b = 0.0;
    let mut a = 0.0;
    unsafe {
        assert_eq!(wmcs_critical_value(0.05, 3, &mut c), WmcsStatus::Ok);
        assert_eq!(wmcs_beta_budget(0.05, 2, &mut b), WmcsStatus::Ok);
        let f = [1.0, 0.0, 1.0];
        let g = [0.0, 1.0, 0.0];
        assert_eq!(
            wmcs_optimal_alpha(f.as_ptr(), g.as_ptr(), 3, &mut a),
            WmcsStatus::Ok
        );
    }
    assert!((c - 1.959963984540054).abs() < 1e-9);
    assert!((b - (1.0 - 0.95f64.sqrt())).abs() < 1e-15);
    assert!((a - 2.0 / 3.0).abs() < 1e-5);

    let mut x = 0.0;
    let status = unsafe { wmcs_critical_value(1.5, 3, &mut x) };
    assert_eq!(status, WmcsStatus::InvalidArgument);
    let zeros = [0.0; 2];
    let status = unsafe { wmcs_optimal_alpha(zeros.as_ptr(), zeros.as_ptr(), 2, &mut x) };
    assert_eq!(status, WmcsStatus::Statistical);
}

#[test]
fn fit_returns_json() {
    let d = dataset(&lattice_normal(200, 1.0, 2.0));
    let model = CString::new(r#"{"family": "normal"}"#).unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { wmcs_fit_json(d, model.as_ptr(), &mut out) };
    assert_eq!(status, WmcsStatus::Ok, "{}", last_error());
    let v: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    let mu = v["model"]["params"]["mu"].as_f64().unwrap();
    assert!((mu - 1.0).abs() < 1e-4, "{mu}");
    unsafe { wmcs_dataset_free(d) };
}

#[test]
fn malformed_json_is_a_parse_error() {
    let d = dataset(&[1.0, 2.0, 3.0]);
    let bad = CString::new("[{").unwrap();
    let mut set = ptr::null_mut();
    let status = unsafe { wmcs_mcs_new(d, bad.as_ptr(), 0.05, &mut set) };
    assert_eq!(status, WmcsStatus::Parse);
    assert!(set.is_null());
    unsafe { wmcs_dataset_free(d) };
}

#[test]
fn confidence_set_handle() {
    let d = dataset(&lattice_normal(300, 0.0, 1.0));
    let models = CString::new(
        r#"{"models": [{"family": "normal"}, {"family": "cauchy"}, {"family": "laplace"}]}"#,
    )
    .unwrap();
    let mut set = ptr::null_mut();
    let status = unsafe { wmcs_mcs_new(d, models.as_ptr(), 0.05, &mut set) };
    assert_eq!(status, WmcsStatus::Ok, "{}", last_error());

    let mut count = 0usize;
    let mut members = 0usize;
    let mut normal_in = false;
    let mut cauchy_in = true;
    let mut t = 0.0;
    let mut json = ptr::null_mut();
    unsafe {
        assert_eq!(wmcs_mcs_model_count(set, &mut count), WmcsStatus::Ok);
        assert_eq!(wmcs_mcs_member_count(set, &mut members), WmcsStatus::Ok);
        assert_eq!(wmcs_mcs_is_member(set, 0, &mut normal_in), WmcsStatus::Ok);
        assert_eq!(wmcs_mcs_is_member(set, 1, &mut cauchy_in), WmcsStatus::Ok);
        assert_eq!(wmcs_mcs_min_t(set, 0, &mut t), WmcsStatus::Ok);
        assert_eq!(
            wmcs_mcs_is_member(set, 3, &mut cauchy_in),
            WmcsStatus::InvalidArgument
        );
        assert_eq!(wmcs_mcs_to_json(set, &mut json), WmcsStatus::Ok);
        wmcs_mcs_free(set);
        wmcs_dataset_free(d);
    }
    assert_eq!(count, 3);
    assert!(members >= 1);
    assert!(normal_in);
    assert!(!cauchy_in);
    assert!(t > 0.0);
    let v: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(v["members"].as_array().unwrap().len(), members);
}

#[test]
fn local_set_and_empty_region() {
    let d = dataset(&lattice_normal(300, 0.0, 1.0));
    let fams = CString::new(r#"["normal", "laplace"]"#).unwrap();
    let mut set = ptr::null_mut();
    unsafe {
        let status = wmcs_local_mcs_new(d, fams.as_ptr(), 0.0, f64::INFINITY, 0.05, &mut set);
        assert_eq!(status, WmcsStatus::Ok, "{}", last_error());
        wmcs_mcs_free(set);
        set = ptr::null_mut();
        let status = wmcs_local_mcs_new(d, fams.as_ptr(), 100.0, f64::INFINITY, 0.05, &mut set);
        assert_eq!(status, WmcsStatus::Statistical);
        assert!(set.is_null());
        let unknown = CString::new(r#"["student"]"#).unwrap();
        let status = wmcs_local_mcs_new(d, unknown.as_ptr(), 0.0, 1.0, 0.05, &mut set);
        assert_ne!(status, WmcsStatus::Ok);
        wmcs_dataset_free(d);
    }
}

#[test]
fn mixture_json() {
    let mut values = lattice_normal(200, -4.0, 0.5);
    values.extend(lattice_normal(400, 6.0, 1.0));
    let d = dataset(&values);
    let lower = CString::new(r#"["normal", "laplace"]"#).unwrap();
    let upper = CString::new(r#"["normal", "cauchy"]"#).unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe {
        wmcs_mixture_mcs_json(
            d,
            lower.as_ptr(),
            upper.as_ptr(),
            0.0,
            0.05,
            f64::NAN,
            ptr::null(),
            &mut out,
        )
    };
    assert_eq!(status, WmcsStatus::Ok, "{}", last_error());
    let v: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    let candidates = v["candidates"].as_array().unwrap();
    assert!(!candidates.is_empty());
    let a = candidates[0]["alpha_opt"].as_f64().unwrap();
    assert!((a - 1.0 / 3.0).abs() < 0.01, "{a}");

    let status = unsafe {
        wmcs_mixture_mcs_json(
            d,
            lower.as_ptr(),
            upper.as_ptr(),
            0.0,
            0.05,
            0.2,
            ptr::null(),
            &mut out,
        )
    };
    assert_eq!(status, WmcsStatus::InvalidArgument);
    unsafe { wmcs_dataset_free(d) };
}

#[test]
fn distances_between_normals() {
    let f = CString::new(r#"{"family": "normal", "params": {"mu": 0.0, "sigma2": 1.0}}"#).unwrap();
    let g = CString::new(r#"{"family": "normal", "params": {"mu": 1.0, "sigma2": 1.0}}"#).unwrap();
    let mut h = 0.0;
    let mut l = 0.0;
    let mut kl = 0.0;
    unsafe {
        assert_eq!(
            wmcs_distance(f.as_ptr(), g.as_ptr(), WmcsDistance::Hellinger, &mut h),
            WmcsStatus::Ok
        );
        assert_eq!(
            wmcs_distance(f.as_ptr(), g.as_ptr(), WmcsDistance::L2, &mut l),
            WmcsStatus::Ok
        );
        assert_eq!(
            wmcs_distance(
                f.as_ptr(),
                g.as_ptr(),
                WmcsDistance::KullbackLeibler,
                &mut kl
            ),
            WmcsStatus::Ok
        );
    }
    assert!((h - (2.0 * (1.0 - (-0.125f64).exp())).sqrt()).abs() < 1e-7);
    assert!((l - ((1.0 - (-0.25f64).exp()) / std::f64::consts::PI.sqrt()).sqrt()).abs() < 1e-7);
    assert!((kl - 0.5).abs() < 1e-6);
}
