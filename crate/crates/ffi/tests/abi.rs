use std::ffi::{CStr, CString};
use std::ptr;

use corrpool::head::{HeadParams, HeadShape};
use corrpool::model::SavedModel;
use corrpool::pooling::PoolingMethod;
use corrpool::TrainConfig;
use corrpool_ffi::*;
use rand::SeedableRng;

fn last_error() -> String {
    let p = cp_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn ramp(n: usize) -> Vec<f64> {
    (0..n).map(|i| ((i * 7919) % 101) as f64 / 10.0 - 5.0).collect()
}

fn stack(n_layers: usize, frames: usize, dim: usize) -> *mut CpLayerStack {
    let values = ramp(n_layers * frames * dim);
    let mut out = ptr::null_mut();
    let status = unsafe { cp_stack_from_f64(values.as_ptr(), n_layers, frames, dim, &mut out) };
    assert_eq!(status, CpStatus::Ok);
    out
}

#[test]
fn stack_round_trips_through_a_feature_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("x.lsf").to_str().unwrap()).unwrap();
    let s = stack(2, 5, 3);
    unsafe {
        assert_eq!(cp_stack_write(s, path.as_ptr()), CpStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(cp_stack_load(path.as_ptr(), &mut back), CpStatus::Ok);
        let (mut l, mut t, mut d) = (0, 0, 0);
        assert_eq!(cp_stack_dims(back, &mut l, &mut t, &mut d), CpStatus::Ok);
        assert_eq!((l, t, d), (2, 5, 3));
        cp_stack_free(back);
        cp_stack_free(s);
    }
}

#[test]
fn format_errors_carry_status_and_offset() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.lsf");
    let mut bytes = b"NOPE".to_vec();
    bytes.extend_from_slice(&[0; 16]);
    std::fs::write(&file, bytes).unwrap();
    let path = CString::new(file.to_str().unwrap()).unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { cp_stack_load(path.as_ptr(), &mut out) };
    assert_eq!(status, CpStatus::Format);
    assert!(out.is_null());
    assert!(last_error().contains("byte 0"), "{}", last_error());

    let missing = CString::new(dir.path().join("none.lsf").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { cp_stack_load(missing.as_ptr(), &mut out) }, CpStatus::Io);
}

#[test]
fn null_and_invalid_arguments_are_reported() {
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(cp_stack_from_f64(ptr::null(), 1, 2, 2, &mut out), CpStatus::NullPointer);
        assert!(last_error().contains("values"));
        let v = [f64::NAN; 4];
        assert_eq!(cp_stack_from_f64(v.as_ptr(), 1, 2, 2, &mut out), CpStatus::Input);
        assert_eq!(cp_stack_from_f64(v.as_ptr(), usize::MAX, 2, 2, &mut out), CpStatus::InvalidArgument);
        assert_eq!(cp_stack_dims(ptr::null(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut()), CpStatus::NullPointer);
        cp_stack_free(ptr::null_mut());
        cp_model_free(ptr::null_mut());
        assert_eq!(cp_model_num_classes(ptr::null()), 0);
    }
}

#[test]
fn corr_pool_matches_core_and_checks_buffer_length() {
    let (t, d) = (9, 4);
    let seq = ramp(t * d);
    let mut out = vec![0.0; cp_corr_pool_len(d)];
    let status = unsafe { cp_corr_pool(seq.as_ptr(), t, d, 1e-8, out.as_mut_ptr(), out.len()) };
    assert_eq!(status, CpStatus::Ok);
    let view = ndarray::ArrayView2::from_shape((t, d), &seq).unwrap();
    let expected = corrpool::pooling::corr_pool(view, 1e-8).unwrap();
    assert_eq!(out, expected.values.to_vec());

    let mut short = vec![0.0; 2];
    let status = unsafe { cp_corr_pool(seq.as_ptr(), t, d, 1e-8, short.as_mut_ptr(), short.len()) };
    assert_eq!(status, CpStatus::InvalidArgument);
    assert!(last_error().contains("expected 6"));
}

#[test]
fn smooth_labels_spot_values() {
    let y = [0.0, 1.0, 0.0, 0.0];
    let mut out = [0.0; 4];
    assert_eq!(unsafe { cp_smooth_labels(y.as_ptr(), 4, 0.25, out.as_mut_ptr()) }, CpStatus::Ok);
    assert_eq!(out, [0.0625, 0.8125, 0.0625, 0.0625]);
    assert_eq!(unsafe { cp_smooth_labels(y.as_ptr(), 4, 1.5, out.as_mut_ptr()) }, CpStatus::Input);
}

#[test]
fn model_predicts_like_core() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let shape = HeadShape { method: PoolingMethod::AttCorr, n_layers: 2, dim: 5, dv: 4, heads: 2, classes: 3 };
    let params = HeadParams::init(shape, 1e-8, &mut rng).unwrap();
    let model = SavedModel {
        class_names: vec!["a".into(), "b".into(), "c".into()],
        config: TrainConfig::default(),
        params: params.clone(),
    };
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("model.json");
    model.save(&file).unwrap();
    let path = CString::new(file.to_str().unwrap()).unwrap();

    let s = stack(2, 7, 5);
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(cp_model_load(path.as_ptr(), &mut m), CpStatus::Ok);
        assert_eq!(cp_model_num_classes(m), 3);
        assert_eq!(CStr::from_ptr(cp_model_class_name(m, 2)).to_str().unwrap(), "c");
        assert!(cp_model_class_name(m, 3).is_null());

        let mut logits = [0.0; 3];
        let mut k = usize::MAX;
        assert_eq!(cp_model_predict(m, s, logits.as_mut_ptr(), 3, &mut k), CpStatus::Ok);
        let core_stack = ndarray::Array3::from_shape_vec((2, 7, 5), ramp(70)).unwrap();
        let core_stack = corrpool::pooling::LayerStack::new(core_stack).unwrap();
        let expected = params.logits(&core_stack).unwrap();
        assert_eq!(logits.to_vec(), expected.to_vec());
        assert_eq!(k, corrpool::head::predict(expected.view()));

        // a stack with the wrong feature dimension is rejected, not a crash
        let wrong = stack(2, 7, 6);
        let status = cp_model_predict(m, wrong, logits.as_mut_ptr(), 3, ptr::null_mut());
        assert_ne!(status, CpStatus::Ok);
        assert_ne!(status, CpStatus::Panic);
        cp_stack_free(wrong);
        cp_model_free(m);
    }
    unsafe { cp_stack_free(s) };
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(cp_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
