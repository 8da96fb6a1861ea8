use bibpa::io::{read_labels, read_matrix, synth_instance, write_labels, write_matrix};
use bibpa::symtrinmf::{f_value, KernelParams, SymTriInstance};
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn random_matrix_round_trips_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.mtx");
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let a = Array2::from_shape_fn((10, 10), |_| {
        rng.gen::<f64>() * 10f64.powi(rng.gen_range(-20..20)) - 0.5
    });
    write_matrix(&path, &a).unwrap();
    let b = read_matrix(&path).unwrap();
    assert_eq!(a.dim(), b.dim());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn labels_round_trip_with_unassigned_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("l.txt");
    let labels = vec![Some(0), None, Some(2)];
    write_labels(&path, &labels).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "0\n-1\n2\n");
    assert_eq!(read_labels(&path).unwrap(), labels);
}

#[test]
fn noiseless_planted_factors_have_zero_objective() {
    let s = synth_instance(15, 4, 0.0, 0.7, 21).unwrap();
    let inst = SymTriInstance::new(s.x.clone(), 4, KernelParams::default()).unwrap();
    assert_eq!(f_value(&inst, &s.u.view(), &s.v.view()).unwrap(), 0.0);
    assert!(s
        .u
        .rows()
        .into_iter()
        .all(|r| r.iter().filter(|&&v| v > 0.0).count() == 1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn synth_is_symmetric_and_deterministic(m in 1usize..12, r_frac in 0.0f64..1.0, noise in 0.0f64..1.0, seed in any::<u64>()) {
        let r = 1 + ((m - 1) as f64 * r_frac) as usize;
        let a = synth_instance(m, r, noise, 0.5, seed).unwrap();
        let b = synth_instance(m, r, noise, 0.5, seed).unwrap();
        prop_assert_eq!(&a.x, &b.x);
        prop_assert_eq!(&a.x, &a.x.t().to_owned());
        prop_assert!(a.x.iter().all(|&v| v >= 0.0));
    }
}
