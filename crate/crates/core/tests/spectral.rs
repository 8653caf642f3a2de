//! Spectral properties of the GCN propagation operator, checked against a
//! dense symmetric eigensolver.

use nalgebra::DMatrix;
use wavegcn::synth::gen_er;
use wavegcn::{gcn_propagation, FeatureMatrix};

#[test]
fn propagation_eigenvalues_lie_in_unit_interval() {
    for n in 2..=12usize {
        for seed in 0..20u64 {
            let g = gen_er(n, 0.4, seed * 101 + n as u64).unwrap();
            let pm = gcn_propagation(&g);
            let mut dense = DMatrix::zeros(n, n);
            for u in 0..n {
                for &(v, w) in pm.row(u) {
                    dense[(u, v)] = w;
                }
            }
            let eig = dense.symmetric_eigen();
            for &lambda in eig.eigenvalues.iter() {
                assert!(
                    (-1.0 - 1e-9..=1.0 + 1e-9).contains(&lambda),
                    "n={n} seed={seed}: eigenvalue {lambda} outside [-1, 1]"
                );
            }
        }
    }
}

#[test]
fn propagation_apply_matches_dense_multiply() {
    let g = gen_er(10, 0.4, 3).unwrap();
    let pm = gcn_propagation(&g);
    let f = wavegcn::synth::gaussian_features(10, 4, 5);
    let out = pm.apply(&f).unwrap();
    let mut expect = FeatureMatrix::zeros(10, 4);
    for u in 0..10 {
        for &(v, w) in pm.row(u) {
            for c in 0..4 {
                expect.set(u, c, expect.get(u, c) + w * f.get(v, c));
            }
        }
    }
    assert!(out.max_abs_diff(&expect) < 1e-14);
}
