mod common;

use common::*;
use proptest::prelude::*;
use qgan_core::ansatz::{
    build_generator_spec, circuit_unitary, extend_with_ancilla, init_params, AncillaConfig,
    GeneratorSpec, InitMode,
};
use qgan_core::sim::{fidelity_hs, project_ancilla_block, projected_fidelity, target_unitary_zzz};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Parameters for `big` that reproduce `small`'s values on shared gates and
/// zero the rest.
fn lift(small: &GeneratorSpec, theta: &[f64], big: &GeneratorSpec) -> Vec<f64> {
    big.gates()
        .iter()
        .map(|g| small.slot_of(g.layer, g.kind, &g.qubits).map_or(0.0, |k| theta[k]))
        .collect()
}

#[test]
fn per_layer_counts_and_linearity() {
    let per_layer = [(AncillaConfig::None, 8), (AncillaConfig::A1, 11), (AncillaConfig::A2, 10), (AncillaConfig::A3, 12), (AncillaConfig::A4, 13)];
    for (config, count) in per_layer {
        for layers in 1..=5 {
            let spec = build_generator_spec(3, layers, config).unwrap();
            assert_eq!(spec.n_params(), layers * count);
        }
    }
}

#[test]
fn layer_order_matches_description() {
    use qgan_core::sim::RotationKind::*;
    let spec = build_generator_spec(3, 2, AncillaConfig::A4).unwrap();
    let layer0: Vec<_> = spec.gates()[..13]
        .iter()
        .map(|g| (g.kind, g.qubits.clone()))
        .collect();
    let want = vec![
        (Rx, vec![0]), (Rx, vec![1]), (Rx, vec![2]), (Rx, vec![3]),
        (Rz, vec![0]), (Rz, vec![1]), (Rz, vec![2]), (Rz, vec![3]),
        (Rzz, vec![0, 1]), (Rzz, vec![1, 2]),
        (Rzz, vec![2, 3]), (Rzz, vec![0, 3]), (Rzz, vec![1, 3]),
    ];
    assert_eq!(layer0, want);
    assert!(spec.gates()[13..].iter().all(|g| g.layer == 1));
}

#[test]
fn nesting_chain_a1_a3_a4() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for layers in [1, 3] {
        let a1 = build_generator_spec(3, layers, AncillaConfig::A1).unwrap();
        let a2 = build_generator_spec(3, layers, AncillaConfig::A2).unwrap();
        let a3 = build_generator_spec(3, layers, AncillaConfig::A3).unwrap();
        let a4 = build_generator_spec(3, layers, AncillaConfig::A4).unwrap();
        for _ in 0..20 {
            let t1 = uniform_angles(a1.n_params(), &mut rng);
            let t3 = lift(&a1, &t1, &a3);
            assert!(circuit_unitary(&a1, &t1).unwrap().max_abs_diff(&circuit_unitary(&a3, &t3).unwrap()) < 1e-10);
            let t3 = uniform_angles(a3.n_params(), &mut rng);
            let t4 = lift(&a3, &t3, &a4);
            assert!(circuit_unitary(&a3, &t3).unwrap().max_abs_diff(&circuit_unitary(&a4, &t4).unwrap()) < 1e-10);
            let t2 = uniform_angles(a2.n_params(), &mut rng);
            let t3 = lift(&a2, &t2, &a3);
            assert!(circuit_unitary(&a2, &t2).unwrap().max_abs_diff(&circuit_unitary(&a3, &t3).unwrap()) < 1e-10);
        }
    }
}

#[test]
fn zero_extension_keeps_fidelity() {
    let target = target_unitary_zzz(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let base = build_generator_spec(3, 3, AncillaConfig::None).unwrap();
    for config in [AncillaConfig::A1, AncillaConfig::A2, AncillaConfig::A3, AncillaConfig::A4] {
        for _ in 0..10 {
            let theta = init_params(&base, InitMode::Random, &mut rng);
            let before = fidelity_hs(&circuit_unitary(&base, &theta).unwrap(), &target).unwrap();
            let (ext, ext_theta) = extend_with_ancilla(&base, &theta, config, InitMode::Zero, &mut rng).unwrap();
            let u = circuit_unitary(&ext, &ext_theta).unwrap();
            let after = projected_fidelity(&u, &target).unwrap();
            assert!((before - after).abs() < 1e-10);
            let kept = project_ancilla_block(&u).unwrap().kept_block;
            assert!(kept.max_abs_diff(&circuit_unitary(&base, &theta).unwrap()) < 1e-10);
        }
    }
}

#[test]
fn extension_from_three_layer_spec() {
    let base = build_generator_spec(3, 3, AncillaConfig::None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let theta = init_params(&base, InitMode::Random, &mut rng);
    let (ext, new) = extend_with_ancilla(&base, &theta, AncillaConfig::A4, InitMode::Random, &mut rng.clone()).unwrap();
    assert_eq!(new.len(), 39);
    for (k, g) in base.gates().iter().enumerate() {
        let slot = ext.slot_of(g.layer, g.kind, &g.qubits).unwrap();
        assert_eq!(new[slot], theta[k]);
    }
    let (_, again) = extend_with_ancilla(&base, &theta, AncillaConfig::A4, InitMode::Random, &mut rng).unwrap();
    assert_eq!(new, again);
    assert!(extend_with_ancilla(&base, &theta, AncillaConfig::None, InitMode::Zero, &mut rng).is_err());
    assert!(extend_with_ancilla(&ext, &new, AncillaConfig::A1, InitMode::Zero, &mut rng).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zeroed_new_slots_reproduce_original(seed in any::<u64>(), layers in 1usize..4, which in 1usize..5) {
        let config = AncillaConfig::ALL[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = build_generator_spec(3, layers, AncillaConfig::None).unwrap();
        let theta = init_params(&base, InitMode::Random, &mut rng);
        let (ext, mut ext_theta) = extend_with_ancilla(&base, &theta, config, InitMode::Random, &mut rng).unwrap();
        for k in ext.ancilla_slots() {
            ext_theta[k] = 0.0;
        }
        let kept = project_ancilla_block(&circuit_unitary(&ext, &ext_theta).unwrap()).unwrap();
        prop_assert!(kept.is_block_diagonal(1e-10));
        prop_assert!(kept.kept_block.max_abs_diff(&circuit_unitary(&base, &theta).unwrap()) < 1e-10);
    }
}
