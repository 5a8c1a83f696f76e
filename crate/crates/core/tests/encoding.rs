use mleqc::channel::KrausChannel;
use mleqc::encoding::{
    ea_operators, ea_signature, equivalent_operations, equivalent_states, permissible_operation_apply,
    sample_class_member_with, weakly_commute, DEFAULT_EQUIV_TOL,
};
use mleqc::linalg::{
    identity, kron, matrix_norm, pauli_x, pauli_y, pauli_z, random_density, random_ginibre, random_unit_vector,
    random_unitary, trace, CMatrix,
};
use mleqc::space::{assemble_blocks, block, validate_density, DensityMatrix, EncodedSpace, PureState};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_state(space: EncodedSpace, r: &mut ChaCha8Rng) -> PureState {
    PureState::normalized(space, random_unit_vector(space.total_dim(), r)).unwrap()
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    mleqc::linalg::hermitian_eigenvalues(m).into_iter().fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frobenius_norm_is_entrywise(seed in any::<u64>(), rows in 1usize..9, cols in 1usize..9) {
        let m = random_ginibre(rows, cols, &mut rng(seed));
        let sum: f64 = m.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((matrix_norm(&m).powi(2) - sum).abs() <= 1e-12 * sum.max(1.0));
    }

    #[test]
    fn blocks_reassemble_exactly(seed in any::<u64>(), n in 1usize..5) {
        let space = EncodedSpace::qubit(n).unwrap();
        let m = random_ginibre(2 * n, 2 * n, &mut rng(seed));
        let b = |i, j| block(&m, space, i, j).unwrap();
        prop_assert_eq!(assemble_blocks(&b(0, 0), &b(0, 1), &b(1, 0), &b(1, 1)), m);
    }

    #[test]
    fn single_qubit_blocks_have_density_structure(seed in any::<u64>(), n in 1usize..5) {
        let space = EncodedSpace::qubit(n).unwrap();
        let rho = DensityMatrix::new(space, random_density(2 * n, &mut rng(seed))).unwrap();
        let (r11, r22) = (rho.block(0, 0).unwrap(), rho.block(1, 1).unwrap());
        let (w11, w22) = (trace(&r11).re, trace(&r22).re);
        prop_assert!(w11 >= 0.0 && w22 >= 0.0);
        prop_assert!((w11 + w22 - 1.0).abs() <= 1e-12);
        prop_assert!(min_eigenvalue(&r11) >= -1e-10 && min_eigenvalue(&r22) >= -1e-10);
        let r12 = rho.block(0, 1).unwrap();
        let r21 = rho.block(1, 0).unwrap();
        prop_assert!((r12 - r21.adjoint()).norm() <= 1e-14);
    }

    #[test]
    fn kraus_channels_map_states_to_states(seed in any::<u64>(), dim in 1usize..7, ops in 1usize..5) {
        let mut r = rng(seed);
        let w = KrausChannel::random(dim, ops, &mut r);
        let rho = random_density(dim, &mut r);
        let out = w.apply(&rho).unwrap();
        prop_assert!(validate_density(&out).is_ok());
    }

    #[test]
    fn identity_logical_part_preserves_signature(seed in any::<u64>(), n in 1usize..5, ops in 1usize..4) {
        let mut r = rng(seed);
        let space = EncodedSpace::qubit(n).unwrap();
        let w = KrausChannel::random(n, ops, &mut r);
        let rho = DensityMatrix::new(space, random_density(2 * n, &mut r)).unwrap();
        let eas = ea_operators(space);
        let out = permissible_operation_apply(&identity(2), &w, &rho).unwrap();
        let dev = ea_signature(&out, &eas).unwrap().max_deviation(&ea_signature(&rho, &eas).unwrap());
        prop_assert!(dev <= 1e-12, "deviation {}", dev);
        // R_11, R_22 stay proper (unnormalized) states and R_12 = R_21^dag
        let r12 = out.block(0, 1).unwrap();
        prop_assert!((r12 - out.block(1, 0).unwrap().adjoint()).norm() <= 1e-12);
        prop_assert!(min_eigenvalue(&out.block(0, 0).unwrap()) >= -1e-10);
        prop_assert!(min_eigenvalue(&out.block(1, 1).unwrap()) >= -1e-10);
    }

    // {xi, W} acts on signatures exactly like xi (x) 1.
    #[test]
    fn permissible_operation_acts_through_xi(seed in any::<u64>(), n in 1usize..4) {
        let mut r = rng(seed);
        let space = EncodedSpace::qubit(n).unwrap();
        let xi = random_unitary(2, &mut r);
        let w = KrausChannel::random(n, 2, &mut r);
        let rho = DensityMatrix::new(space, random_density(2 * n, &mut r)).unwrap();
        let eas = ea_operators(space);
        let out = permissible_operation_apply(&xi, &w, &rho).unwrap();
        let reference = rho.evolve(&kron(&xi, &identity(n))).unwrap();
        let dev = ea_signature(&out, &eas).unwrap().max_deviation(&ea_signature(&reference, &eas).unwrap());
        prop_assert!(dev <= 1e-12);
    }

    #[test]
    fn state_equivalence_is_an_equivalence_relation(seed in any::<u64>(), m in 1usize..3, n in 1usize..4) {
        let mut r = rng(seed);
        let space = EncodedSpace::new(m, n).unwrap();
        let eas = ea_operators(space);
        let de = space.encoded_dim();
        let dl = space.logical_dim();
        let a = random_state(space, &mut r);
        let b = a.evolve(&kron(&identity(dl), &random_unitary(de, &mut r))).unwrap();
        let c = b.evolve(&kron(&identity(dl), &random_unitary(de, &mut r))).unwrap();
        let other = random_state(space, &mut r);
        let tol = DEFAULT_EQUIV_TOL;
        prop_assert!(equivalent_states(&a, &a, &eas, tol).unwrap());
        prop_assert!(equivalent_states(&a, &b, &eas, tol).unwrap());
        prop_assert!(equivalent_states(&b, &a, &eas, tol).unwrap());
        prop_assert!(equivalent_states(&b, &c, &eas, tol).unwrap());
        prop_assert!(equivalent_states(&a, &c, &eas, 2.0 * tol).unwrap());
        prop_assert_eq!(
            equivalent_states(&a, &other, &eas, tol).unwrap(),
            equivalent_states(&other, &a, &eas, tol).unwrap()
        );
    }

    #[test]
    fn sle_limit_is_bloch_vector_equality(seed in any::<u64>()) {
        let mut r = rng(seed);
        let space = EncodedSpace::qubit(1).unwrap();
        let eas = ea_operators(space);
        let psi = random_state(space, &mut r);
        let rho = psi.to_density().into_matrix();
        let sig = ea_signature(&psi, &eas).unwrap();
        for (k, s) in [pauli_x(), pauli_y(), pauli_z()].iter().enumerate() {
            let bloch = trace(&(&rho * s)).re;
            prop_assert!((sig.values[k] - 0.5 * bloch).abs() <= 1e-14);
        }
    }
}

#[test]
fn weak_commutation_of_encoding_only_and_class_members() {
    let mut r = rng(11);
    for n in [1, 2, 3] {
        let space = EncodedSpace::qubit(n).unwrap();
        let eas = ea_operators(space);
        for trial in 0..100 {
            let f = kron(&identity(2), &random_unitary(n, &mut r));
            let xi = random_unitary(2, &mut r);
            let g = sample_class_member_with(&xi, n, &mut r).unwrap();
            assert!(
                weakly_commute(&f, &g, &eas, 4, DEFAULT_EQUIV_TOL, trial).unwrap(),
                "n = {n}, trial {trial}"
            );
        }
    }
}

#[test]
fn different_encoding_factors_are_not_equivalent_states() {
    // |0>(x)a + |1>(x)b against |0>(x)Va + |1>(x)V'b with V != V'
    let mut r = rng(5);
    let space = EncodedSpace::qubit(2).unwrap();
    let eas = ea_operators(space);
    let psi = random_state(space, &mut r);
    let v1 = random_unitary(2, &mut r);
    let v2 = random_unitary(2, &mut r);
    let u = mleqc::linalg::direct_sum(&v1, &v2);
    let moved = psi.evolve(&u).unwrap();
    assert!(!equivalent_states(&psi, &moved, &eas, DEFAULT_EQUIV_TOL).unwrap());
    assert!(!equivalent_operations(&identity(4), &u, &eas, 0, DEFAULT_EQUIV_TOL, 0).unwrap());
}
