use mleqc::decoherence::{
    dephase, dephasing_study, error_mle, error_sle, ground_state, temperature_grid, temperature_sweep, thermal_state,
    RandomStateSpec, SweepGates, ThermalSpec, BOLTZMANN_HARTREE_PER_KELVIN,
};
use mleqc::dynamics::NA2_GROUND_VIBRATIONAL_GAP;
use mleqc::encoding::{ea_operators, ea_signature};
use mleqc::gates::{hadamard_class, pauli_class, single_level_gate, PauliAxis};
use mleqc::linalg::{identity, pauli_x, random_density, random_unitary};
use mleqc::space::{DensityMatrix, EncodedSpace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn dephasing_preserves_signatures() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for n in [1, 2, 3] {
        let space = EncodedSpace::qubit(n).unwrap();
        let eas = ea_operators(space);
        for _ in 0..1000 {
            let rho = DensityMatrix::new(space, random_density(2 * n, &mut rng)).unwrap();
            let dev = ea_signature(&rho, &eas).unwrap().max_deviation(&ea_signature(&dephase(&rho), &eas).unwrap());
            assert!(dev <= 1e-14, "n = {n}: {dev:e}");
        }
    }
}

#[test]
fn exact_members_do_not_see_dephasing_or_thermal_mixing() {
    let space = EncodedSpace::qubit(2).unwrap();
    let eas = ea_operators(space);
    let spec = RandomStateSpec { seed: 4 };
    for (k, cls) in [pauli_class(PauliAxis::X, 2).unwrap(), hadamard_class(2).unwrap()].iter().enumerate() {
        for i in 0..200 {
            let u = cls.sample(1000 * k as u64 + i);
            let rho = spec.sample(i).to_density();
            assert!(error_mle(&u, cls, &rho, &rho, &eas).unwrap() <= 1e-12);
            assert!(error_mle(&u, cls, &rho, &dephase(&rho), &eas).unwrap() <= 1e-12);
        }
        let ground = ground_state(space);
        for t in [70.0, 95.0, 120.0] {
            let thermal = thermal_state(&ThermalSpec::na2(t)).unwrap();
            assert!(error_mle(&cls.sample(7), cls, &ground, &thermal, &eas).unwrap() <= 1e-12);
        }
    }
}

// rho(t_f) = (1 - D)|n><n| + D v|1><1|v^dag against the target |n><n|:
// the difference squares to D^2 + D^2.
#[test]
fn exact_single_level_gate_error_is_two_delta_squared() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let ground = ground_state(EncodedSpace::qubit(2).unwrap());
    for t in temperature_grid(70.0, 120.0, 26).unwrap() {
        let spec = ThermalSpec::na2(t);
        let thermal = thermal_state(&spec).unwrap();
        let target = single_level_gate(&pauli_x(), &identity(2), 2).unwrap();
        let u = single_level_gate(&pauli_x(), &random_unitary(2, &mut rng), 2).unwrap();
        let d = spec.delta();
        assert!((error_sle(&u, &target, &ground, &thermal).unwrap() - 2.0 * d * d).abs() <= 1e-12);
    }
}

#[test]
fn exact_gate_sweep_is_flat_for_mle_and_rising_for_sle() {
    let cls = pauli_class(PauliAxis::X, 2).unwrap();
    let gates = SweepGates {
        mle: cls.sample(1),
        mle_class: cls,
        sle: single_level_gate(&pauli_x(), &random_unitary(2, &mut ChaCha8Rng::seed_from_u64(2)), 2).unwrap(),
        sle_target: single_level_gate(&pauli_x(), &identity(2), 2).unwrap(),
    };
    let temps = temperature_grid(70.0, 120.0, 26).unwrap();
    let rows = temperature_sweep(&gates, &temps, NA2_GROUND_VIBRATIONAL_GAP, BOLTZMANN_HARTREE_PER_KELVIN).unwrap();
    assert_eq!(rows.len(), 26);
    for r in &rows {
        assert!(r.eps_mle.abs() <= 1e-12);
        assert!((r.eps_sle - r.eps_sle_oracle).abs() <= 1e-12);
    }
    assert!(rows.windows(2).all(|w| w[1].eps_sle > w[0].eps_sle));
    assert!((0.036..=0.039).contains(&rows[0].delta), "Delta(70 K) = {}", rows[0].delta);
}

#[test]
fn dephasing_study_is_thread_independent() {
    let cls = pauli_class(PauliAxis::Z, 2).unwrap();
    // a slightly wrong gate so the errors are not all zero
    let u = cls.sample(3) * mleqc::linalg::hermitian_exp(&mleqc::linalg::random_hermitian(4, &mut ChaCha8Rng::seed_from_u64(1)), 0.01);
    let spec = RandomStateSpec { seed: 12 };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| dephasing_study(&u, &cls, &spec, 2000).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a, b);
    assert!(a.mean_pure > 0.0 && a.mean_dephased > 0.0);
    assert!(dephasing_study(&u, &cls, &spec, 0).is_err());
}
