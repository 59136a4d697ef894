use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use proptest::prelude::*;
use qsl_core::prelude::*;

const HB: PhysicalConstants = PhysicalConstants { hbar: 1.0 };

fn dims() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![2usize, 3, 4, 8])
}

fn driven_schedule(d: usize, seed: u64) -> HamiltonianSchedule {
    let h1 = random_hermitian(d, seed).unwrap();
    let h2 = random_hermitian(d, seed.wrapping_add(1)).unwrap();
    HamiltonianSchedule::driven(d, move |t| h1.add(&h2.scale((1.7 * t).sin())).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_states_are_normalized(d in 2usize..=16, seed in any::<u64>()) {
        prop_assert!((random_state(d, seed).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn propagators_are_unitary(d in dims(), seed in any::<u64>(), t in -5.0f64..5.0) {
        let u = spectral_exponential(&random_hermitian(d, seed).unwrap(), t, HB).unwrap();
        prop_assert!(unitarity_deviation(&u) < 1e-10);
        let psi = random_state(d, seed).unwrap();
        prop_assert!(((&u * psi.amplitudes()).norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn self_inverse_exponential_is_a_rotation(d in dims(), seed in any::<u64>(), t in -4.0f64..4.0) {
        let h = random_self_inverse(d, seed).unwrap();
        let u = spectral_exponential(&h, t, HB).unwrap();
        let expected = DMatrix::<C64>::identity(d, d) * C64::new(t.cos(), 0.0) - h.matrix() * C64::new(0.0, t.sin());
        prop_assert!(max_abs_diff(&u, &expected) < 1e-9);
    }

    #[test]
    fn hilbert_angle_symmetric_and_phase_blind(d in dims(), seed in any::<u64>(), phase in -6.0f64..6.0) {
        let a = random_state(d, seed).unwrap();
        let b = random_state(d, seed.wrapping_add(1)).unwrap();
        let ab = hilbert_angle(&a, &b).unwrap();
        prop_assert!((ab - hilbert_angle(&b, &a).unwrap()).abs() < 1e-14);
        prop_assert!((ab - hilbert_angle(&a.with_phase(phase), &b).unwrap()).abs() < 1e-12);
        prop_assert!((ab - hilbert_angle(&a, &b.with_phase(-phase)).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn classical_split_invariants(d in dims(), seed in any::<u64>()) {
        let b = random_hermitian(d, seed).unwrap();
        let psi = random_state(d, seed).unwrap();
        let basis = OrthonormalBasis::from_columns(random_unitary(d, seed).unwrap()).unwrap();
        let split = classical_part(&b, &psi, &basis).unwrap();
        let rebuilt = split.classical.add(&split.nonclassical).unwrap();
        prop_assert!(max_abs_diff(rebuilt.matrix(), b.matrix()) < 1e-12);

        // diagonal in the basis, so it commutes with every basis projector
        let in_basis = basis.columns().adjoint() * split.classical.matrix() * basis.columns();
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    prop_assert!(in_basis[(i, j)].norm() < 1e-12);
                }
            }
        }

        let mean = expectation(&b, &psi).unwrap();
        prop_assert!((expectation(&split.classical, &psi).unwrap() - mean).abs() < 1e-10);

        let total = variance(&b, &psi).unwrap();
        let cl = variance(&split.classical, &psi).unwrap();
        let nc = nonclassical_variance(&b, &psi, &basis).unwrap();
        prop_assert!((total - cl - nc).abs() < 1e-9);
    }

    #[test]
    fn exact_uncertainty_relation(d in dims(), seed in any::<u64>(), hbar in 0.2f64..3.0) {
        let consts = PhysicalConstants::new(hbar).unwrap();
        let b = random_hermitian(d, seed).unwrap();
        let psi = random_state(d, seed).unwrap();
        let basis = OrthonormalBasis::from_columns(random_unitary(d, seed).unwrap()).unwrap();
        match exact_ur_residual(&basis, &b, &psi, consts) {
            Ok(r) => prop_assert!(r < 1e-9 * hbar.max(1.0)),
            Err(QslError::Stationary) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn norm_is_preserved(d in dims(), seed in any::<u64>(), span in 0.1f64..3.0) {
        let psi0 = random_state(d, seed).unwrap();
        let s = HamiltonianSchedule::constant(random_hermitian(d, seed).unwrap()).unwrap();
        let traj = evolve(&s, &psi0, span, 256, HB).unwrap();
        prop_assert!(traj.max_norm_drift() < 1e-9);
        let traj = evolve(&driven_schedule(d, seed), &psi0, span, 512, HB).unwrap();
        prop_assert!(traj.max_norm_drift() < 1e-7);
    }

    #[test]
    fn constant_refinement_changes_nothing(d in dims(), seed in any::<u64>(), span in 0.1f64..3.0) {
        let psi0 = random_state(d, seed).unwrap();
        let s = HamiltonianSchedule::constant(random_hermitian(d, seed).unwrap()).unwrap();
        let a = evolve(&s, &psi0, span, 128, HB).unwrap();
        let b = evolve(&s, &psi0, span, 256, HB).unwrap();
        prop_assert!((a.final_state().amplitudes() - b.final_state().amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn evolution_is_reversible(d in prop::sample::select(vec![2usize, 4]), seed in any::<u64>(), span in 0.2f64..2.0) {
        let psi0 = random_state(d, seed).unwrap();
        let schedules = [
            HamiltonianSchedule::constant(random_hermitian(d, seed).unwrap()).unwrap(),
            HamiltonianSchedule::piecewise(vec![
                (0.0, random_hermitian(d, seed).unwrap()),
                (0.3 * span, random_hermitian(d, seed.wrapping_add(9)).unwrap()),
            ]).unwrap(),
            driven_schedule(d, seed),
        ];
        for s in schedules {
            let forward = evolve(&s, &psi0, span, 400, HB).unwrap();
            let back = evolve(&s.reversed(span).unwrap(), forward.final_state(), span, 400, HB).unwrap();
            prop_assert!(hilbert_angle(back.final_state(), &psi0).unwrap() < 1e-8);
        }
    }

    #[test]
    fn bound_report_invariants(d in dims(), seed in any::<u64>(), span in 0.1f64..3.0) {
        let psi0 = random_state(d, seed).unwrap();
        let s = HamiltonianSchedule::constant(random_hermitian(d, seed).unwrap()).unwrap();
        let r = bound_report(&s, &psi0, span, None, StepPolicy::Fixed(2048), HB).unwrap();
        prop_assert!(r.chain_holds());
        prop_assert!(r.wootters_length >= r.theta - 1e-9);
    }

    #[test]
    fn path_speed_is_half_root_fisher(d in dims(), seed in any::<u64>()) {
        let psi0 = random_state(d, seed).unwrap();
        let s = HamiltonianSchedule::constant(random_hermitian(d, seed).unwrap()).unwrap();
        let traj = evolve(&s, &psi0, 1.0, 2000, HB).unwrap();
        let basis = complete_basis_from(&psi0);
        let speed = path_speed(&traj, &basis).unwrap();
        let fisher = classical_fisher(&traj, &basis).unwrap();
        let moduli = amplitude_moduli(&traj, &basis).unwrap();
        for k in 0..speed.len() {
            // skip samples where some outcome is nearly extinct
            if moduli.iter().all(|m| m[k] > 1e-3) {
                prop_assert!((speed[k] - 0.5 * fisher[k].sqrt()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn exact_time_for_driven_schedules(d in prop::sample::select(vec![2usize, 4]), seed in any::<u64>()) {
        let psi0 = random_state(d, seed).unwrap();
        let r = bound_report(&driven_schedule(d, seed), &psi0, 1.0, None, StepPolicy::Auto { initial: 1024, rel_tol: 1e-9 }, HB).unwrap();
        let t = r.t_exact_ddim.unwrap();
        prop_assert!((t - 1.0).abs() < 1e-5, "{t}");
    }

    #[test]
    fn exact_time_2d_for_driven_qubits(z in -0.9f64..0.9, phi in 0.0f64..6.2) {
        // amplitude-modulated rotation about a fixed axis; the accumulated
        // rotation angle stays below pi/2, so p_t keeps decreasing
        let r = (1.0 - z * z).sqrt();
        let axis = pauli::axis([r * phi.cos(), r * phi.sin(), z]);
        let s = HamiltonianSchedule::driven(2, move |t| axis.scale(1.0 + 0.4 * (2.0 * t).sin()));
        let psi0 = PureState::basis(2, 0).unwrap();
        let traj = evolve_auto(&s, &psi0, 1.2, 1024, 1e-10, HB).unwrap();
        let t = exact_time_2d(&traj, &complete_basis_from(&psi0)).unwrap();
        prop_assert!((t - 1.2).abs() / 1.2 < 1e-6, "{t}");
    }

    #[test]
    fn exact_time_independent_of_basis_completion(d in prop::sample::select(vec![3usize, 4, 8]), seed in any::<u64>()) {
        let psi0 = random_state(d, seed).unwrap();
        let s = HamiltonianSchedule::constant(random_hermitian(d, seed).unwrap()).unwrap();
        let traj = evolve(&s, &psi0, 1.0, 4096, HB).unwrap();
        let mut seeds = vec![psi0.clone()];
        seeds.extend((1..d as u64).map(|k| random_state(d, seed.wrapping_add(k)).unwrap()));
        let other = complete_basis(&seeds);
        let a = exact_time_ddim(&traj, &complete_basis_from(&psi0)).unwrap();
        let b = exact_time_ddim(&traj, &other).unwrap();
        prop_assert!((a - 1.0).abs() < 1e-5 && (b - 1.0).abs() < 1e-5, "{a} {b}");
    }

    #[test]
    fn self_inverse_saturates(d in dims(), seed in any::<u64>(), span in 0.1f64..FRAC_PI_2) {
        let s = saturation_check(&random_self_inverse(d, seed).unwrap(), &random_state(d, seed).unwrap(), span).unwrap();
        prop_assert!(s.saturated);
        prop_assert!(s.max_pointwise_deviation < 1e-8);
    }

    #[test]
    fn gell_mann_generators(d in 2usize..=6) {
        let b = gell_mann_basis(d).unwrap();
        prop_assert_eq!(b.len(), d * d - 1);
        for g in b.generators() {
            prop_assert!(g.matrix().trace().norm() < 1e-12);
            prop_assert!(max_abs_diff(g.matrix(), &g.matrix().adjoint()) < 1e-12);
        }
    }

    #[test]
    fn constructed_optimum_meets_mt_time(d in dims(), seed in any::<u64>(), cap in 0.3f64..3.0) {
        let psi0 = random_state(d, seed).unwrap();
        let target = random_state(d, seed.wrapping_add(77)).unwrap();
        let theta = hilbert_angle(&psi0, &target).unwrap();
        let h = optimal_hamiltonian(&psi0, &target, cap).unwrap();
        let s = HamiltonianSchedule::constant(h.clone()).unwrap();
        let t = first_passage_time(&s, &psi0, &target, 1e-9, 4.0 * theta / cap, HB).unwrap();
        prop_assert!((t - theta / cap).abs() / (theta / cap) < 1e-6);

        let diag = optimality_diagnostics(&h, &psi0, Some(&target), HB).unwrap();
        prop_assert!(diag.form_match);
    }

    #[test]
    fn form_match_implies_optimality(d in dims(), seed in any::<u64>(), mix in 0.0f64..1.0) {
        // an optimal-form Hamiltonian, possibly blended with a random one
        let psi0 = random_state(d, seed).unwrap();
        let target = random_state(d, seed.wrapping_add(5)).unwrap();
        let opt = optimal_hamiltonian(&psi0, &target, 1.0).unwrap();
        let h = if mix < 0.5 { opt } else { opt.add(&random_hermitian(d, seed).unwrap().scale(mix - 0.5)).unwrap() };
        let diag = optimality_diagnostics(&h, &psi0, None, HB).unwrap();
        if diag.form_match {
            prop_assert!(diag.classical_norm < 1e-9);
            prop_assert!(diag.imt_gap.unwrap() < 1e-6);
        }
    }
}
