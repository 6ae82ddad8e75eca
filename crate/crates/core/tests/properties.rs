use proptest::prelude::*;
use spinsep::dynamics::{evolve, IntegratorConfig};
use spinsep::jumps::{class_ensemble_average, fit_beta, thermal_trace_iz, ThermalPrediction};
use spinsep::observables::{spin_series, time_average, total_iz};
use spinsep::surfaces::{degeneracy_classes, max_overlap_scan};
use spinsep::{BasisState, HamiltonianMatrix, SpinSystem, StateVector};

fn reference(include_p: bool) -> SpinSystem {
    SpinSystem::uniform(3, 10.0, 1.0, include_p).unwrap()
}

/// Offset of the state obtained by moving old spin `i` to position `perm[i-1]`.
fn permuted_offset(s: BasisState, perm: &[usize]) -> usize {
    let spins = s.spins();
    let mut out = vec![false; spins.len()];
    for (i, up) in spins.into_iter().enumerate() {
        out[perm[i] - 1] = up;
    }
    BasisState::from_spins(&out).unwrap().offset()
}

fn system_strategy() -> impl Strategy<Value = (SpinSystem, Vec<usize>)> {
    (2usize..=6)
        .prop_flat_map(|n| {
            (
                Just(n),
                -20.0f64..20.0,
                prop::collection::vec(-3.0f64..3.0, n * (n - 1) / 2),
                any::<bool>(),
                Just((1..=n).collect::<Vec<_>>()).prop_shuffle(),
            )
        })
        .prop_map(|(n, omega, couplings, include_p, perm)| {
            let mut sys = SpinSystem::uniform(n, omega, 0.0, include_p).unwrap();
            let pairs: Vec<_> = sys.pairs().map(|(i, j, _)| (i, j)).collect();
            for ((i, j), a) in pairs.into_iter().zip(couplings) {
                sys.set_coupling(i, j, a).unwrap();
            }
            (sys, perm)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn built_matrices_are_exactly_hermitian((sys, _) in system_strategy()) {
        prop_assert!(HamiltonianMatrix::build(&sys).is_hermitian(0.0));
    }

    #[test]
    fn relabeling_conjugates_by_basis_permutation((sys, perm) in system_strategy()) {
        let h = HamiltonianMatrix::build(&sys);
        let hp = HamiltonianMatrix::build(&sys.relabeled(&perm).unwrap());
        let states: Vec<BasisState> = sys.basis().iter().collect();
        let scale = h.norm_bound().max(1.0);
        for l in &states {
            for k in &states {
                let a = h.get(l.offset(), k.offset());
                let b = hp.get(permuted_offset(*l, &perm), permuted_offset(*k, &perm));
                prop_assert!((a - b).norm() <= 1e-12 * scale, "{l:?} {k:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn fit_beta_round_trips(avg in -0.49f64..0.49, omega in prop_oneof![-50.0f64..-0.1, 0.1f64..50.0]) {
        let p = fit_beta(avg, omega).unwrap();
        prop_assert!((p.predicted_avg - avg).abs() <= 1e-12);
        prop_assert!((ThermalPrediction::from_beta(p.beta, omega).predicted_avg - avg).abs() <= 1e-12);
        prop_assert!((thermal_trace_iz(p.beta, omega) - avg).abs() <= 1e-12);
        prop_assert!((p.normalization - 1.0 / (2.0 * (p.beta * omega / 2.0).cosh())).abs() <= 1e-15);
    }

    #[test]
    fn degeneracy_classes_respect_relabeling(n in 2usize..=6, perm_seed in any::<u64>()) {
        // uniform couplings: relabeling maps each class onto a class
        let sys = SpinSystem::uniform(n, 10.0, 1.0, true).unwrap();
        let mut perm: Vec<usize> = (1..=n).collect();
        let mut x = perm_seed;
        for i in (1..n).rev() {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (x >> 33) as usize % (i + 1));
        }
        let h = HamiltonianMatrix::build(&sys);
        let classes = degeneracy_classes(&h, 1e-9);
        let basis = sys.basis();
        for c in &classes {
            let mut mapped: Vec<usize> = c
                .members
                .iter()
                .map(|&k| permuted_offset(basis.state(k).unwrap(), &perm) + 1)
                .collect();
            mapped.sort_unstable();
            prop_assert!(classes.iter().any(|d| d.members == mapped));
        }
    }
}

#[test]
fn total_iz_conserved_without_double_quantum_term() {
    let cfg = IntegratorConfig::new(1e-3, 200.0, 10);
    let traj = evolve(&reference(false), &StateVector::basis(2, 3).unwrap(), &cfg).unwrap();
    let worst = traj
        .states
        .iter()
        .map(|s| (total_iz(s) - 0.5).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn total_iz_varies_with_double_quantum_term() {
    let cfg = IntegratorConfig::new(1e-3, 20.0, 10);
    let traj = evolve(&reference(true), &StateVector::basis(2, 3).unwrap(), &cfg).unwrap();
    let values: Vec<f64> = traj.states.iter().map(total_iz).collect();
    let spread = values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - values.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(spread > 1e-2, "{spread}");
    // energy is still conserved
    assert!(
        traj.max_energy_drift() < 1e-8 * HamiltonianMatrix::build(&reference(true)).norm_bound()
    );
}

#[test]
fn rk4_error_shrinks_sixteenfold() {
    let sys = reference(true);
    let v0 = StateVector::basis(2, 3).unwrap();
    let t_end = 10.0;
    let coarse = 0.02;
    let end = |dt: f64| {
        // coarse steps leak norm; the guard would stop what we want to measure
        let cfg = IntegratorConfig {
            abort_threshold: 1.0,
            ..IntegratorConfig::new(dt, t_end, 1)
        };
        evolve(&sys, &v0, &cfg).unwrap().final_state().clone()
    };
    let reference = end(coarse / 16.0);
    let e1 = end(coarse).max_abs_diff(&reference);
    let e2 = end(coarse / 2.0).max_abs_diff(&reference);
    let ratio = e1 / e2;
    assert!(
        (12.0..=20.0).contains(&ratio),
        "ratio {ratio} ({e1:e} / {e2:e})"
    );
}

#[test]
fn swapping_spins_two_and_three_swaps_averages() {
    let cfg = IntegratorConfig::new(1e-3, 100.0, 10);
    // Φ3 = ↑↓↑ and Φ5 = ↑↑↓ differ by exchanging spins 2 and 3
    let a = time_average(
        &evolve(&reference(true), &StateVector::basis(3, 3).unwrap(), &cfg).unwrap(),
        0.0,
    )
    .unwrap();
    let b = time_average(
        &evolve(&reference(true), &StateVector::basis(5, 3).unwrap(), &cfg).unwrap(),
        0.0,
    )
    .unwrap();
    assert!((a.per_spin_avg[0] - b.per_spin_avg[0]).abs() < 1e-12);
    assert!((a.per_spin_avg[1] - b.per_spin_avg[2]).abs() < 1e-12);
    assert!((a.per_spin_avg[2] - b.per_spin_avg[1]).abs() < 1e-12);
}

#[test]
fn spin_series_bounded() {
    let cfg = IntegratorConfig::new(1e-3, 50.0, 10);
    let traj = evolve(&reference(true), &StateVector::basis(2, 3).unwrap(), &cfg).unwrap();
    let series = spin_series(&traj);
    for col in &series.values {
        assert!(col.iter().all(|x| x.abs() <= 0.5 + 1e-12));
    }
}

#[test]
fn max_overlap_is_monotone_in_duration() {
    let v0 = StateVector::basis(2, 3).unwrap();
    let mut last = 0.0;
    for t_end in [1.0, 5.0, 20.0, 80.0] {
        let traj = evolve(
            &reference(true),
            &v0,
            &IntegratorConfig::new(1e-3, t_end, 10),
        )
        .unwrap();
        let m = max_overlap_scan(&traj, &[3]).unwrap()[&3];
        assert!(m >= last);
        last = m;
    }
}

#[test]
fn class_average_independent_of_member_order() {
    let sys = reference(true);
    let h = HamiltonianMatrix::build(&sys);
    let class = degeneracy_classes(&h, 1e-9)
        .into_iter()
        .find(|c| c.contains(2))
        .unwrap();
    let cfg = IntegratorConfig::new(1e-3, 50.0, 10);
    let ens = class_ensemble_average(&sys, &class, &cfg).unwrap();
    let mut reversed = class.clone();
    reversed.members.reverse();
    let rev = class_ensemble_average(&sys, &reversed, &cfg).unwrap();
    for (a, b) in ens.per_spin_avg.iter().zip(&rev.per_spin_avg) {
        assert!((a - b).abs() < 1e-14);
    }
    // spins are interchangeable within the symmetric class
    let spread = ens
        .per_spin_avg
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        - ens
            .per_spin_avg
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
    assert!(spread < 1e-12);
}
