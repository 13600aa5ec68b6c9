use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ecd_core::bounds::{half_norm, random_energy_probe, speed_limit_bound};
use ecd_core::matrix::trace_norm;
use ecd_core::quantum::{
    attenuator, mean_energy, random_channel, random_hermitian_preserving, unitary_evolution, Channel, ChannelSpec,
    Hamiltonian, HermitianPreservingMap,
};
use ecd_core::sdp::{
    assemble, assemble_unconstrained, discrimination_check, solve, EcdProblem, SolverOptions, SolverStatus,
};

#[test]
fn random_probes_never_beat_the_certified_upper_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = Hamiltonian::new(vec![0.0, 0.7, 1.9]).unwrap();
    let e = 0.6;
    for _ in 0..4 {
        let delta = random_hermitian_preserving(3, 2, &mut rng);
        let cert = solve(&assemble(&delta, &h, e).unwrap(), &SolverOptions::default()).unwrap();
        assert_eq!(cert.status, SolverStatus::Optimal);
        for _ in 0..25 {
            let rho = random_energy_probe(&h, e, 1, &mut rng).unwrap();
            let psi = rho.purification().unwrap();
            let out = delta.apply_to_pure(&psi, 3);
            let value = trace_norm(out.matrix()).unwrap();
            assert!(value <= cert.norm_upper + 1e-9, "{value} > {}", cert.norm_upper);
        }
    }
}

#[test]
fn helstrom_success_is_capped_by_the_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = Hamiltonian::new(vec![0.0, 1.0]).unwrap();
    let n1 = random_channel(2, 2, 2, &mut rng);
    let n2 = random_channel(2, 2, 2, &mut rng);
    let e = 0.3;
    let (_, upper, cert) = half_norm(&n1, &n2, &h, e, &SolverOptions::default()).unwrap();
    let probe = cert.probe.clone();
    let result = ecd_core::quantum::DensityMatrix::new(probe)
        .and_then(|p| discrimination_check(&n1, &n2, 0.5, &h, e, 40, 4000, Some(&p), &mut rng))
        .unwrap();
    assert!(result.helstrom_success <= 0.5 * (1.0 + upper) + 1e-9);
    assert!((result.helstrom_success - 0.5 * (1.0 + upper)).abs() < 1e-5);
    assert!((result.empirical_success - result.helstrom_success).abs() <= result.tolerance(1e-6));
}

#[test]
fn spec_and_problem_round_trips_preserve_the_value() {
    let opts = SolverOptions::default();
    let a = attenuator(0.8, 8).unwrap();
    let b = ChannelSpec::from_json(&ChannelSpec::from_channel(&a).to_json().unwrap()).unwrap().to_channel().unwrap();
    let h = Hamiltonian::number_operator(8);
    let delta = HermitianPreservingMap::difference(&b, &Channel::identity(8)).unwrap();
    let problem = assemble(&delta, &h, 1.5).unwrap();
    let reread = EcdProblem::from_json(&problem.to_json().unwrap()).unwrap();
    let x = solve(&problem, &opts).unwrap();
    let y = solve(&reread, &opts).unwrap();
    assert_eq!(x.norm_upper, y.norm_upper);
    assert_eq!(x.norm_lower, y.norm_lower);
}

#[test]
fn large_energy_budget_matches_the_unconstrained_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = Hamiltonian::number_operator(3);
    let delta = random_hermitian_preserving(3, 3, &mut rng);
    let opts = SolverOptions::default();
    let free = solve(&assemble_unconstrained(&delta, &h).unwrap(), &opts).unwrap();
    let capped = solve(&assemble(&delta, &h, 2.0).unwrap(), &opts).unwrap();
    assert!((free.norm_midpoint() - capped.norm_midpoint()).abs() < 1e-6);
    assert!(mean_energy(&ecd_core::quantum::DensityMatrix::new(capped.probe).unwrap(), &h).unwrap() <= 2.0 + 1e-9);
}

#[test]
fn speed_limit_holds_off_grid() {
    let h = Hamiltonian::number_operator(6);
    let opts = SolverOptions::default();
    for (t, e) in [(0.003, 0.7), (0.2, 0.1), (0.07, 2.5), (1.3, 0.05)] {
        let (lo, _, _) = half_norm(&unitary_evolution(&h, t), &Channel::identity(6), &h, e, &opts).unwrap();
        assert!(lo <= speed_limit_bound(t, e).unwrap() + 1e-9, "t={t}, E={e}: {lo}");
    }
}
