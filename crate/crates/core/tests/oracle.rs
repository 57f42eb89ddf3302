mod common;

use dtue_core::solver::{adagdd, brute_force_oracle, single_user_swap_certificate};
use dtue_core::{generate_initial, CostWeights, InitialSetting, SolverConfig};

#[test]
fn adagdd_never_beats_the_enumerated_minimum() {
    let w = CostWeights::SYNTHETIC;
    let mut exact = 0;
    for (seed, net) in common::oracle_instances(24) {
        let oracle = brute_force_oracle(&net, w).unwrap();
        let q0 = generate_initial(InitialSetting::Default, &net).unwrap();
        let r = adagdd(&net, &q0, w, &SolverConfig::default()).unwrap();
        let min = oracle.min_zeta;
        assert!(r.zeta >= min - 1e-9 * min.max(1.0), "seed {seed}: below the minimum");
        assert!(single_user_swap_certificate(&net, &r.final_q, w).unwrap().passed, "seed {seed}");
        exact += (r.zeta <= min + 1e-9 * min.max(1.0)) as usize;
        for q in &oracle.minimizers {
            assert!(single_user_swap_certificate(&net, q, w).unwrap().passed, "seed {seed}");
        }
    }
    // Local minima are allowed, but the solver should still find most global ones.
    assert!(exact >= 12, "only {exact} of 24 instances solved exactly");
}

#[test]
fn adagdd_solves_a_single_od_instance_exactly() {
    let w = CostWeights::SYNTHETIC;
    let (_, net) = common::oracle_instances(2).remove(1);
    let oracle = brute_force_oracle(&net, w).unwrap();
    let q0 = generate_initial(InitialSetting::Default, &net).unwrap();
    let r = adagdd(&net, &q0, w, &SolverConfig::default()).unwrap();
    assert_eq!(r.zeta, oracle.min_zeta);
}
