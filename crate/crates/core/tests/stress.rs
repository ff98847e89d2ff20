//! Empirical check that two repetitions are too shallow for two pairs when the
//! returned pairs must come back in the swapped nested order.

use wormhole::protocols::FinalPairing;
use wormhole::variational::optimize;
use wormhole::OptimizerConfig;

#[test]
fn two_pairs_two_reps_stays_above_threshold() {
    let cfg = OptimizerConfig {
        restarts: 20,
        rng_seed: 17,
        pairing: FinalPairing::SwappedNested,
        ..OptimizerConfig::default()
    };
    let trace = optimize(2, 2, &cfg).unwrap();
    assert!(trace.best_cost > 1e-3, "best cost {:.3e}", trace.best_cost);
}

#[test]
fn two_pairs_three_reps_reaches_swapped_layout() {
    let cfg = OptimizerConfig {
        rng_seed: 17,
        pairing: FinalPairing::SwappedNested,
        ..OptimizerConfig::default()
    };
    let trace = optimize(2, 3, &cfg).unwrap();
    assert!(trace.best_cost < 1e-3, "best cost {:.3e}", trace.best_cost);
    let eq = wormhole::variational::verify_v_equivalence(&trace.best_thetas).unwrap();
    assert!(eq.equivalent, "{eq:?}");
}
