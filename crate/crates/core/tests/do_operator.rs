mod common;

use causal_imputation::sem::{ImputationPlan, Realization, Sem};
use proptest::prelude::*;
use rand::Rng;

fn same(a: &Realization, b: &Realization) -> bool {
    common::bits_equal(a.values.as_slice(), b.values.as_slice())
        && (0..a.values.node_count()).all(|i| a.is_imputed(i) == b.is_imputed(i))
}

fn setup(seed: u64, max_nodes: usize) -> (rand_chacha::ChaCha8Rng, Sem, Realization) {
    let mut rng = common::rng(seed);
    let sem = common::random_sem(&mut rng, max_nodes, false, 3);
    let base = sem.sample_at(seed ^ 0x5eed, rng.random_range(0..1000)).unwrap();
    (rng, sem, base)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn imputations_commute(seed in any::<u64>()) {
        let (mut rng, sem, base) = setup(seed, 8);
        let n = sem.node_count();
        prop_assume!(n >= 2);
        let a = rng.random_range(0..n);
        let b = (a + rng.random_range(1..n)) % n;
        let pa = common::random_plan(&mut rng, &sem, &[a]);
        let pb = common::random_plan(&mut rng, &sem, &[b]);
        let ab = sem.impute(&sem.impute(&base, &pa).unwrap(), &pb).unwrap();
        let ba = sem.impute(&sem.impute(&base, &pb).unwrap(), &pa).unwrap();
        prop_assert!(same(&ab, &ba));
        let joint = ImputationPlan::new(pa.entries().iter().chain(pb.entries()).cloned()).unwrap();
        prop_assert!(same(&ab, &sem.impute(&base, &joint).unwrap()));
    }

    #[test]
    fn imputation_is_idempotent(seed in any::<u64>()) {
        let (mut rng, sem, base) = setup(seed, 8);
        let nodes: Vec<_> = common::random_subset(&mut rng, sem.node_count()).members().collect();
        let plan = common::random_plan(&mut rng, &sem, &nodes);
        let once = sem.impute(&base, &plan).unwrap();
        let twice = sem.impute(&once, &plan).unwrap();
        prop_assert!(same(&once, &twice));
    }

    #[test]
    fn non_descendants_are_untouched(seed in any::<u64>()) {
        let (mut rng, sem, base) = setup(seed, 8);
        let nodes: Vec<_> = common::random_subset(&mut rng, sem.node_count()).members().collect();
        let plan = common::random_plan(&mut rng, &sem, &nodes);
        let out = sem.impute(&base, &plan).unwrap();
        let affected = sem.dag().descendants_of_set(nodes.iter().copied());
        for i in 0..sem.node_count() {
            if let Some(v) = plan.value(i) {
                prop_assert!(common::bits_equal(out.value(i), v));
            } else if !affected.contains(i) {
                prop_assert!(common::bits_equal(out.value(i), base.value(i)), "node {} changed", i);
            }
        }
    }

    #[test]
    fn imputing_matches_fresh_realization(seed in any::<u64>()) {
        // The do-operator on a sample equals simulating the intervened
        // model from the same noise.
        let (mut rng, sem, base) = setup(seed, 8);
        let nodes: Vec<_> = common::random_subset(&mut rng, sem.node_count()).members().collect();
        let plan = common::random_plan(&mut rng, &sem, &nodes);
        let imputed = sem.impute(&base, &plan).unwrap();
        let fresh = sem.realize(base.noise.clone(), &plan).unwrap();
        prop_assert!(same(&imputed, &fresh));
        prop_assert!(same(&sem.replay(&imputed).unwrap(), &imputed));
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), index in 0u64..1_000_000) {
        let mut rng = common::rng(seed);
        let sem = common::random_sem(&mut rng, 8, false, 3);
        let a = sem.sample_at(seed, index).unwrap();
        let b = sem.sample_at(seed, index).unwrap();
        prop_assert!(same(&a, &b));
        for i in 0..sem.node_count() {
            prop_assert!(sem.domain(i).contains(a.value(i)));
        }
    }
}
