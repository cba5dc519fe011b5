use bqsm::entropy::{binary_entropy, inverse_binary_entropy, min_entropy, shannon_entropy, split_min_entropy};
use bqsm::hashing::Bits;
use bqsm::qkd::{binary_rate, noise_threshold, overall_bound};
use bqsm::qstate::{random_density, trace_distance, PureState};
use bqsm::uncertainty::{maassen_uffink, max_prob_relation, two_basis_relation};
use bqsm::{derive_seed, Distribution, JointDistribution};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mass(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_ordering(m in mass(8)) {
        let total: f64 = m.iter().sum();
        let p = Distribution::new(m.iter().map(|v| v / total).collect()).unwrap();
        let (hmin, h) = (min_entropy(&p), shannon_entropy(&p));
        prop_assert!(hmin <= h + 1e-12);
        prop_assert!(h <= 3.0 + 1e-12);
    }

    #[test]
    fn binary_entropy_round_trip(p in 0.001f64..0.5) {
        let h = binary_entropy(p).unwrap();
        prop_assert!((inverse_binary_entropy(h).unwrap() - p).abs() < 1e-9);
    }

    #[test]
    fn threshold_is_a_root(h in 0.3f64..0.99) {
        let p = noise_threshold(h).unwrap();
        prop_assert!(binary_rate(h, p).unwrap().abs() < 1e-6);
        prop_assert!(binary_rate(h, p * 0.9).unwrap() > 0.0);
    }

    #[test]
    fn splitting_holds(m in mass(16)) {
        let total: f64 = m.iter().sum();
        let j = JointDistribution::new(vec![4, 4], m.iter().map(|v| v / total).collect()).unwrap();
        let alpha = -j.flatten().max().log2();
        let s = split_min_entropy(&j, alpha).unwrap();
        prop_assert!(s.holds && s.achieved >= alpha / 2.0 - 1e-9, "{:?}", s);
    }

    #[test]
    fn uncertainty_relations_on_mixed_states(seed in any::<u64>(), n in 1usize..4, rank in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(n, rank.min(1 << n), &mut rng).unwrap();
        prop_assert!(maassen_uffink(&rho).unwrap().holds());
        let (sum, prod) = max_prob_relation(&rho).unwrap();
        prop_assert!(sum.holds() && prod.holds());
        let all: Vec<usize> = (0..n).collect();
        prop_assert!(two_basis_relation(&rho, &all, &all).unwrap().holds());
    }

    #[test]
    fn trace_distance_is_a_metric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_density(2, 2, &mut rng).unwrap();
        let b = random_density(2, 4, &mut rng).unwrap();
        let c = PureState::haar(2, &mut rng).unwrap().density();
        let (ab, bc, ac) = (trace_distance(&a, &b).unwrap(), trace_distance(&b, &c).unwrap(), trace_distance(&a, &c).unwrap());
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
        prop_assert!(ac <= ab + bc + 1e-9);
        prop_assert!(trace_distance(&a, &a).unwrap() < 1e-9);
    }

    #[test]
    fn bits_hex_round_trip(v in prop::collection::vec(0u8..2, 1..70)) {
        let b = Bits::from_bits(&v);
        prop_assert_eq!(Bits::from_hex(&b.to_hex(), v.len()).unwrap(), b.clone());
        prop_assert_eq!(b.xor(&b).weight(), 0);
    }

    #[test]
    fn derived_seeds_distinct(root in any::<u64>(), i in 0u64..1000) {
        prop_assert_ne!(derive_seed(root, i), derive_seed(root, i + 1));
    }
}

#[test]
fn overall_bound_increases_with_dimension() {
    let hs: Vec<f64> = [2, 3, 4, 8, 16].iter().map(|&d| overall_bound(d).unwrap()).collect();
    assert!(hs.windows(2).all(|w| w[0] < w[1]), "{hs:?}");
}
