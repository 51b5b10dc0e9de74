use noisy_gt::decode::exact::{binomial, psi_of};
use noisy_gt::decode::{bp_decode, dd_decode, exhaustive_posterior, hamming_error, PriorMode};
use noisy_gt::design::TestDesign;
use noisy_gt::harness::{run_oracle_check, ExperimentConfig};
use noisy_gt::NoiseChannel;
use proptest::prelude::*;

fn ring6() -> TestDesign {
    let mut tests: Vec<Vec<u32>> = (0..6).map(|x| vec![x]).collect();
    tests.extend((0..6).map(|x| vec![x, (x + 1) % 6]));
    TestDesign::from_member_lists(6, tests).unwrap()
}

#[test]
fn oracle_suite_passes() {
    let cfg = ExperimentConfig { trials: 100, master_seed: 99, ..Default::default() };
    let rep = run_oracle_check(&cfg).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!(rep.max_normalization_error < 1e-12);
    assert!(rep.max_bp_error < 1e-8);
}

#[test]
fn no_tests_gives_uniform_posterior() {
    let design = TestDesign::from_member_lists(5, vec![]).unwrap();
    let t = exhaustive_posterior(&design, &[], &NoiseChannel::bsc(0.1).unwrap(), 2, PriorMode::HardK).unwrap();
    assert_eq!(t.configs.len() as u128, binomial(5, 2));
    for p in &t.probs {
        assert!((p - 0.1).abs() < 1e-15);
    }
}

#[test]
fn noiseless_ring_is_a_point_mass_and_dd_agrees() {
    let design = ring6();
    let sigma = [false, true, false, false, true, false];
    let displayed: Vec<bool> = design.tests.iter().map(|t| t.iter().any(|&x| sigma[x as usize])).collect();
    let t = exhaustive_posterior(&design, &displayed, &NoiseChannel::noiseless(), 2, PriorMode::HardK).unwrap();
    let (map, p) = t.map();
    assert_eq!(map, 0b010010);
    assert!((p - 1.0).abs() < 1e-15);
    let est = dd_decode(&design, &displayed, 0.01, 0.4, 2).to_bits().unwrap();
    assert_eq!(est, sigma);
}

#[test]
fn posterior_table_is_stable() {
    let design = ring6();
    let displayed = [true, false, false, true, false, true, true, false, true, true, false, false];
    let ch = NoiseChannel::new(0.9, 0.1, 0.2, 0.8).unwrap();
    let t = exhaustive_posterior(&design, &displayed, &ch, 2, PriorMode::HardK).unwrap();
    assert_eq!(format!("{:016x}", t.hash()), GOLDEN);
    let w: f64 = t.configs.iter().map(|&s| psi_of(&design, &displayed, &ch, s)).sum();
    assert!((w - t.z).abs() <= 1e-14 * t.z);
}

const GOLDEN: &str = "2982e1873703f463";

#[test]
fn bp_on_a_path_matches_exact() {
    // path 0 - a - 1 - b - 2 - c - 3
    let design = TestDesign::from_member_lists(4, vec![vec![0, 1], vec![1, 2], vec![2, 3]]).unwrap();
    let ch = NoiseChannel::new(0.85, 0.15, 0.25, 0.75).unwrap();
    let displayed = [true, false, true];
    let exact = exhaustive_posterior(&design, &displayed, &ch, 1, PriorMode::ProductBernoulli).unwrap();
    let bp = bp_decode(&design, &displayed, &ch, 1, 20, PriorMode::ProductBernoulli).unwrap();
    for (a, b) in exact.marginals().iter().zip(bp.marginals()) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

fn pack(bits: &[bool]) -> Vec<u64> {
    bits.chunks(64).map(|c| c.iter().enumerate().fold(0u64, |w, (i, &b)| w | (b as u64) << i)).collect()
}

proptest! {
    #[test]
    fn hamming_is_popcount_of_xor(pairs in prop::collection::vec(any::<(bool, bool)>(), 0..300)) {
        let (a, b): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
        let want: u32 = pack(&a).iter().zip(pack(&b)).map(|(x, y)| (x ^ y).count_ones()).sum();
        prop_assert_eq!(hamming_error(&a, &b).unwrap(), want as usize);
    }
}
