use noisy_gt::design::{build_cc, build_sc, derive_sc_params, TestDesign};
use noisy_gt::rates::c_dd;
use noisy_gt::rng::{stream, Role};
use noisy_gt::NoiseChannel;

fn mean_sd(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = v.collect();
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64;
    (m, var.sqrt())
}

#[test]
fn cc_test_sizes_concentrate() {
    let (n, m, delta) = (20_000, 600, 9);
    let d = build_cc(n, m, delta, &mut stream(3, 0, Role::Design)).unwrap();
    for t in &d.individuals {
        assert_eq!(t.len(), delta);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
    }
    // sizes are Binomial(n, Δ/m)
    let p = delta as f64 / m as f64;
    let (mean, sd) = mean_sd(d.tests.iter().map(|t| t.len() as f64));
    assert!((mean - n as f64 * p).abs() < 1e-9);
    let want_sd = (n as f64 * p * (1.0 - p)).sqrt();
    assert!((sd / want_sd - 1.0).abs() < 0.15, "sd {sd} vs {want_sd}");
}

#[test]
fn sc_blocks_have_the_right_degrees() {
    let ch = NoiseChannel::bsc(0.02).unwrap();
    let dd = c_dd(0.5, &ch).unwrap();
    let p = derive_sc_params(40_000, 0.5, 3.0, std::f64::consts::LN_2, &dd, None).unwrap();
    let d = build_sc(&p, &mut stream(4, 0, Role::Design)).unwrap();
    let meta = d.sc.as_ref().unwrap();
    assert_eq!(d.m_total(), p.m + p.m0);
    for x in 0..d.n {
        let i = meta.ind_comp[x] as usize;
        let mut per_block = vec![0usize; meta.ell + 1];
        for &a in &d.individuals[x] {
            per_block[meta.test_comp[a as usize] as usize] += 1;
        }
        let want_seed = if meta.is_seed(x) { meta.delta0 } else { 0 };
        assert_eq!(per_block[0], want_seed);
        for j in 1..=meta.s {
            assert_eq!(per_block[meta.ring(i + j - 1)], meta.delta / meta.s, "x {x} block {j}");
        }
        assert_eq!(per_block.iter().sum::<usize>(), meta.delta + want_seed);
    }
}

#[test]
fn designs_round_trip_through_text() {
    let ch = NoiseChannel::noiseless();
    let dd = c_dd(0.4, &ch).unwrap();
    let p = derive_sc_params(2_000, 0.4, 2.0, 0.7, &dd, None).unwrap();
    let d = build_sc(&p, &mut stream(1, 0, Role::Design)).unwrap();
    let back = TestDesign::parse(&d.dump()).unwrap();
    assert_eq!(back, d);
}
