use noisy_gt::channel::{h, kl};

fn rows() -> Vec<(String, f64, Option<f64>, f64)> {
    let text = include_str!("data/info_reference.csv");
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let z = if f[2].is_empty() { None } else { Some(f[2].parse().unwrap()) };
            (f[0].to_string(), f[1].parse().unwrap(), z, f[3].parse().unwrap())
        })
        .collect()
}

#[test]
fn entropy_matches_reference() {
    let mut seen = 0;
    for (kind, y, _, want) in rows().into_iter().filter(|r| r.0 == "h") {
        let got = h(y);
        assert!((got - want).abs() <= 1e-14 + 1e-13 * want.abs(), "{kind}({y}) = {got}, want {want}");
        seen += 1;
    }
    assert_eq!(seen, 101);
}

#[test]
fn kl_matches_reference() {
    let mut seen = 0;
    for (_, y, z, want) in rows().into_iter().filter(|r| r.0 == "kl") {
        let z = z.unwrap();
        let got = kl(y, z);
        assert!((got - want).abs() <= 1e-14 + 1e-12 * want.abs(), "kl({y}, {z}) = {got}, want {want}");
        seen += 1;
    }
    assert_eq!(seen, 100);
}
