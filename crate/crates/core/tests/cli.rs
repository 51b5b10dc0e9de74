use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_noisy-gt"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

const SIM: &[&str] = &["simulate", "--n", "3000", "--theta", "0.4", "--c-mult", "2", "--trials", "6", "--seed", "11", "--no-timing"];

#[test]
fn rates_header_and_rows() {
    let (code, out, _) = run(&["rates", "--channel", "bsc:0.05", "--theta-grid", "0.25,0.5"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "theta,c_sh,c_ex,d_opt,c_ex1,c_ex2,c_dd,dd_alpha,dd_beta,dd_d,rate_ex,rate_sh,rate_dd"
    );
    assert_eq!(lines.count(), 2);
}

#[test]
fn simulation_is_reproducible_across_job_counts() {
    let (c1, a, _) = run(&[SIM, &["--jobs", "1"]].concat());
    let (c2, b, _) = run(&[SIM, &["--jobs", "3"]].concat());
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    let header = a.lines().next().unwrap();
    assert!(header.starts_with("trial_id,decoder,n,k,m,c_mult,hamming_error,exact_recovery,rounds_used"));
    assert!(!header.contains("wall_time_ms"));
    assert_eq!(a.lines().count(), 1 + 6 + 1);
    assert!(a.lines().last().unwrap().starts_with("aggregate,"));
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.kv");
    std::fs::write(&cfg, "# same run as SIM\nn = 3000\ntheta = 0.4\nc_mult = 2\ntrials = 6\nseed = 11\n").unwrap();
    let out = dir.path().join("sim.csv");
    let (code, _, _) = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--no-timing",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let (_, flags, _) = run(SIM);
    assert_eq!(std::fs::read_to_string(out).unwrap(), flags);
}

#[test]
fn exit_codes() {
    // below the SPEX margin
    let (code, _, err) = run(&["simulate", "--n", "3000", "--c-mult", "1.02", "--trials", "1"]);
    assert_eq!(code, 2);
    assert!(err.contains("margin"), "{err}");
    // bad channel string
    let (code, _, _) = run(&["rates", "--channel", "bsc:1.5"]);
    assert_eq!(code, 2);
    // spex needs the coupled design
    let (code, _, _) = run(&["simulate", "--design", "cc", "--decoder", "spex"]);
    assert_eq!(code, 2);
    let (code, out, _) = run(&["oracle-check", "--trials", "20"]);
    assert_eq!(code, 0);
    assert!(out.lines().nth(1).unwrap().ends_with(",true"));
}
