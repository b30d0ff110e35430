use std::process::Command;

fn cgsim(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cgsim")).args(args).output().expect("spawn cgsim")
}

const SMALL: &[&str] = &["--bs", "16", "--users", "4", "--mod", "qpsk", "--snr", "-6:0:2", "--trials", "20", "--subcarriers", "32"];

#[test]
fn identical_runs_write_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = ["a.csv", "b.csv"].iter().map(|n| dir.path().join(n)).collect();
    for p in &paths {
        let mut args = vec!["uplink"];
        args.extend_from_slice(SMALL);
        args.extend_from_slice(&["--seed", "5", "--out", p.to_str().unwrap()]);
        let out = cgsim(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (a, b) = (std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "snr_db,frames,block_errors,bler,bler_lo,bler_hi,real_mults_mean");
    assert_eq!(body.len(), 5);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "bs = 16\nusers = 4\nmod = qpsk\nsnr = 0\ntrials = 3\nsubcarriers = 32\nmethod = cgls\n").unwrap();
    let out = cgsim(&["downlink", "--config", cfg.to_str().unwrap(), "--method", "neumann", "--iters", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# method=neumann") && text.contains("# bs=16") && text.contains("# link=downlink"));
}

#[test]
fn configuration_errors_exit_with_2() {
    for args in [
        &["uplink", "--trials", "0"][..],
        &["uplink", "--bs", "4", "--users", "8"],
        &["uplink", "--snr", "5:1:1"],
        &["uplink", "--mod", "8psk"],
        &["uplink", "--bogus"],
        &["downlink", "--config", "/nonexistent/cgsim.cfg"],
    ] {
        assert_eq!(cgsim(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn tradeoff_and_count_subcommands() {
    let mut args = vec!["tradeoff", "--method", "cg", "--iters", "2"];
    args.extend_from_slice(SMALL);
    let out = cgsim(&args);
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(table.lines().nth(1).unwrap().starts_with("chol"));

    let out = cgsim(&["count", "--bs", "32", "--users", "8"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("cheaper than cholesky for K <="));
}

#[test]
fn unwritable_output_exits_with_1() {
    let mut args = vec!["uplink", "--out", "/nonexistent/dir/out.csv"];
    args.extend_from_slice(SMALL);
    assert_eq!(cgsim(&args).status.code(), Some(1));
}
