//! End-to-end runs of the command-line tool.

use std::process::{Command, Output};

fn pim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pim-arith")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_exhaustive_add_passes() {
    let o = pim(&["verify", "--op", "add", "--variant", "serial-fixed", "--n", "4", "--exhaustive"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("op,variant,N_or_fmt,cases,passed,failed,first_fail_inputs\n"));
    assert!(out.contains("add,serial,\"4\",256,256,0,"));
}

#[test]
fn verify_random_float_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let o = pim(&[
        "verify", "--op", "fmul", "--variant", "parallel", "--fmt", "5,4", "--random", "300", "--seed", "3", "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("fmul,parallel,\"5,4\",300,300,0"));
}

#[test]
fn quick_suite_passes() {
    assert!(pim(&["verify", "--all", "--quick"]).status.success());
}

#[test]
fn unknown_op_is_a_usage_error() {
    let o = pim(&["verify", "--op", "frobnicate", "--n", "4", "--exhaustive"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown op"));
}

#[test]
fn cost_table_rows() {
    let o = pim(&["cost", "--op", "add", "--variant", "serial", "--n", "8,16,32"]);
    assert!(o.status.success());
    let cycles: Vec<u64> = stdout(&o).lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert_eq!(cycles.len(), 3);
    assert_eq!(cycles[2] - cycles[1], 2 * (cycles[1] - cycles[0]));

    let karatsuba = pim(&["cost", "--op", "mul", "--variant", "serial", "--n", "32", "--threshold", "20"]);
    let plain = pim(&["cost", "--op", "mul", "--variant", "serial", "--n", "32", "--threshold", "32"]);
    let c = |o: &Output| -> u64 { stdout(o).lines().nth(1).unwrap().split(',').nth(3).unwrap().parse().unwrap() };
    assert!(c(&karatsuba) < c(&plain));

    let o = pim(&["cost", "--op", "toolbox-prefix", "--n", "16"]);
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    assert_eq!(row.split(',').nth(6), Some("7"));
}

#[test]
fn throughput_needs_every_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let hw = dir.path().join("hw.toml");
    std::fs::write(&hw, "rows = 1024\ncols = 1024\narrays = 65536\nclock_period = 1e-9\n").unwrap();
    let o = pim(&["throughput", "--op", "add", "--n", "32", "--hw", hw.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("energy_per_gate"));
}

#[test]
fn throughput_with_illustrative_config() {
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/hw-illustrative.toml");
    let o = pim(&["throughput", "--op", "add", "--variant", "parallel", "--n", "32", "--hw", cfg]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn dump_re_simulates() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("add2.txt");
    let o = pim(&["dump", "--op", "add", "--variant", "serial", "--n", "2", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let prog = pim_arith::dump::parse(&text).unwrap();
    assert_eq!(pim_arith::dump::dump(&prog), text);
    for x in 0..4u128 {
        for y in 0..4u128 {
            assert_eq!(prog.evaluate(&[("x", x), ("y", y)]).unwrap()[0].1, x + y);
        }
    }
}

#[test]
fn dump_rejects_ambiguous_selection() {
    assert_eq!(pim(&["dump", "--op", "add", "--n", "4"]).status.code(), Some(2));
}
