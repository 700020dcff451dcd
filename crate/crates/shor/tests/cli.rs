use std::process::{Command, Output};

use shor::qasm;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shor"))
        .args(args)
        .env_remove("SHOR_SEED")
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

#[test]
fn gen_writes_a_parseable_circuit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.qasm");
    let out = run(&["gen", "2", "7", "-o", path.to_str().unwrap(), "--preamble"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let parsed = qasm::parse(&text).unwrap();
    assert_eq!(parsed.measured.len(), 6);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains(&format!("gates = {}", parsed.circuit.len())));
}

#[test]
fn parameter_errors_exit_with_two() {
    assert_eq!(code(&["gen", "1", "7"]), 2);
    assert_eq!(code(&["gen", "4", "8"]), 2);
    assert_eq!(code(&["factor", "13"]), 2);
}

#[test]
fn classical_shortcuts_factor_without_the_quantum_step() {
    let out = run(&["factor", "16"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("factor = 2"));
    let out = run(&["factor", "27"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("factor = 3"));
}

#[test]
fn factor_is_reproducible_under_a_seed() {
    let a = run(&["factor", "21", "--seed", "5"]);
    let b = run(&["factor", "21", "--seed", "5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn injected_fault_exits_with_four() {
    assert_eq!(
        code(&[
            "verify",
            "--inject-fault",
            "--prime-power-limit",
            "64",
            "--cfe-limit",
            "16",
            "--totient-limit",
            "64",
            "--reduction-limit",
            "64",
            "--imm-limit",
            "8",
            "--eigen-limit",
            "8",
            "--qft-qubits",
            "3",
        ]),
        4
    );
}

#[test]
fn unwritable_output_exits_with_five() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("c.qasm");
    assert_eq!(code(&["gen", "2", "7", "-o", path.to_str().unwrap()]), 5);
}
