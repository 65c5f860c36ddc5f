#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub const CIRCLE_H: &str = "0.5*(x1^2 + x2^2)";

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cliffham"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

/// Flags for the J1 circle `x(t) = (cos t, sin t, 0, ...)`.
pub fn circle_flags(integrator: &str, steps: usize) -> Vec<String> {
    [
        "--structure", "J1", "--n", "1", "--hamiltonian", CIRCLE_H, "--x0", "1,0,0,0,0,0,0,0",
        "--integrator", integrator, "--dt", "0.001", "--steps",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain(std::iter::once(steps.to_string()))
    .collect()
}
