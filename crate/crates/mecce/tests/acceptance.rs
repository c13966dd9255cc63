//! End-to-end acceptance gate. One test per criterion; each prints a
//! PASS/FAIL line with the measured values and fails if its bound is missed.
//! The same checks back the CLI `verify` subcommand.

use mecce::acceptance::{self, CheckResult};

fn gate(result: CheckResult) {
    println!("{}", result.line());
    assert!(result.passed, "{}", result.line());
}

#[test]
fn criterion_01_analytic_equivalence() {
    gate(acceptance::check_01_analytic_equivalence());
}

#[test]
fn criterion_02_dissipative_chain_convergence() {
    gate(acceptance::check_02_dissipative_chain_convergence());
}

#[test]
fn criterion_03_dissipation_free_limit() {
    gate(acceptance::check_03_dissipation_free_limit());
}

#[test]
fn criterion_04_echo_refocusing() {
    gate(acceptance::check_04_echo_refocusing());
}

#[test]
fn criterion_05_motional_narrowing() {
    gate(acceptance::check_05_motional_narrowing());
}

#[test]
fn criterion_06_factorization_bound() {
    gate(acceptance::check_06_factorization_bound());
}

#[test]
fn criterion_07_separable_regime() {
    gate(acceptance::check_07_separable_regime());
}

#[test]
fn criterion_08_disjoint_exactness() {
    gate(acceptance::check_08_disjoint_exactness());
}

#[test]
fn criterion_09_nv_surface_ordering() {
    gate(acceptance::check_09_nv_surface_ordering());
}

#[test]
fn criterion_10_physicality() {
    gate(acceptance::check_10_physicality());
}

#[test]
fn criterion_11_collective_dissipation() {
    gate(acceptance::check_11_collective_dissipation());
}
