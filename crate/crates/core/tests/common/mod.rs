#![allow(dead_code)]

pub use num_complex::Complex64;
pub use shor_core::gateir::{Gate, GateCircuit, GateKind};
pub use std::vec::Vec;

pub mod dense;

use proptest::prelude::*;
use shor_core::rcir::RevCircuit;

/// Random one-qubit-angle gate circuits over `n` qubits.
pub fn gate_strategy(n: usize) -> impl Strategy<Value = Gate> {
    let angle = -7.0f64..7.0;
    let qs = proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 1..=n.min(5)).prop_shuffle();
    (0usize..12, qs, proptest::collection::vec(angle, 3)).prop_filter_map("arity", |(k, qs, angles)| {
        let kind = GateKind::ALL[k];
        if qs.len() < kind.arity() {
            return None;
        }
        Gate::new(kind, &qs[..kind.arity()], &angles[..kind.num_angles()]).ok()
    })
}

pub fn circuit_strategy(n: usize, max_len: usize) -> impl Strategy<Value = GateCircuit> {
    proptest::collection::vec(gate_strategy(n), 0..max_len)
        .prop_map(move |gates| GateCircuit::from_gates(n, gates).unwrap())
}

/// Well-typed reversible circuits on `width` bits with at most `max_ctrl`
/// enclosing controls per leaf.
pub fn rcir_strategy(width: usize, max_ctrl: usize) -> impl Strategy<Value = RevCircuit> {
    let block = proptest::sample::subsequence((0..width).collect::<Vec<_>>(), 2..=width.min(max_ctrl + 2))
        .prop_shuffle()
        .prop_flat_map(move |bits| {
            let nctrl = bits.len() - 2;
            let controls = bits[..nctrl].to_vec();
            let free = bits[nctrl..].to_vec();
            let leaf = prop_oneof![
                Just(RevCircuit::not(free[0])),
                Just(RevCircuit::not(free[1])),
                Just(RevCircuit::swap(free[0], free[1])),
            ];
            (Just(controls), proptest::collection::vec(leaf, 1..4))
        })
        .prop_map(|(controls, leaves)| {
            controls
                .iter()
                .rev()
                .fold(RevCircuit::seq_all(leaves), |body, &c| RevCircuit::ctrl(c, body))
        });
    proptest::collection::vec(block, 0..12).prop_map(RevCircuit::seq_all)
}
