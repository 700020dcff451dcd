//! Building blocks for an end-to-end implementation of Shor's factoring
//! algorithm.
//!
//! The crate is `no_std` (it needs `alloc`) and is organised bottom-up:
//!
//! - [`rcir`]: a small classical reversible-circuit language with boolean
//!   semantics, structural reversal and typing.
//! - [`revarith`]: reversible arithmetic built in that language, from the
//!   Cuccaro majority gate up to the in-place modular multiplier.
//! - [`gateir`]: the quantum gate IR over the OpenQASM 2.0 gate set, the
//!   translation from reversible circuits, QFT/QPE and the order-finding
//!   circuit builder.
//! - [`sim`]: a sparse statevector simulator with a fast path for
//!   permutation gates.
//! - [`numtheory`]: the classical side: modular arithmetic, continued
//!   fractions, post-processing and the probabilistic factoring driver.
//! - [`analysis`]: analytic output distributions, the closed-form success
//!   bounds and exhaustive sweeps over the number-theoretic lemmas the
//!   correctness argument relies on.
//!
//! Bit and qubit numbering is little-endian throughout: bit `i` of a
//! register, and qubit `q` of a simulated state, carry weight `2^i` / `2^q`.
//! The phase-estimation control register is the one exception; see
//! [`gateir::qpe`].

#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod analysis;
pub mod gateir;
pub mod numtheory;
pub mod rcir;
pub mod revarith;
pub mod sim;

pub use gateir::{Gate, GateCircuit, GateKind, ShorParams};
pub use rcir::{BitRegister, RevCircuit};
pub use sim::{Distribution, SparseState};
