//! Sparse statevector simulation.
//!
//! States are maps from basis index to amplitude. Basis index bit `q` is the
//! value of qubit `q`, so at most 64 qubits are representable. Consecutive
//! permutation gates (X, CX, ..., SWAP, CSWAP) only relabel basis states and
//! are applied as one memoised classical map.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use hashbrown::HashMap;
pub use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gateir::{self, Gate, GateCircuit, GateError, GateKind};
use crate::numtheory;

pub const DEFAULT_PRUNE_THRESHOLD: f64 = 1e-12;
pub const DEFAULT_SUPPORT_CAP: usize = 1 << 26;
pub const MAX_QUBITS: usize = 64;

/// Permutation runs are memoised in chunks of this many gates.
const PERM_CHUNK: usize = 512;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SimError {
    #[error("{0} qubits exceed the simulator limit of 64")]
    TooManyQubits(usize),
    #[error("circuit has {circuit} qubits but the state has {state}")]
    WidthMismatch { circuit: usize, state: usize },
    #[error("support grew to {support} basis states, above the cap of {cap}")]
    SupportOverflow { support: usize, cap: usize },
    #[error("basis index {index} does not fit in {num_qubits} qubits")]
    IndexOutOfRange { index: u64, num_qubits: usize },
    #[error("cannot build an eigenstate: {0}")]
    Eigenstate(&'static str),
    #[error("empty distribution")]
    EmptyDistribution,
    #[error(transparent)]
    Gate(#[from] GateError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimOptions {
    /// Amplitudes with modulus below this are dropped after each gate.
    pub prune_threshold: f64,
    /// Largest number of basis states the state may hold.
    pub support_cap: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            prune_threshold: DEFAULT_PRUNE_THRESHOLD,
            support_cap: DEFAULT_SUPPORT_CAP,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SparseState {
    num_qubits: usize,
    amps: HashMap<u64, Complex64>,
    options: SimOptions,
}

fn check_width(num_qubits: usize) -> Result<(), SimError> {
    if num_qubits > MAX_QUBITS {
        Err(SimError::TooManyQubits(num_qubits))
    } else {
        Ok(())
    }
}

fn fits(index: u64, num_qubits: usize) -> bool {
    num_qubits >= 64 || index >> num_qubits == 0
}

impl SparseState {
    /// The basis state `|index>`.
    pub fn basis(num_qubits: usize, index: u64) -> Result<Self, SimError> {
        Self::from_amplitudes(num_qubits, [(index, Complex64::new(1.0, 0.0))])
    }

    /// A state from explicit amplitudes; it is not normalised.
    pub fn from_amplitudes<I>(num_qubits: usize, amps: I) -> Result<Self, SimError>
    where
        I: IntoIterator<Item = (u64, Complex64)>,
    {
        check_width(num_qubits)?;
        let mut map = HashMap::new();
        for (index, amp) in amps {
            if !fits(index, num_qubits) {
                return Err(SimError::IndexOutOfRange { index, num_qubits });
            }
            *map.entry(index).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        Ok(SparseState {
            num_qubits,
            amps: map,
            options: SimOptions::default(),
        })
    }

    pub fn with_options(mut self, options: SimOptions) -> Self {
        self.options = options;
        self
    }

    pub fn options(&self) -> SimOptions {
        self.options
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Widens the state with new qubits in `|0>` above the existing ones.
    pub fn embed(mut self, num_qubits: usize) -> Result<Self, SimError> {
        check_width(num_qubits)?;
        assert!(num_qubits >= self.num_qubits);
        self.num_qubits = num_qubits;
        Ok(self)
    }

    pub fn amplitude(&self, index: u64) -> Complex64 {
        self.amps.get(&index).copied().unwrap_or_default()
    }

    pub fn support_len(&self) -> usize {
        self.amps.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.amps.iter().map(|(&k, &v)| (k, v))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &SparseState) -> Complex64 {
        let (small, large, conj_small) = if self.amps.len() <= other.amps.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        small
            .amps
            .iter()
            .filter_map(|(k, a)| large.amps.get(k).map(|b| if conj_small { a.conj() * b } else { b.conj() * a }))
            .sum()
    }

    fn check_support(&self) -> Result<(), SimError> {
        if self.amps.len() > self.options.support_cap {
            Err(SimError::SupportOverflow {
                support: self.amps.len(),
                cap: self.options.support_cap,
            })
        } else {
            Ok(())
        }
    }

    /// Drops small amplitudes and rescales the rest to the prior norm.
    fn prune(&mut self) {
        let before = self.norm_sqr();
        let thr = self.options.prune_threshold;
        let len = self.amps.len();
        self.amps.retain(|_, a| a.norm() >= thr);
        if self.amps.len() != len {
            let after = self.norm_sqr();
            if after > 0.0 {
                let scale = libm::sqrt(before / after);
                for a in self.amps.values_mut() {
                    *a *= scale;
                }
            }
        }
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<(), SimError> {
        if let Some(&q) = gate.qubits().iter().find(|&&q| q >= self.num_qubits) {
            return Err(GateError::QubitOutOfRange {
                qubit: q,
                num_qubits: self.num_qubits,
            }
            .into());
        }
        let kind = gate.kind();
        if kind.is_permutation() {
            let amps = core::mem::take(&mut self.amps);
            self.amps = amps.into_iter().map(|(k, a)| (permute(gate, k), a)).collect();
            return Ok(());
        }
        match kind {
            GateKind::U1 | GateKind::CU1 => {
                let mask = gate.qubits().iter().fold(0u64, |m, &q| m | 1 << q);
                let phase = Complex64::from_polar(1.0, gate.angles()[0]);
                for (k, a) in self.amps.iter_mut() {
                    if k & mask == mask {
                        *a *= phase;
                    }
                }
            }
            _ => {
                let m = single_qubit_matrix(gate);
                let bit = 1u64 << gate.qubits()[0];
                let thr = self.options.prune_threshold;
                let mut next = HashMap::with_capacity(self.amps.len() * 2);
                for &k in self.amps.keys() {
                    let base = k & !bit;
                    if k != base && self.amps.contains_key(&base) {
                        continue;
                    }
                    let a0 = self.amp_or_zero(base);
                    let a1 = self.amp_or_zero(base | bit);
                    let b0 = m[0][0] * a0 + m[0][1] * a1;
                    let b1 = m[1][0] * a0 + m[1][1] * a1;
                    if b0.norm() >= thr {
                        next.insert(base, b0);
                    }
                    if b1.norm() >= thr {
                        next.insert(base | bit, b1);
                    }
                }
                self.amps = next;
                // The new map is already pruned; restore the norm.
                self.renormalize_to(1.0);
                self.check_support()?;
            }
        }
        Ok(())
    }

    fn amp_or_zero(&self, k: u64) -> Complex64 {
        self.amps.get(&k).copied().unwrap_or_default()
    }

    fn renormalize_to(&mut self, target: f64) {
        let n = self.norm_sqr();
        if n > 0.0 && (n - target).abs() > 1e-15 {
            let scale = libm::sqrt(target / n);
            for a in self.amps.values_mut() {
                *a *= scale;
            }
        }
    }

    /// Applies a run of permutation gates, memoising the action on the
    /// qubits each chunk touches.
    fn apply_permutation_run(&mut self, gates: &[Gate]) {
        let mut entries: Vec<(u64, Complex64)> = self.amps.drain().collect();
        let mut memo: HashMap<u64, u64> = HashMap::new();
        for chunk in gates.chunks(PERM_CHUNK) {
            let mask = chunk
                .iter()
                .flat_map(|g| g.qubits().iter())
                .fold(0u64, |m, &q| m | 1 << q);
            memo.clear();
            for (k, _) in entries.iter_mut() {
                let pattern = *k & mask;
                let image = *memo
                    .entry(pattern)
                    .or_insert_with(|| chunk.iter().fold(pattern, |p, g| permute(g, p)));
                *k = (*k & !mask) | image;
            }
        }
        self.amps = entries.into_iter().collect();
    }
}

/// Image of basis index `k` under a permutation gate.
fn permute(g: &Gate, k: u64) -> u64 {
    let qs = g.qubits();
    let bit = |q: usize| (k >> q) & 1 == 1;
    match g.kind() {
        GateKind::Swap => swap_bits(k, qs[0], qs[1]),
        GateKind::CSwap => {
            if bit(qs[0]) {
                swap_bits(k, qs[1], qs[2])
            } else {
                k
            }
        }
        _ => {
            let (target, controls) = qs.split_last().expect("nonempty");
            if controls.iter().all(|&c| bit(c)) {
                k ^ 1 << target
            } else {
                k
            }
        }
    }
}

fn swap_bits(k: u64, i: usize, j: usize) -> u64 {
    let d = ((k >> i) ^ (k >> j)) & 1;
    k ^ (d << i) ^ (d << j)
}

/// Matrix of H, U2 or U3, row-major.
pub fn single_qubit_matrix(g: &Gate) -> [[Complex64; 2]; 2] {
    let c = |re: f64| Complex64::new(re, 0.0);
    let e = |theta: f64| Complex64::from_polar(1.0, theta);
    let a = g.angles();
    match g.kind() {
        GateKind::H => [[c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)], [c(FRAC_1_SQRT_2), c(-FRAC_1_SQRT_2)]],
        GateKind::U2 => {
            let (phi, lambda) = (a[0], a[1]);
            [
                [c(FRAC_1_SQRT_2), -e(lambda) * FRAC_1_SQRT_2],
                [e(phi) * FRAC_1_SQRT_2, e(phi + lambda) * FRAC_1_SQRT_2],
            ]
        }
        GateKind::U3 => {
            let (theta, phi, lambda) = (a[0], a[1], a[2]);
            let (s, co) = (libm::sin(theta / 2.0), libm::cos(theta / 2.0));
            [[c(co), -e(lambda) * s], [e(phi) * s, e(phi + lambda) * co]]
        }
        GateKind::X => [[c(0.0), c(1.0)], [c(1.0), c(0.0)]],
        GateKind::U1 => [[c(1.0), c(0.0)], [c(0.0), e(a[0])]],
        k => panic!("{k} is not a single-qubit gate"),
    }
}

/// Runs `c` on `initial`, returning the final state.
pub fn run_circuit(c: &GateCircuit, initial: &SparseState) -> Result<SparseState, SimError> {
    if c.num_qubits() != initial.num_qubits {
        return Err(SimError::WidthMismatch {
            circuit: c.num_qubits(),
            state: initial.num_qubits,
        });
    }
    check_width(c.num_qubits())?;
    let mut state = initial.clone();
    let gates = c.gates();
    let mut i = 0;
    while i < gates.len() {
        if gates[i].kind().is_permutation() {
            let end = gates[i..]
                .iter()
                .position(|g| !g.kind().is_permutation())
                .map_or(gates.len(), |p| i + p);
            if end - i == 1 {
                state.apply_gate(&gates[i])?;
            } else {
                state.apply_permutation_run(&gates[i..end]);
            }
            i = end;
        } else {
            state.apply_gate(&gates[i])?;
            i += 1;
        }
    }
    state.prune();
    Ok(state)
}

/// A finite probability distribution over measured register values.
#[derive(Clone, Debug)]
pub struct Distribution {
    outcomes: Vec<u64>,
    probs: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

impl PartialEq for Distribution {
    fn eq(&self, other: &Self) -> bool {
        self.outcomes == other.outcomes && self.probs == other.probs
    }
}

impl Distribution {
    /// Builds a normalised distribution, dropping zero weights.
    pub fn from_weights<I>(weights: I) -> Result<Self, SimError>
    where
        I: IntoIterator<Item = (u64, f64)>,
    {
        let mut acc: BTreeMap<u64, f64> = BTreeMap::new();
        for (k, w) in weights {
            if w > 0.0 {
                *acc.entry(k).or_insert(0.0) += w;
            }
        }
        let total: f64 = acc.values().sum();
        if acc.is_empty() || !(total > 0.0) {
            return Err(SimError::EmptyDistribution);
        }
        let outcomes: Vec<u64> = acc.keys().copied().collect();
        let probs: Vec<f64> = acc.values().map(|w| w / total).collect();
        let sampler = WeightedIndex::new(probs.iter().copied()).map_err(|_| SimError::EmptyDistribution)?;
        Ok(Distribution {
            outcomes,
            probs,
            sampler,
        })
    }

    pub fn probability(&self, outcome: u64) -> f64 {
        match self.outcomes.binary_search(&outcome) {
            Ok(i) => self.probs[i],
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.outcomes.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.outcomes[self.sampler.sample(rng)]
    }

    /// Half the L1 distance.
    pub fn total_variation(&self, other: &Distribution) -> f64 {
        let mut keys: Vec<u64> = self.outcomes.iter().chain(&other.outcomes).copied().collect();
        keys.sort_unstable();
        keys.dedup();
        0.5 * keys
            .into_iter()
            .map(|k| (self.probability(k) - other.probability(k)).abs())
            .sum::<f64>()
    }
}

/// Distribution of the value read from `qubits`, `qubits[0]` being the least
/// significant bit.
pub fn output_distribution(state: &SparseState, qubits: &[usize]) -> Result<Distribution, SimError> {
    if qubits.len() > 64 {
        return Err(SimError::TooManyQubits(qubits.len()));
    }
    if let Some(&q) = qubits.iter().find(|&&q| q >= state.num_qubits) {
        return Err(GateError::QubitOutOfRange {
            qubit: q,
            num_qubits: state.num_qubits,
        }
        .into());
    }
    Distribution::from_weights(state.iter().map(|(k, a)| {
        let v = qubits
            .iter()
            .enumerate()
            .fold(0u64, |v, (i, &q)| v | ((k >> q) & 1) << i);
        (v, a.norm_sqr())
    }))
}

/// `shots` samples from `dist` under `seed`, as outcome counts.
pub fn sample(dist: &Distribution, shots: u64, seed: u64) -> BTreeMap<u64, u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        *counts.entry(dist.sample_one(&mut rng)).or_insert(0) += 1;
    }
    counts
}

/// `|u_j> = r^(-1/2) sum_k exp(-2 pi i jk/r) |a^k mod N>` on `n` qubits, the
/// eigenvector of `|y> -> |ay mod N>` with eigenvalue `exp(2 pi i j/r)`.
pub fn make_eigenstate(a: u64, r: u64, modulus: u64, j: u64, n: usize) -> Result<SparseState, SimError> {
    if r == 0 || j >= r {
        return Err(SimError::Eigenstate("need 0 <= j < r"));
    }
    if numtheory::order_brute(a, modulus).ok() != Some(r) {
        return Err(SimError::Eigenstate("r is not the order of a mod N"));
    }
    let norm = 1.0 / libm::sqrt(r as f64);
    let mut y = 1u64;
    let mut amps = Vec::with_capacity(r as usize);
    for k in 0..r {
        let theta = -2.0 * core::f64::consts::PI * ((j * k) % r) as f64 / r as f64;
        amps.push((y, Complex64::from_polar(norm, theta)));
        y = numtheory::mulmod(y, a, modulus);
    }
    SparseState::from_amplitudes(n, amps)
}

/// Simulates the order-finding circuit for `(a, N)` from `|0>` and returns
/// the distribution of the `m`-bit estimate.
pub fn order_finding_distribution(a: u64, modulus: u64, options: SimOptions) -> Result<Distribution, SimError> {
    let (c, params) = gateir::shor_circuit(a, modulus)?;
    let init = SparseState::basis(c.num_qubits(), 0)?.with_options(options);
    let out = run_circuit(&c, &init)?;
    output_distribution(&out, &params.estimate_qubits())
}

#[cfg(test)]
#[path = "../tests/common/dense.rs"]
mod dense;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateir::{invert, qft, qpe, GateCircuit};
    use alloc::vec;
    use core::f64::consts::PI;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-9
    }

    fn sparse_vs_dense(c: &GateCircuit, init: u64) {
        let s = run_circuit(c, &SparseState::basis(c.num_qubits(), init).unwrap()).unwrap();
        let d = dense::run(c, init);
        for (i, amp) in d.iter().enumerate() {
            assert!(close(s.amplitude(i as u64), *amp), "index {i}: {} vs {}", s.amplitude(i as u64), amp);
        }
    }

    #[test]
    fn hadamard_pair() {
        let c = GateCircuit::from_gates(1, vec![Gate::h(0)]).unwrap();
        let s = run_circuit(&c, &SparseState::basis(1, 0).unwrap()).unwrap();
        assert!(close(s.amplitude(0), Complex64::new(FRAC_1_SQRT_2, 0.0)));
        assert!(close(s.amplitude(1), Complex64::new(FRAC_1_SQRT_2, 0.0)));
        let c = GateCircuit::from_gates(1, vec![Gate::h(0), Gate::h(0)]).unwrap();
        let s = run_circuit(&c, &SparseState::basis(1, 0).unwrap()).unwrap();
        assert_eq!(s.support_len(), 1);
        assert!(close(s.amplitude(0), Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn matches_dense_on_mixed_circuits() {
        let gates = vec![
            Gate::h(0),
            Gate::h(2),
            Gate::cx(0, 1),
            Gate::new(GateKind::U3, &[1], &[0.3, 1.1, -0.4]).unwrap(),
            Gate::mcx(&[0, 1], 3).unwrap(),
            Gate::cu1(0.7, 2, 3),
            Gate::new(GateKind::CSwap, &[3, 0, 2], &[]).unwrap(),
            Gate::new(GateKind::U2, &[3], &[0.2, 0.9]).unwrap(),
            Gate::swap(1, 2),
            Gate::mcx(&[0, 1, 2], 3).unwrap(),
            Gate::u1(-1.3, 0),
            Gate::x(2),
            Gate::mcx(&[3, 2, 1, 0], 4).unwrap(),
        ];
        let c = GateCircuit::from_gates(5, gates).unwrap();
        for init in 0..32 {
            sparse_vs_dense(&c, init);
        }
        let inv = invert(&c);
        let mut both = c.clone();
        both.append(&inv);
        let s = run_circuit(&both, &SparseState::basis(5, 9).unwrap()).unwrap();
        assert!(close(s.amplitude(9), Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn qft_is_bit_reversed_dft() {
        for k in 1..=5usize {
            let size = 1u64 << k;
            let rev = |x: u64| x.reverse_bits() >> (64 - k);
            for x in 0..size {
                let s = run_circuit(&qft(k), &SparseState::basis(k, rev(x)).unwrap()).unwrap();
                for y in 0..size {
                    let want = Complex64::from_polar(
                        1.0 / libm::sqrt(size as f64),
                        2.0 * PI * ((x * y) % size) as f64 / size as f64,
                    );
                    assert!(close(s.amplitude(rev(y)), want), "k={k} x={x} y={y}");
                }
            }
            sparse_vs_dense(&qft(k), 1);
        }
    }

    #[test]
    fn qpe_recovers_exact_phase() {
        // U = U1(2 pi theta) on one qubit, eigenstate |1>.
        for (k, num) in [(2usize, 1u64), (3, 5), (4, 11)] {
            let theta = num as f64 / (1u64 << k) as f64;
            let mut c = GateCircuit::new(k + 1);
            c.push(Gate::x(k)).unwrap();
            c.append(
                &qpe(k, 1, |i| {
                    GateCircuit::from_gates(1, vec![Gate::u1(2.0 * PI * theta * (1u64 << i) as f64, 0)])
                })
                .unwrap(),
            );
            let s = run_circuit(&c, &SparseState::basis(k + 1, 0).unwrap()).unwrap();
            let qubits: Vec<usize> = (0..k).rev().collect();
            let d = output_distribution(&s, &qubits).unwrap();
            assert!((d.probability(num) - 1.0).abs() < 1e-9, "k={k}");
        }
    }

    #[test]
    fn permutation_runs_match_gatewise() {
        let gates: Vec<Gate> = (0..2000)
            .map(|i| match i % 4 {
                0 => Gate::cx(i % 5, (i + 1) % 5),
                1 => Gate::mcx(&[(i + 2) % 5, (i + 3) % 5], i % 5).unwrap(),
                2 => Gate::swap(i % 5, (i + 4) % 5),
                _ => Gate::x((i * 7) % 5),
            })
            .collect();
        let amps = (0..32u64).map(|k| (k, Complex64::new(k as f64, 1.0)));
        let init = SparseState::from_amplitudes(5, amps).unwrap();
        let mut gatewise = init.clone();
        for g in &gates {
            gatewise.apply_gate(g).unwrap();
        }
        let mut run = init;
        run.apply_permutation_run(&gates);
        for k in 0..32 {
            assert_eq!(gatewise.amplitude(k), run.amplitude(k));
        }
    }

    #[test]
    fn support_cap_is_enforced() {
        let c = GateCircuit::from_gates(3, vec![Gate::h(0), Gate::h(1), Gate::h(2)]).unwrap();
        let init = SparseState::basis(3, 0).unwrap().with_options(SimOptions {
            support_cap: 4,
            ..SimOptions::default()
        });
        assert_eq!(
            run_circuit(&c, &init).unwrap_err(),
            SimError::SupportOverflow { support: 8, cap: 4 }
        );
    }

    #[test]
    fn eigenstate_is_eigenvector() {
        let (a, n_mod, r) = (2u64, 15u64, 4u64);
        for j in 0..r {
            let u = make_eigenstate(a, r, n_mod, j, 4).unwrap();
            assert!((u.norm_sqr() - 1.0).abs() < 1e-12);
            let image = SparseState::from_amplitudes(4, u.iter().map(|(y, amp)| ((y * a) % n_mod, amp))).unwrap();
            let lambda = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / r as f64);
            for (y, amp) in u.iter() {
                assert!(close(image.amplitude(y), lambda * amp));
            }
        }
        assert!(make_eigenstate(2, 3, 15, 0, 4).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        let d = Distribution::from_weights([(0, 1.0), (3, 3.0)]).unwrap();
        assert_eq!(sample(&d, 1000, 7), sample(&d, 1000, 7));
        let counts = sample(&d, 4000, 1);
        let frac = counts[&3] as f64 / 4000.0;
        assert!((frac - 0.75).abs() < 0.05);
        assert!(Distribution::from_weights([(1, 0.0)]).is_err());
    }
}
