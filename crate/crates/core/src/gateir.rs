//! Quantum gate IR over the OpenQASM 2.0 gate set, with the translation
//! from reversible circuits, QFT and phase estimation, and the
//! order-finding circuit builder.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use thiserror::Error;

use crate::numtheory;
use crate::rcir::{Leaf, RcirError, RevCircuit};
use crate::revarith::{self, ArithError, ArithLayout};

/// Deepest multi-controlled NOT in the gate set (C4X).
pub const MAX_CONTROLS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    X,
    H,
    U1,
    U2,
    U3,
    CU1,
    Swap,
    CSwap,
    CX,
    CCX,
    C3X,
    C4X,
}

impl GateKind {
    pub const ALL: [GateKind; 12] = [
        GateKind::X,
        GateKind::H,
        GateKind::U1,
        GateKind::U2,
        GateKind::U3,
        GateKind::CU1,
        GateKind::Swap,
        GateKind::CSwap,
        GateKind::CX,
        GateKind::CCX,
        GateKind::C3X,
        GateKind::C4X,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::X | GateKind::H | GateKind::U1 | GateKind::U2 | GateKind::U3 => 1,
            GateKind::CU1 | GateKind::Swap | GateKind::CX => 2,
            GateKind::CSwap | GateKind::CCX => 3,
            GateKind::C3X => 4,
            GateKind::C4X => 5,
        }
    }

    pub fn num_angles(self) -> usize {
        match self {
            GateKind::U1 | GateKind::CU1 => 1,
            GateKind::U2 => 2,
            GateKind::U3 => 3,
            _ => 0,
        }
    }

    /// Lowercase OpenQASM name.
    pub fn name(self) -> &'static str {
        match self {
            GateKind::X => "x",
            GateKind::H => "h",
            GateKind::U1 => "u1",
            GateKind::U2 => "u2",
            GateKind::U3 => "u3",
            GateKind::CU1 => "cu1",
            GateKind::Swap => "swap",
            GateKind::CSwap => "cswap",
            GateKind::CX => "cx",
            GateKind::CCX => "ccx",
            GateKind::C3X => "c3x",
            GateKind::C4X => "c4x",
        }
    }

    pub fn from_name(name: &str) -> Option<GateKind> {
        GateKind::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Gates that map basis states to basis states.
    pub fn is_permutation(self) -> bool {
        matches!(
            self,
            GateKind::X
                | GateKind::Swap
                | GateKind::CSwap
                | GateKind::CX
                | GateKind::CCX
                | GateKind::C3X
                | GateKind::C4X
        )
    }

    /// Multi-controlled NOT with `controls` controls.
    pub fn mcx(controls: usize) -> Option<GateKind> {
        [GateKind::X, GateKind::CX, GateKind::CCX, GateKind::C3X, GateKind::C4X]
            .get(controls)
            .copied()
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum GateError {
    #[error("{kind} takes {expected} qubits, got {actual}")]
    Arity { kind: GateKind, expected: usize, actual: usize },
    #[error("{kind} takes {expected} angles, got {actual}")]
    AngleCount { kind: GateKind, expected: usize, actual: usize },
    #[error("qubit {0} used twice in one gate")]
    DuplicateQubit(usize),
    #[error("qubit {qubit} out of range for {num_qubits} qubits")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("{0} has no controlled form in the gate set")]
    Uncontrollable(GateKind),
    #[error("control qubit {0} is already used by the circuit")]
    ControlInUse(usize),
    #[error("{depth} controls on {leaf:?} (controls {controls:?}) exceed the gate set")]
    ControlDepth {
        depth: usize,
        controls: Vec<usize>,
        leaf: Leaf,
    },
    #[error(transparent)]
    Typing(#[from] RcirError),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("invalid order-finding parameters a={a}, N={modulus}: {reason}")]
    Params { a: u64, modulus: u64, reason: &'static str },
}

/// One gate: qubits are listed controls first, target(s) last.
#[derive(Clone, Copy, PartialEq)]
pub struct Gate {
    kind: GateKind,
    qubits: [usize; 5],
    angles: [f64; 3],
}

impl Gate {
    pub fn new(kind: GateKind, qubits: &[usize], angles: &[f64]) -> Result<Gate, GateError> {
        if qubits.len() != kind.arity() {
            return Err(GateError::Arity {
                kind,
                expected: kind.arity(),
                actual: qubits.len(),
            });
        }
        if angles.len() != kind.num_angles() {
            return Err(GateError::AngleCount {
                kind,
                expected: kind.num_angles(),
                actual: angles.len(),
            });
        }
        for (i, q) in qubits.iter().enumerate() {
            if qubits[..i].contains(q) {
                return Err(GateError::DuplicateQubit(*q));
            }
        }
        let mut g = Gate {
            kind,
            qubits: [0; 5],
            angles: [0.0; 3],
        };
        g.qubits[..qubits.len()].copy_from_slice(qubits);
        g.angles[..angles.len()].copy_from_slice(angles);
        Ok(g)
    }

    fn fixed(kind: GateKind, qubits: &[usize], angles: &[f64]) -> Gate {
        Gate::new(kind, qubits, angles).expect("well-formed gate")
    }

    pub fn x(q: usize) -> Gate {
        Gate::fixed(GateKind::X, &[q], &[])
    }

    pub fn h(q: usize) -> Gate {
        Gate::fixed(GateKind::H, &[q], &[])
    }

    pub fn u1(lambda: f64, q: usize) -> Gate {
        Gate::fixed(GateKind::U1, &[q], &[lambda])
    }

    pub fn cu1(lambda: f64, control: usize, target: usize) -> Gate {
        Gate::fixed(GateKind::CU1, &[control, target], &[lambda])
    }

    pub fn cx(control: usize, target: usize) -> Gate {
        Gate::fixed(GateKind::CX, &[control, target], &[])
    }

    pub fn swap(a: usize, b: usize) -> Gate {
        Gate::fixed(GateKind::Swap, &[a, b], &[])
    }

    /// Multi-controlled NOT.
    pub fn mcx(controls: &[usize], target: usize) -> Result<Gate, GateError> {
        let kind = GateKind::mcx(controls.len()).ok_or(GateError::Uncontrollable(GateKind::C4X))?;
        let mut qs = [0usize; 5];
        qs[..controls.len()].copy_from_slice(controls);
        qs[controls.len()] = target;
        Gate::new(kind, &qs[..=controls.len()], &[])
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits[..self.kind.arity()]
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles[..self.kind.num_angles()]
    }

    pub fn max_qubit(&self) -> usize {
        self.qubits().iter().copied().max().unwrap_or(0)
    }

    pub fn inverse(&self) -> Gate {
        let a = self.angles;
        match self.kind {
            GateKind::U1 | GateKind::CU1 => Gate {
                angles: [-a[0], 0.0, 0.0],
                ..*self
            },
            // U2(φ, λ)† = U2(-λ - π, -φ + π)
            GateKind::U2 => Gate {
                angles: [-a[1] - PI, -a[0] + PI, 0.0],
                ..*self
            },
            // U3(θ, φ, λ)† = U3(-θ, -λ, -φ)
            GateKind::U3 => Gate {
                angles: [-a[0], -a[2], -a[1]],
                ..*self
            },
            _ => *self,
        }
    }

    fn shifted(&self, offset: usize) -> Gate {
        let mut g = *self;
        for q in &mut g.qubits[..self.kind.arity()] {
            *q += offset;
        }
        g
    }

    /// This gate with one more control, as one or more gates.
    fn controlled(&self, control: usize) -> Result<Vec<Gate>, GateError> {
        let qs = self.qubits();
        Ok(match self.kind {
            GateKind::U1 => alloc::vec![Gate::cu1(self.angles[0], control, qs[0])],
            GateKind::Swap => alloc::vec![Gate::fixed(GateKind::CSwap, &[control, qs[0], qs[1]], &[])],
            // c-swap(c, i, j) = CX(j, i); C^2X(q, c, i -> j); CX(j, i)
            GateKind::CSwap => alloc::vec![
                Gate::cx(qs[2], qs[1]),
                Gate::mcx(&[control, qs[0], qs[1]], qs[2])?,
                Gate::cx(qs[2], qs[1]),
            ],
            k if GateKind::mcx(qs.len() - 1) == Some(k) => {
                if qs.len() > MAX_CONTROLS {
                    return Err(GateError::Uncontrollable(k));
                }
                let mut controls = alloc::vec![control];
                controls.extend_from_slice(&qs[..qs.len() - 1]);
                alloc::vec![Gate::mcx(&controls, qs[qs.len() - 1])?]
            }
            k => return Err(GateError::Uncontrollable(k)),
        })
    }
}

impl fmt::Debug for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if !self.angles().is_empty() {
            write!(f, "{:?}", self.angles())?;
        }
        write!(f, " {:?}", self.qubits())
    }
}

/// A gate sequence over qubits `0..num_qubits`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct GateCircuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl GateCircuit {
    pub fn new(num_qubits: usize) -> Self {
        GateCircuit {
            num_qubits,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(num_qubits: usize, gates: Vec<Gate>) -> Result<Self, GateError> {
        let mut c = GateCircuit::new(num_qubits);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), GateError> {
        if let Some(&q) = gate.qubits().iter().find(|&&q| q >= self.num_qubits) {
            return Err(GateError::QubitOutOfRange {
                qubit: q,
                num_qubits: self.num_qubits,
            });
        }
        self.gates.push(gate);
        Ok(())
    }

    /// Appends `other`, widening this circuit if needed.
    pub fn append(&mut self, other: &GateCircuit) {
        self.num_qubits = self.num_qubits.max(other.num_qubits);
        self.gates.extend_from_slice(&other.gates);
    }

    pub fn with_num_qubits(mut self, num_qubits: usize) -> Self {
        assert!(self.gates.iter().all(|g| g.max_qubit() < num_qubits));
        self.num_qubits = num_qubits;
        self
    }

    pub fn uses_qubit(&self, q: usize) -> bool {
        self.gates.iter().any(|g| g.qubits().contains(&q))
    }
}

/// Gate-level image of a reversible circuit on `width` qubits.
///
/// Each controlled flip becomes X, CX, CCX, C3X or C4X; a swap becomes
/// SWAP or CSWAP, and a swap under two or three controls is split into
/// CX; C^kX; CX.
pub fn translate_rcir(c: &RevCircuit, width: usize) -> Result<GateCircuit, GateError> {
    c.check(width)?;
    let mut out = GateCircuit::new(width);
    let mut err = None;
    c.visit_leaves(&mut |controls, leaf| {
        if err.is_some() {
            return;
        }
        let depth_error = || GateError::ControlDepth {
            depth: controls.len(),
            controls: controls.to_vec(),
            leaf,
        };
        let gates: Result<Vec<Gate>, GateError> = match leaf {
            Leaf::Not(t) if controls.len() <= MAX_CONTROLS => Gate::mcx(controls, t).map(|g| alloc::vec![g]),
            Leaf::Swap(i, j) if controls.is_empty() => Ok(alloc::vec![Gate::swap(i, j)]),
            Leaf::Swap(i, j) if controls.len() == 1 => Ok(alloc::vec![Gate::fixed(
                GateKind::CSwap,
                &[controls[0], i, j],
                &[]
            )]),
            Leaf::Swap(i, j) if controls.len() < MAX_CONTROLS => {
                let mut cs = controls.to_vec();
                cs.push(j);
                Gate::mcx(&cs, i).map(|mid| alloc::vec![Gate::cx(i, j), mid, Gate::cx(i, j)])
            }
            _ => Err(depth_error()),
        };
        match gates {
            Ok(gs) => out.gates.extend(gs),
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// `k`-qubit Fourier transform, reading the register with qubit 0 as the
/// most significant bit: H and a CU1 ladder per qubit, then the
/// qubit-reversing swaps.
pub fn qft(k: usize) -> GateCircuit {
    let mut c = GateCircuit::new(k);
    for j in 0..k {
        c.gates.push(Gate::h(j));
        for l in j + 1..k {
            c.gates.push(Gate::cu1(PI / (1u64 << (l - j)) as f64, l, j));
        }
    }
    for i in 0..k / 2 {
        c.gates.push(Gate::swap(i, k - 1 - i));
    }
    c
}

/// Number of gates in [`qft`]`(k)`.
pub fn qft_gate_count(k: usize) -> usize {
    k + k * k.saturating_sub(1) / 2 + k / 2
}

/// Reversed sequence of inverted gates.
pub fn invert(c: &GateCircuit) -> GateCircuit {
    GateCircuit {
        num_qubits: c.num_qubits,
        gates: c.gates.iter().rev().map(Gate::inverse).collect(),
    }
}

/// Adds qubit `q` as a control to every gate of `c`.
pub fn control(q: usize, c: &GateCircuit) -> Result<GateCircuit, GateError> {
    if c.uses_qubit(q) {
        return Err(GateError::ControlInUse(q));
    }
    let mut out = GateCircuit::new(c.num_qubits.max(q + 1));
    for g in &c.gates {
        out.gates.extend(g.controlled(q)?);
    }
    Ok(out)
}

/// Shifts every qubit index by `offset`.
pub fn map_qubits(offset: usize, c: &GateCircuit) -> GateCircuit {
    GateCircuit {
        num_qubits: c.num_qubits + offset,
        gates: c.gates.iter().map(|g| g.shifted(offset)).collect(),
    }
}

/// `k` parallel copies of a parameterless one-qubit gate.
pub fn npar(k: usize, kind: GateKind) -> Result<GateCircuit, GateError> {
    let gates = (0..k)
        .map(|q| Gate::new(kind, &[q], &[]))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GateCircuit {
        num_qubits: k,
        gates,
    })
}

/// `control(kmax - 1 - i, f(i))` for `i = 0..k`, in order.
pub fn controlled_powers<F>(mut f: F, k: usize, kmax: usize) -> Result<GateCircuit, GateError>
where
    F: FnMut(usize) -> Result<GateCircuit, GateError>,
{
    let mut out = GateCircuit::new(0);
    for i in 0..k {
        out.append(&control(kmax - 1 - i, &f(i)?)?);
    }
    Ok(out)
}

/// Phase estimation to `k` bits of a family `f(i) = U^(2^i)` acting on `n`
/// qubits: `npar k H; controlled_powers; invert (qft k)` on `k + n` qubits.
///
/// The control register occupies qubits `0..k` with qubit `k - 1` controlling
/// `U^1`, so the estimate is read with qubit 0 as the most significant bit.
pub fn qpe<F>(k: usize, n: usize, mut f: F) -> Result<GateCircuit, GateError>
where
    F: FnMut(usize) -> Result<GateCircuit, GateError>,
{
    let mut c = npar(k, GateKind::H)?.with_num_qubits(k + n);
    c.append(&controlled_powers(|i| Ok(map_qubits(k, &f(i)?)), k, k)?);
    c.append(&invert(&qft(k)));
    if c.num_qubits > k + n {
        return Err(GateError::QubitOutOfRange {
            qubit: c.num_qubits - 1,
            num_qubits: k + n,
        });
    }
    Ok(c.with_num_qubits(k + n))
}

/// Sizes of the order-finding circuit for `(a, N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShorParams {
    pub a: u64,
    pub modulus: u64,
    /// Precision `floor(log2(2N^2))`.
    pub m: usize,
    /// Work register width `floor(log2(2N))`.
    pub n: usize,
    /// Ancillas of the modular multiplier, `3n + 11`.
    pub s: usize,
}

impl ShorParams {
    pub fn new(a: u64, modulus: u64) -> Result<Self, GateError> {
        let bad = |reason| GateError::Params { a, modulus, reason };
        if modulus < 3 || modulus > u32::MAX as u64 {
            return Err(bad("N must lie in [3, 2^32)"));
        }
        if a <= 1 || a >= modulus {
            return Err(bad("a must satisfy 1 < a < N"));
        }
        if numtheory::gcd(a, modulus) != 1 {
            return Err(bad("gcd(a, N) must be 1"));
        }
        let n = numtheory::log2_floor(2 * modulus) as usize;
        Ok(ShorParams {
            a,
            modulus,
            m: numtheory::precision(modulus) as usize,
            n,
            s: 3 * n + 11,
        })
    }

    pub fn total_qubits(&self) -> usize {
        self.m + self.n + self.s
    }

    /// First qubit of the work register (its least significant bit).
    pub fn work_offset(&self) -> usize {
        self.m
    }

    pub fn layout(&self) -> ArithLayout {
        ArithLayout::new(self.n)
    }

    /// Classically precomputed multipliers `a^(2^i) mod N`, `i < m`.
    pub fn multipliers(&self) -> Vec<u64> {
        let mut b = self.a % self.modulus;
        let mut out = Vec::with_capacity(self.m);
        for _ in 0..self.m {
            out.push(b);
            b = numtheory::mulmod(b, b, self.modulus);
        }
        out
    }

    /// Control qubits in order of significance of the measured estimate,
    /// least significant first.
    pub fn estimate_qubits(&self) -> Vec<usize> {
        (0..self.m).rev().collect()
    }
}

/// Translated in-place multiplier `|x>_n|0>_s -> |b·x mod N>_n|0>_s`.
pub fn imm_gates(b: u64, modulus: u64, layout: &ArithLayout) -> Result<GateCircuit, GateError> {
    let c = revarith::imm(b, modulus, layout)?;
    translate_rcir(&c, layout.total_bits())
}

/// The order-finding circuit: X on the work register's least significant
/// qubit, then phase estimation over the translated multipliers.
pub fn shor_circuit(a: u64, modulus: u64) -> Result<(GateCircuit, ShorParams), GateError> {
    let params = ShorParams::new(a, modulus)?;
    let layout = params.layout();
    let multipliers = params.multipliers();
    let mut cache: BTreeMap<u64, GateCircuit> = BTreeMap::new();
    let mut c = GateCircuit::new(params.total_qubits());
    c.gates.push(Gate::x(params.work_offset()));
    let body = qpe(params.m, params.n + params.s, |i| {
        let b = multipliers[i];
        if let Some(g) = cache.get(&b) {
            return Ok(g.clone());
        }
        let g = imm_gates(b, modulus, &layout)?;
        cache.insert(b, g.clone());
        Ok(g)
    })?;
    c.append(&body);
    Ok((c, params))
}

pub fn gate_count(c: &GateCircuit) -> usize {
    c.len()
}

/// `(212n² + 975n + 1031)m + 4m + m²`.
pub fn gate_count_bound(n: u64, m: u64) -> u64 {
    (212 * n * n + 975 * n + 1031) * m + 4 * m + m * m
}

/// `gate_count(shor_circuit(a, N))` without building the circuit.
pub fn shor_gate_count(a: u64, modulus: u64) -> Result<usize, GateError> {
    let params = ShorParams::new(a, modulus)?;
    let layout = params.layout();
    let mut total = 1 + params.m + qft_gate_count(params.m);
    for b in params.multipliers() {
        total += revarith::imm_primitive_count(b, modulus, &layout)?;
    }
    Ok(total)
}
