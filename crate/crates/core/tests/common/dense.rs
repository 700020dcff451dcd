// Dense reference simulator used as a test oracle.
//
// Each gate is expanded into its full local matrix from the qelib1
// definitions (u1 and u2 as special cases of u3) and applied by explicit
// matrix-vector products over the whole 2^n vector.

use super::{Complex64, Gate, GateCircuit, GateKind, Vec};

type Mat = Vec<Vec<Complex64>>;

fn u3(theta: f64, phi: f64, lambda: f64) -> Mat {
    let (s, c) = (libm::sin(theta / 2.0), libm::cos(theta / 2.0));
    let e = |x: f64| Complex64::new(libm::cos(x), libm::sin(x));
    let mut m = Vec::new();
    m.push([Complex64::new(c, 0.0), -e(lambda) * s].to_vec());
    m.push([e(phi) * s, e(phi + lambda) * c].to_vec());
    m
}

fn identity(dim: usize) -> Mat {
    (0..dim)
        .map(|i| (0..dim).map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect())
        .collect()
}

/// Local matrix; bit `t` of a local index is the gate's `t`-th qubit.
fn local_matrix(g: &Gate) -> Mat {
    let a = g.angles();
    let pi = core::f64::consts::PI;
    let arity = g.qubits().len();
    let dim = 1usize << arity;
    let controlled = |base: Mat| {
        let mut m = identity(dim);
        let ctrl = (1usize << (arity - 1)) - 1;
        let t = 1usize << (arity - 1);
        for bi in 0..2 {
            for bj in 0..2 {
                m[ctrl | bi * t][ctrl | bj * t] = base[bi][bj];
            }
        }
        m
    };
    let x = u3(pi, 0.0, pi);
    match g.kind() {
        GateKind::X => x,
        GateKind::H => u3(pi / 2.0, 0.0, pi),
        GateKind::U1 => u3(0.0, 0.0, a[0]),
        GateKind::U2 => u3(pi / 2.0, a[0], a[1]),
        GateKind::U3 => u3(a[0], a[1], a[2]),
        GateKind::CU1 => controlled(u3(0.0, 0.0, a[0])),
        GateKind::CX | GateKind::CCX | GateKind::C3X | GateKind::C4X => controlled(x),
        GateKind::Swap | GateKind::CSwap => {
            let zero = Complex64::new(0.0, 0.0);
            let mut m: Mat = (0..dim).map(|_| (0..dim).map(|_| zero).collect()).collect();
            let (i, j) = (arity - 2, arity - 1);
            for l in 0..dim {
                let active = arity == 2 || l & 1 == 1;
                let img = if active {
                    let (bi, bj) = ((l >> i) & 1, (l >> j) & 1);
                    (l & !(1 << i) & !(1 << j)) | bj << i | bi << j
                } else {
                    l
                };
                m[img][l] = Complex64::new(1.0, 0.0);
            }
            m
        }
    }
}

fn apply(state: &[Complex64], g: &Gate) -> Vec<Complex64> {
    let qs = g.qubits();
    let m = local_matrix(g);
    let loc = |i: usize| qs.iter().enumerate().fold(0usize, |l, (t, &q)| l | ((i >> q) & 1) << t);
    let with = |i: usize, l: usize| {
        qs.iter()
            .enumerate()
            .fold(i, |acc, (t, &q)| (acc & !(1 << q)) | ((l >> t) & 1) << q)
    };
    (0..state.len())
        .map(|i| {
            let li = loc(i);
            (0..m.len()).map(|l| m[li][l] * state[with(i, l)]).sum()
        })
        .collect()
}

/// Final dense state of `c` started from basis state `init`.
pub fn run(c: &GateCircuit, init: u64) -> Vec<Complex64> {
    let dim = 1usize << c.num_qubits();
    let mut state: Vec<Complex64> = (0..dim).map(|_| Complex64::new(0.0, 0.0)).collect();
    state[init as usize] = Complex64::new(1.0, 0.0);
    for g in c.gates() {
        state = apply(&state, g);
    }
    state
}

/// Final dense state of `c` started from an arbitrary vector.
#[allow(dead_code)]
pub fn run_from(c: &GateCircuit, init: &[Complex64]) -> Vec<Complex64> {
    let mut state = init.to_vec();
    for g in c.gates() {
        state = apply(&state, g);
    }
    state
}
