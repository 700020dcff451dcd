//! Numerical invariant suites over the built circuits, run by `verify` and
//! the acceptance suite.

use std::f64::consts::PI;

use shor_core::analysis;
use shor_core::gateir::{imm_gates, qft, qpe, Gate, GateCircuit};
use shor_core::numtheory;
use shor_core::rcir::{eval_rcir, BitRegister};
use shor_core::revarith::{imm, ArithLayout};
use shor_core::sim::{self, make_eigenstate, run_circuit, Complex64 as C64, SimError, SimOptions, SparseState};

/// Result of one invariant suite.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantReport {
    pub name: &'static str,
    pub cases: u64,
    /// Largest deviation seen, for the numerical suites.
    pub max_error: f64,
    pub failure: Option<String>,
}

impl InvariantReport {
    fn new(name: &'static str) -> Self {
        InvariantReport { name, cases: 0, max_error: 0.0, failure: None }
    }

    fn check(&mut self, err: f64, tol: f64, describe: impl FnOnce() -> String) {
        self.cases += 1;
        self.max_error = self.max_error.max(err);
        if !(err <= tol) && self.failure.is_none() {
            self.failure = Some(format!("{} (error {err:.3e} > {tol:.0e})", describe()));
        }
    }

    fn fail(&mut self, msg: String) {
        self.cases += 1;
        if self.failure.is_none() {
            self.failure = Some(msg);
        }
    }

    pub fn satisfied(&self) -> bool {
        self.failure.is_none()
    }
}

fn coprime_bases(modulus: u64) -> impl Iterator<Item = u64> {
    (2..modulus).filter(move |&a| numtheory::gcd(a, modulus) == 1)
}

/// Translated in-place multipliers against `a x mod N` for every `N` in
/// `3..=max_n`, coprime `1 < a < N` and `x < N`.
///
/// All inputs `x` run at once as the tagged superposition
/// `sum_x w^x |x>`, `w = exp(2 pi i / N)`: a permutation circuit maps the
/// tag of `x` to `a x mod N` intact, so each output amplitude identifies its
/// source, and any ancilla left dirty moves weight off the work register.
/// `eval_rcir` on the untranslated circuit is checked per basis state.
pub fn imm_oracle(max_n: u64) -> InvariantReport {
    let mut rep = InvariantReport::new("imm_oracle");
    for modulus in 3..=max_n {
        let layout = ArithLayout::for_modulus(modulus);
        let width = layout.total_bits();
        let norm = 1.0 / (modulus as f64).sqrt();
        let tag = |x: u64| C64::from_polar(norm, 2.0 * PI * x as f64 / modulus as f64);
        let input = SparseState::from_amplitudes(width, (0..modulus).map(|x| (x, tag(x)))).unwrap();
        for a in coprime_bases(modulus) {
            let rc = match imm(a, modulus, &layout) {
                Ok(c) => c,
                Err(e) => return failed(rep, format!("N={modulus} a={a}: {e}")),
            };
            for x in 0..modulus {
                let got = eval_rcir(&rc, &BitRegister::from_value(width, x as u128)).map(|r| r.value());
                if got != Ok((a * x % modulus) as u128) {
                    rep.fail(format!("eval_rcir N={modulus} a={a} x={x}: {got:?}"));
                }
            }
            let out = match imm_gates(a, modulus, &layout).map_err(SimError::from).and_then(|g| run_circuit(&g, &input)) {
                Ok(s) => s,
                Err(e) => return failed(rep, format!("N={modulus} a={a}: {e}")),
            };
            for x in 0..modulus {
                let y = a * x % modulus;
                let err = (out.amplitude(y) - tag(x)).norm();
                rep.check(err, 1e-12, || format!("N={modulus} a={a} x={x}"));
            }
            let leaked = (out.norm_sqr() - (0..modulus).map(|y| out.amplitude(y).norm_sqr()).sum::<f64>()).abs();
            if leaked > 1e-12 {
                rep.fail(format!("N={modulus} a={a}: ancillas not restored"));
            }
        }
    }
    rep
}

fn failed(mut rep: InvariantReport, msg: String) -> InvariantReport {
    rep.fail(msg);
    rep
}

/// Eigenpairs of the translated multiplier and the eigenstate sum, for
/// every `N` in `3..=max_n` and coprime `1 < a < N`:
/// `U_a |psi_j> = exp(2 pi i j / r) |psi_j>` and
/// `r^(-1/2) sum_j |psi_j> = |1>`, with fidelity error at most `tol`.
pub fn eigenpairs(max_n: u64, tol: f64) -> InvariantReport {
    let mut rep = InvariantReport::new("eigenpairs");
    for modulus in 3..=max_n {
        let layout = ArithLayout::for_modulus(modulus);
        let width = layout.total_bits();
        for a in coprime_bases(modulus) {
            let r = numtheory::order_brute(a, modulus).expect("coprime base has an order");
            let g = match imm_gates(a, modulus, &layout) {
                Ok(g) => g,
                Err(e) => return failed(rep, format!("N={modulus} a={a}: {e}")),
            };
            let mut total: std::collections::BTreeMap<u64, C64> = Default::default();
            for j in 0..r {
                let psi = match make_eigenstate(a, r, modulus, j, layout.n).and_then(|s| s.embed(width)) {
                    Ok(s) => s,
                    Err(e) => return failed(rep, format!("N={modulus} a={a} j={j}: {e}")),
                };
                for (y, amp) in psi.iter() {
                    *total.entry(y).or_default() += amp / (r as f64).sqrt();
                }
                let out = match run_circuit(&g, &psi) {
                    Ok(s) => s,
                    Err(e) => return failed(rep, format!("N={modulus} a={a} j={j}: {e}")),
                };
                let want = C64::from_polar(1.0, 2.0 * PI * j as f64 / r as f64);
                let err = (psi.inner(&out) - want).norm();
                rep.check(err, tol, || format!("eigenpair N={modulus} a={a} j={j}"));
            }
            let err = total
                .iter()
                .map(|(&y, &amp)| (amp - C64::new(if y == 1 { 1.0 } else { 0.0 }, 0.0)).norm())
                .fold(0.0, f64::max)
                .max(if total.contains_key(&1) { 0.0 } else { 1.0 });
            rep.check(err, tol, || format!("eigenstate sum N={modulus} a={a}"));
        }
    }
    rep
}

/// The QFT on every basis input against the DFT, `1 <= k <= max_k`. The
/// register is read with qubit 0 as the most significant bit.
pub fn qft_dft(max_k: usize, tol: f64) -> InvariantReport {
    let mut rep = InvariantReport::new("qft_dft");
    for k in 1..=max_k {
        let size = 1u64 << k;
        let rev = |x: u64| x.reverse_bits() >> (64 - k);
        let c = qft(k);
        for x in 0..size {
            let out = run_circuit(&c, &SparseState::basis(k, rev(x)).unwrap()).unwrap();
            let err = (0..size)
                .map(|y| {
                    let want = C64::from_polar(1.0 / (size as f64).sqrt(), 2.0 * PI * ((x * y) % size) as f64 / size as f64);
                    (out.amplitude(rev(y)) - want).norm()
                })
                .fold(0.0, f64::max);
            rep.check(err, tol, || format!("k={k} x={x}"));
        }
    }
    rep
}

/// Phase estimation of a diagonal unitary `U = U1(2 pi t_0) x U1(2 pi t_1)`
/// against the textbook amplitudes
/// `<y|out> = 2^-k sum_x exp(2 pi i x (theta - y / 2^k))` for each
/// eigenvector, with `k + 2 <= max_qubits` and both dyadic and non-dyadic
/// phases.
pub fn qpe_textbook(max_qubits: usize, tol: f64) -> InvariantReport {
    let mut rep = InvariantReport::new("qpe_textbook");
    let phases = [(3.0 / 16.0, 5.0 / 16.0), (0.1, 0.7), (0.5, 1.0 / 3.0)];
    for k in 1..=max_qubits.saturating_sub(2) {
        let size = 1u64 << k;
        for &(t0, t1) in &phases {
            let family = |i: usize| {
                let scale = (1u64 << i) as f64 * 2.0 * PI;
                GateCircuit::from_gates(2, vec![Gate::u1(scale * t0, 0), Gate::u1(scale * t1, 1)])
            };
            let c = match qpe(k, 2, family) {
                Ok(c) => c,
                Err(e) => return failed(rep, format!("k={k}: {e}")),
            };
            for e in 0..4u64 {
                let theta = (e & 1) as f64 * t0 + (e >> 1) as f64 * t1;
                let out = run_circuit(&c, &SparseState::basis(k + 2, e << k).unwrap().with_options(SimOptions {
                    prune_threshold: 0.0,
                    ..SimOptions::default()
                }))
                .unwrap();
                let mut err: f64 = 0.0;
                for y in 0..size {
                    let want: C64 = (0..size)
                        .map(|x| C64::from_polar(1.0, 2.0 * PI * x as f64 * (theta - y as f64 / size as f64)))
                        .sum::<C64>()
                        / size as f64;
                    // qubit 0 carries the most significant estimate bit.
                    let idx = (y.reverse_bits() >> (64 - k)) | e << k;
                    err = err.max((out.amplitude(idx) - want).norm());
                }
                rep.check(err, tol, || format!("k={k} theta={theta} eigenvector={e}"));
            }
        }
    }
    rep
}

/// Total variation between the simulated and the analytic measurement
/// distribution for every coprime `a` of each modulus.
pub fn analytic_vs_simulated(moduli: &[u64], tol: f64) -> InvariantReport {
    let mut rep = InvariantReport::new("analytic_vs_simulated");
    for &modulus in moduli {
        for a in coprime_bases(modulus) {
            let m = numtheory::precision(modulus);
            let sim = sim::order_finding_distribution(a, modulus, SimOptions::default());
            let exact = analysis::qpe_distribution_analytic(a, modulus, m);
            match (sim, exact) {
                (Ok(s), Ok(x)) => {
                    let tv = s.total_variation(&x);
                    rep.check(tv, tol, || format!("N={modulus} a={a}"));
                }
                (Err(e), _) => rep.fail(format!("N={modulus} a={a}: {e}")),
                (_, Err(e)) => rep.fail(format!("N={modulus} a={a}: {e}")),
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        for rep in [
            imm_oracle(9),
            eigenpairs(9, 1e-8),
            qft_dft(4, 1e-9),
            qpe_textbook(5, 1e-9),
            analytic_vs_simulated(&[7], 1e-6),
        ] {
            assert!(rep.satisfied(), "{rep:?}");
            assert!(rep.cases > 0);
        }
    }
}
