//! Analytic phase-estimation distributions, success probabilities, the
//! closed-form certified bounds, exhaustive lemma sweeps, statistics rows
//! and the outcome backends used by the factoring driver.
//!
//! The exact outcome law of order finding is
//!
//! ```text
//! P[u] = 4^-m * sum_{x0 < r} |sum_{v < 2^m, v = x0 (mod r)} e^(2 pi i u v / 2^m)|^2
//! ```
//!
//! where the inner sum runs over the whole control range. Only the size `c`
//! of each residue class matters, so with `t = u r mod 2^m` each class
//! contributes `sin^2(pi c t / 2^m) / sin^2(pi t / 2^m)` (or `c^2` when
//! `t = 0`).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use hashbrown::HashMap;
use rand::RngCore;
use thiserror::Error;

use crate::gateir;
use crate::numtheory::{self, NumError, OutcomeSource};
use crate::sim::{self, Distribution, SimError, SimOptions};

/// Largest precision for which full outcome distributions are enumerated.
pub const MAX_ENUMERATED_PRECISION: u32 = 22;

/// Post-processing profiles up to this precision scan every outcome; above
/// it only the windows that can yield the order are scanned.
pub const EXHAUSTIVE_PROFILE_PRECISION: u32 = 16;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("precision m = {m} needs 2^{m} outcomes; the analytic limit is m = {max}")]
    PrecisionTooLarge { m: u32, max: u32 },
    #[error("N = {0} is not an odd composite non-prime-power")]
    NotFactorable(u64),
}

/// `4 e^-2 / pi^2`.
pub fn beta() -> f64 {
    4.0 * libm::exp(-2.0) / (PI * PI)
}

fn log2_floor_pow4(n: u64) -> f64 {
    let l = numtheory::log2_floor(n) as f64;
    l * l * l * l
}

/// `beta / floor(log2 N)^4`.
pub fn certified_of_bound(modulus: u64) -> f64 {
    beta() / log2_floor_pow4(modulus)
}

/// Half of [`certified_of_bound`].
pub fn certified_factor_bound(modulus: u64) -> f64 {
    certified_of_bound(modulus) / 2.0
}

/// `(1 - beta / (2 floor(log2 N)^4))^niter`.
pub fn failure_bound(modulus: u64, niter: u32) -> f64 {
    libm::pow(1.0 - certified_factor_bound(modulus), niter as f64)
}

/// Sizes of the residue classes mod `r` in `[0, 2^m)`: `n_hi` classes of
/// size `c_lo + 1` and `r - n_hi` of size `c_lo`.
fn class_sizes(r: u64, m: u32) -> (u64, u64, u64, u64) {
    let size = 1u64 << m;
    let n_hi = size % r;
    (n_hi, size / r + 1, r - n_hi, size / r)
}

/// `|sum_{k < c} e^(2 pi i k t / 2^m)|^2`, exactly zero when `c t = 0 (mod 2^m)`.
fn class_weight(c: u64, t: u64, m: u32) -> f64 {
    if t == 0 {
        return (c as f64) * (c as f64);
    }
    let size = 1u128 << m;
    let ct = (c as u128 * t as u128) % size;
    if ct == 0 {
        return 0.0;
    }
    let num = libm::sin(PI * ct as f64 / size as f64);
    let den = libm::sin(PI * t as f64 / size as f64);
    (num * num) / (den * den)
}

/// `P[u]` for an element of order `r` at precision `m`.
pub fn outcome_probability(r: u64, m: u32, u: u64) -> f64 {
    let size = 1u128 << m;
    let t = ((u as u128 * r as u128) % size) as u64;
    let (n_hi, c_hi, n_lo, c_lo) = class_sizes(r, m);
    let total = n_hi as f64 * class_weight(c_hi, t, m) + n_lo as f64 * class_weight(c_lo, t, m);
    total / (size as f64 * size as f64)
}

/// Exact outcome distribution of the `m`-bit estimate for an element of
/// order `r`.
pub fn distribution_for_order(r: u64, m: u32) -> Result<Distribution, AnalysisError> {
    if m > MAX_ENUMERATED_PRECISION {
        return Err(AnalysisError::PrecisionTooLarge {
            m,
            max: MAX_ENUMERATED_PRECISION,
        });
    }
    Ok(Distribution::from_weights(
        (0..1u64 << m).map(|u| (u, outcome_probability(r, m, u))),
    )?)
}

pub fn qpe_distribution_analytic(a: u64, modulus: u64, m: u32) -> Result<Distribution, AnalysisError> {
    let r = numtheory::order_brute(a, modulus)?;
    distribution_for_order(r, m)
}

/// What post-processing returns on outcome `u` when the true order is `r`:
/// the first convergent denominator `q >= 1` over `k <= 2m + 1` that is a
/// multiple of `r`. Equivalent to [`numtheory::of_post`] because
/// `a^q = 1 (mod N)` exactly when `r | q`.
pub fn post_result(u: u64, m: u32, r: u64) -> Option<u64> {
    let denom = 1u64 << m;
    (0..=2 * m + 1)
        .map(|k| numtheory::cfe(k, u, denom))
        .find(|&q| q >= 1 && q % r == 0)
}

/// Distribution of post-processing results for an element of order `r` at
/// precision `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderProfile {
    pub r: u64,
    pub m: u32,
    /// Whether every outcome was scanned. Otherwise only outcomes that can
    /// return `r` itself were, and `masses` holds just that entry.
    pub exhaustive: bool,
    masses: BTreeMap<u64, f64>,
}

impl OrderProfile {
    pub fn new(r: u64, m: u32) -> Self {
        let mut masses = BTreeMap::new();
        let exhaustive = m <= EXHAUSTIVE_PROFILE_PRECISION || r == 1;
        if r == 1 {
            // All mass sits on u = 0, whose only convergent is 0/1.
            masses.insert(1, 1.0);
        } else if exhaustive {
            for u in 0..1u64 << m {
                if let Some(q) = post_result(u, m, r) {
                    *masses.entry(q).or_insert(0.0) += outcome_probability(r, m, u);
                }
            }
        } else {
            let mass = windowed_success(r, m);
            if mass > 0.0 {
                masses.insert(r, mass);
            }
        }
        OrderProfile {
            r,
            m,
            exhaustive,
            masses,
        }
    }

    /// Probability that post-processing returns exactly `r`.
    pub fn success(&self) -> f64 {
        self.masses.get(&self.r).copied().unwrap_or(0.0)
    }

    /// `(q, probability)` over returned values.
    pub fn masses(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.masses.iter().map(|(&q, &p)| (q, p))
    }
}

/// Sum of `P[u]` over outcomes returning `r`. A convergent `p/r` of
/// `u/2^m` satisfies `|u/2^m - p/r| < 1/r^2`, so only the windows of
/// half-width `2^m/r^2` around the points `j 2^m / r` can contribute.
fn windowed_success(r: u64, m: u32) -> f64 {
    let size = 1u128 << m;
    let (r128, r2) = (r as u128, r as u128 * r as u128);
    let mut next = 0u128;
    let mut total = 0.0;
    for j in 0..=r128 {
        // centre j 2^m / r, half-width 2^m / r^2, both over the common
        // denominator r^2.
        let centre = j * size * r128;
        let lo = (centre.saturating_sub(size) / r2).max(next);
        let hi = ((centre + size) / r2).min(size - 1);
        if lo > hi {
            continue;
        }
        for u in lo..=hi {
            let u = u as u64;
            if post_result(u, m, r) == Some(r) {
                total += outcome_probability(r, m, u);
            }
        }
        next = hi + 1;
    }
    total
}

/// Caches post-processing profiles by `(r, m)`.
#[derive(Clone, Debug, Default)]
pub struct Analyzer {
    profiles: HashMap<(u64, u32), OrderProfile>,
}

impl Analyzer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn profile(&mut self, r: u64, m: u32) -> &OrderProfile {
        self.profiles.entry((r, m)).or_insert_with(|| OrderProfile::new(r, m))
    }

    /// Probability that one order-finding run on `(a, N)` returns the order.
    pub fn of_success_prob(&mut self, a: u64, modulus: u64) -> Result<f64, AnalysisError> {
        let r = numtheory::order_brute(a, modulus)?;
        Ok(self.profile(r, numtheory::precision(modulus)).success())
    }

    /// Probability that the quantum branch for a coprime `a` ends in a
    /// nontrivial factor.
    pub fn quantum_factor_prob(&mut self, a: u64, modulus: u64) -> Result<f64, AnalysisError> {
        let r = numtheory::order_brute(a, modulus)?;
        let profile = self.profile(r, numtheory::precision(modulus));
        Ok(profile
            .masses()
            .filter(|&(q, _)| numtheory::factor_from_order(a, modulus, q).is_some())
            .map(|(_, p)| p)
            .sum())
    }

    /// Mean of [`Analyzer::quantum_factor_prob`] over coprime `1 < a < N`.
    pub fn factor_success_prob(&mut self, modulus: u64) -> Result<f64, AnalysisError> {
        let mut total = 0.0;
        let mut count = 0u64;
        for a in 2..modulus {
            if numtheory::gcd(a, modulus) == 1 {
                total += self.quantum_factor_prob(a, modulus)?;
                count += 1;
            }
        }
        if count == 0 {
            return Err(AnalysisError::NotFactorable(modulus));
        }
        Ok(total / count as f64)
    }

    /// Success probability of one full trial of the factoring loop: `a`
    /// uniform in `[1, N)`, with the gcd shortcut.
    pub fn trial_success_prob(&mut self, modulus: u64) -> Result<f64, AnalysisError> {
        let mut total = 0.0;
        for a in 1..modulus {
            total += if numtheory::gcd(a, modulus) > 1 {
                1.0
            } else {
                self.quantum_factor_prob(a, modulus)?
            };
        }
        Ok(total / (modulus - 1) as f64)
    }
}

pub fn of_success_prob(a: u64, modulus: u64) -> Result<f64, AnalysisError> {
    Analyzer::new().of_success_prob(a, modulus)
}

pub fn factor_success_prob(modulus: u64) -> Result<f64, AnalysisError> {
    Analyzer::new().factor_success_prob(modulus)
}

pub fn trial_success_prob(modulus: u64) -> Result<f64, AnalysisError> {
    Analyzer::new().trial_success_prob(modulus)
}

/// Whether `N` goes through order finding: odd, composite, not a prime power.
pub fn needs_order_finding(modulus: u64) -> bool {
    modulus >= 3 && numtheory::preprocess(modulus) == numtheory::Classification::CompositeOdd
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundInput {
    Modulus(u64),
    Pair { a: u64, modulus: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    /// Holds when the value is at least the bound.
    Lower,
    /// Holds when the value is at most the bound.
    Upper,
}

/// A measured value against a certified bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    pub input: BoundInput,
    pub kind: BoundKind,
    pub empirical_value: f64,
    pub certified_bound: f64,
    pub satisfied: bool,
}

impl BoundReport {
    pub fn new(input: BoundInput, kind: BoundKind, empirical_value: f64, certified_bound: f64) -> Self {
        let satisfied = match kind {
            BoundKind::Lower => empirical_value >= certified_bound,
            BoundKind::Upper => empirical_value <= certified_bound,
        };
        BoundReport {
            input,
            kind,
            empirical_value,
            certified_bound,
            satisfied,
        }
    }
}

/// Order-finding and factoring success against the certified lower bounds
/// for every odd composite non-prime-power `N <= max_n`.
pub fn check_probability_bounds(max_n: u64) -> Result<Vec<BoundReport>, AnalysisError> {
    let mut an = Analyzer::new();
    let mut out = Vec::new();
    for modulus in (3..=max_n).filter(|&n| needs_order_finding(n)) {
        let of_bound = certified_of_bound(modulus);
        for a in (2..modulus).filter(|&a| numtheory::gcd(a, modulus) == 1) {
            let p = an.of_success_prob(a, modulus)?;
            out.push(BoundReport::new(BoundInput::Pair { a, modulus }, BoundKind::Lower, p, of_bound));
        }
        let f = an.factor_success_prob(modulus)?;
        out.push(BoundReport::new(
            BoundInput::Modulus(modulus),
            BoundKind::Lower,
            f,
            certified_factor_bound(modulus),
        ));
    }
    Ok(out)
}

/// Gate counts of every valid `(a, N)` with `N <= max_n` against the
/// polynomial bound.
pub fn check_gate_bounds(max_n: u64) -> Result<Vec<BoundReport>, gateir::GateError> {
    let mut out = Vec::new();
    for modulus in 3..=max_n {
        for a in (2..modulus).filter(|&a| numtheory::gcd(a, modulus) == 1) {
            let p = gateir::ShorParams::new(a, modulus)?;
            let count = gateir::shor_gate_count(a, modulus)?;
            let bound = gateir::gate_count_bound(p.n as u64, p.m as u64);
            out.push(BoundReport::new(
                BoundInput::Pair { a, modulus },
                BoundKind::Upper,
                count as f64,
                bound as f64,
            ));
        }
    }
    Ok(out)
}

/// Enumeration limits for [`verify_lemma_sweeps`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SweepLimits {
    /// Odd prime powers up to this value.
    pub prime_power_limit: u64,
    /// Continued-fraction denominators up to this value.
    pub cfe_limit: u64,
    pub totient_limit: u64,
    /// Odd `N = p^k q` up to this value.
    pub reduction_limit: u64,
    /// Replaces the convergent list with an off-by-one one, so the
    /// continued-fraction sweep must report a counterexample.
    pub inject_fault: bool,
}

impl Default for SweepLimits {
    fn default() -> Self {
        SweepLimits {
            prime_power_limit: 2048,
            cfe_limit: 512,
            totient_limit: 100_000,
            reduction_limit: 1000,
            inject_fault: false,
        }
    }
}

/// Outcome of one exhaustive sweep.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepReport {
    pub name: &'static str,
    pub limit: u64,
    /// Number of instances checked.
    pub cases: u64,
    /// First violation found, if any.
    pub counterexample: Option<String>,
}

impl SweepReport {
    pub fn satisfied(&self) -> bool {
        self.counterexample.is_none()
    }
}

struct Sweep {
    report: SweepReport,
}

impl Sweep {
    fn new(name: &'static str, limit: u64) -> Self {
        Sweep {
            report: SweepReport {
                name,
                limit,
                cases: 0,
                counterexample: None,
            },
        }
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.report.cases += 1;
        if !ok && self.report.counterexample.is_none() {
            self.report.counterexample = Some(describe());
        }
    }
}

/// Runs every lemma sweep in a fixed order.
pub fn verify_lemma_sweeps(limits: &SweepLimits) -> Vec<SweepReport> {
    let mut out = sweep_prime_powers(limits.prime_power_limit);
    out.extend(sweep_reduction(limits.reduction_limit));
    out.push(sweep_totient(limits.totient_limit));
    out.push(sweep_legendre(limits.cfe_limit, limits.inject_fault));
    out
}

/// Odd prime powers `p^k <= limit`, in increasing order.
pub fn odd_prime_powers(limit: u64) -> Vec<(u64, u32, u64)> {
    let mut out = Vec::new();
    for p in (3..=limit).step_by(2).filter(|&p| numtheory::is_prime(p)) {
        let (mut pk, mut k) = (p, 1);
        while pk <= limit {
            out.push((p, k, pk));
            pk *= p;
            k += 1;
        }
    }
    out.sort_unstable_by_key(|&(_, _, pk)| pk);
    out
}

/// Euler's criterion, the residue count and the two-to-one squaring map.
fn sweep_prime_powers(limit: u64) -> Vec<SweepReport> {
    let mut euler = Sweep::new("euler_criterion", limit);
    let mut count = Sweep::new("qr_count", limit);
    let mut two_to_one = Sweep::new("two_to_one", limit);
    for (p, _, pk) in odd_prime_powers(limit) {
        let phi = pk / p * (p - 1);
        let mut roots = vec![0u32; pk as usize];
        for x in (1..pk).filter(|x| x % p != 0) {
            roots[(x * x % pk) as usize] += 1;
        }
        for a in (1..pk).filter(|a| a % p != 0) {
            let qr = roots[a as usize] > 0;
            let e = numtheory::modexp(a, phi / 2, pk);
            let want = if qr { 1 } else { pk - 1 };
            euler.check(e == want, || format!("p^k={pk} a={a}: a^(phi/2)={e}, residue={qr}"));
        }
        let residues = roots.iter().filter(|&&c| c > 0).count() as u64;
        count.check(residues == phi / 2, || format!("p^k={pk}: {residues} residues, phi/2={}", phi / 2));
        let bad_fibre = roots.iter().position(|&c| c != 0 && c != 2);
        two_to_one.check(bad_fibre.is_none(), || {
            let y = bad_fibre.unwrap_or(0);
            format!("p^k={pk}: {y} has {} square roots", roots[y])
        });
    }
    vec![euler.report, count.report, two_to_one.report]
}

fn lcm(a: u64, b: u64) -> u64 {
    a / numtheory::gcd(a, b) * b
}

/// The reduction from factoring to order finding: at least half of the
/// units are good, and differing 2-adic orders modulo `p^k` and `q` force
/// `a^(r/2) != +-1`; nontrivial square roots of 1 split `N`.
fn sweep_reduction(limit: u64) -> Vec<SweepReport> {
    let mut reduction = Sweep::new("d_reduction", limit);
    let mut d_neq = Sweep::new("d_neq", limit);
    for modulus in (3..=limit).step_by(2).filter(|&n| needs_order_finding(n)) {
        let (p, k) = numtheory::factorize(modulus)[0];
        let pk = p.pow(k);
        let q = modulus / pk;
        let mut units = 0u64;
        let mut good = 0u64;
        for a in (1..modulus).filter(|&a| numtheory::gcd(a, modulus) == 1) {
            units += 1;
            let r = numtheory::order_brute(a, modulus).expect("unit");
            let half = numtheory::modexp(a, r / 2, modulus);
            let is_good = r % 2 == 0 && half != modulus - 1;
            if is_good {
                good += 1;
                let f = numtheory::factor_from_order(a, modulus, r);
                reduction.check(f.is_some_and(|f| modulus % f == 0), || {
                    format!("N={modulus} a={a} r={r}: good but no factor")
                });
            }
            let rp = numtheory::order_brute(a % pk, pk).expect("unit");
            let rq = numtheory::order_brute(a % q, q).expect("unit");
            d_neq.check(lcm(rp, rq) == r, || format!("N={modulus} a={a}: lcm({rp},{rq}) != {r}"));
            if numtheory::two_adic(rp) != numtheory::two_adic(rq) {
                d_neq.check(r % 2 == 0 && half != 1 && half != modulus - 1, || {
                    format!("N={modulus} a={a}: d({rp}) != d({rq}) but a^(r/2) = {half}")
                });
            }
        }
        reduction.check(2 * good >= units, || format!("N={modulus}: {good} good of {units} units"));
        for x in 2..modulus - 1 {
            if numtheory::mulmod(x, x, modulus) == 1 {
                let g = numtheory::gcd(x - 1, modulus);
                d_neq.check(1 < g && g < modulus, || format!("N={modulus}: x={x} squares to 1, gcd(x-1,N)={g}"));
            }
        }
    }
    vec![reduction.report, d_neq.report]
}

/// `phi(n)/n >= e^-2 / floor(log2 n)^4` for `2 <= n <= limit`, with the
/// totient from a sieve cross-checked against [`numtheory::euler_phi`].
fn sweep_totient(limit: u64) -> SweepReport {
    let mut sweep = Sweep::new("totient_lb", limit);
    let len = limit as usize + 1;
    let mut phi: Vec<u64> = (0..len as u64).collect();
    for i in 2..len {
        if phi[i] == i as u64 {
            for j in (i..len).step_by(i) {
                phi[j] -= phi[j] / i as u64;
            }
        }
    }
    let e2 = libm::exp(-2.0);
    for n in 2..len as u64 {
        let f = phi[n as usize];
        let lhs = f as f64 * log2_floor_pow4(n);
        sweep.check(f == numtheory::euler_phi(n) && lhs >= e2 * n as f64, || {
            format!("n={n}: phi={f}, phi(n)/n={} below e^-2/L^4", f as f64 / n as f64)
        });
    }
    sweep.report
}

/// Legendre's theorem for the convergent recurrence: every `p/q` with
/// `p >= 1` and `|a/b - p/q| < 1/(2q^2)` appears among `cfe(s, a, b)` for
/// `s <= 2 floor(log2 b) + 1`; the denominators are non-decreasing and end
/// at `b / gcd(a, b)`.
fn sweep_legendre(limit: u64, inject_fault: bool) -> SweepReport {
    let mut sweep = Sweep::new("legendre_cfe", limit);
    for b in 1..=limit {
        let steps = 2 * numtheory::log2_floor(b) + 1;
        for a in 0..b {
            let shift = u32::from(inject_fault);
            let convergents: Vec<(u64, u64)> = (0..=steps)
                .map(|s| numtheory::cfe_convergent(s + shift, a, b))
                .collect();
            let monotone = convergents.windows(2).all(|w| w[0].1 <= w[1].1);
            let last = convergents[convergents.len() - 1].1;
            let reduced = if a == 0 { 1 } else { b / numtheory::gcd(a, b) };
            sweep.check(monotone && last == reduced, || {
                format!("a={a} b={b}: denominators not monotone or end at {last} != {reduced}")
            });
            for q in 1..=b {
                let p = (2 * a * q + b) / (2 * b);
                if p == 0 {
                    continue;
                }
                let err = (a * q).abs_diff(p * b);
                if 2 * q * err < b && numtheory::gcd(p, q) == 1 {
                    sweep.check(convergents.contains(&(p, q)), || {
                        format!("a={a} b={b}: {p}/{q} is within 1/(2q^2) but not a convergent")
                    });
                }
            }
        }
    }
    sweep.report
}

/// One row of the per-size statistics table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StatsRow {
    pub bits: u32,
    pub of_instances: u64,
    pub of_min: f64,
    pub of_max: f64,
    pub of_mean: f64,
    /// Certified order-finding bound, constant within a size.
    pub of_bound: f64,
    pub factor_instances: u64,
    pub factor_min: f64,
    pub factor_max: f64,
    pub factor_mean: f64,
    pub factor_bound: f64,
    pub gate_min: u64,
    pub gate_max: u64,
    pub gate_mean: f64,
    pub gate_bound_min: u64,
    pub gate_bound_max: u64,
    /// Instances whose gate count exceeds their own bound.
    pub gate_violations: u64,
}

impl StatsRow {
    pub const COLUMNS: [&'static str; 17] = [
        "bits",
        "of_instances",
        "of_min",
        "of_max",
        "of_mean",
        "of_bound",
        "factor_instances",
        "factor_min",
        "factor_max",
        "factor_mean",
        "factor_bound",
        "gate_min",
        "gate_max",
        "gate_mean",
        "gate_bound_min",
        "gate_bound_max",
        "gate_violations",
    ];

    /// Field values in [`StatsRow::COLUMNS`] order; statistics over an
    /// empty set are left blank.
    pub fn fields(&self) -> Vec<String> {
        let opt = |n: u64, v: f64| if n == 0 { String::new() } else { format!("{v:.9}") };
        let opt_u = |n: u64, v: u64| if n == 0 { String::new() } else { format!("{v}") };
        let fields = [
            format!("{}", self.bits),
            format!("{}", self.of_instances),
            opt(self.of_instances, self.of_min),
            opt(self.of_instances, self.of_max),
            opt(self.of_instances, self.of_mean),
            format!("{:.9}", self.of_bound),
            format!("{}", self.factor_instances),
            opt(self.factor_instances, self.factor_min),
            opt(self.factor_instances, self.factor_max),
            opt(self.factor_instances, self.factor_mean),
            format!("{:.9}", self.factor_bound),
            opt_u(self.of_instances, self.gate_min),
            opt_u(self.of_instances, self.gate_max),
            opt(self.of_instances, self.gate_mean),
            opt_u(self.of_instances, self.gate_bound_min),
            opt_u(self.of_instances, self.gate_bound_max),
            format!("{}", self.gate_violations),
        ];
        fields.into()
    }

    /// Every instance meets its certified bounds.
    pub fn bounds_hold(&self) -> bool {
        (self.of_instances == 0 || self.of_min >= self.of_bound)
            && (self.factor_instances == 0 || self.factor_min >= self.factor_bound)
            && self.gate_violations == 0
    }
}

#[derive(Default)]
struct Running {
    n: u64,
    min: f64,
    max: f64,
    sum: f64,
}

impl Running {
    fn push(&mut self, v: f64) {
        if self.n == 0 {
            self.min = v;
            self.max = v;
        } else {
            self.min = self.min.min(v);
            self.max = self.max.max(v);
        }
        self.sum += v;
        self.n += 1;
    }

    fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }
}

/// Statistics for inputs `N` of exactly `bits` bits: order finding over
/// every `N >= 3` and coprime `1 < a < N`, factoring over every odd
/// composite non-prime-power `N`, gate counts over the order-finding set.
pub fn stats_row(an: &mut Analyzer, bits: u32) -> Result<StatsRow, AnalysisError> {
    assert!((2..=32).contains(&bits));
    let lo = (1u64 << (bits - 1)).max(3);
    let hi = (1u64 << bits) - 1;
    let (mut of, mut fac, mut gates, mut bounds) =
        (Running::default(), Running::default(), Running::default(), Running::default());
    let mut violations = 0;
    for modulus in lo..=hi {
        for a in (2..modulus).filter(|&a| numtheory::gcd(a, modulus) == 1) {
            of.push(an.of_success_prob(a, modulus)?);
            let p = gateir::ShorParams::new(a, modulus).map_err(|_| AnalysisError::NotFactorable(modulus))?;
            let count = gateir::shor_gate_count(a, modulus).map_err(|_| AnalysisError::NotFactorable(modulus))?;
            let bound = gateir::gate_count_bound(p.n as u64, p.m as u64);
            gates.push(count as f64);
            bounds.push(bound as f64);
            if count as u64 > bound {
                violations += 1;
            }
        }
        if needs_order_finding(modulus) {
            fac.push(an.factor_success_prob(modulus)?);
        }
    }
    let sample = 1u64 << (bits - 1);
    Ok(StatsRow {
        bits,
        of_instances: of.n,
        of_min: of.min,
        of_max: of.max,
        of_mean: of.mean(),
        of_bound: certified_of_bound(sample.max(3)),
        factor_instances: fac.n,
        factor_min: fac.min,
        factor_max: fac.max,
        factor_mean: fac.mean(),
        factor_bound: certified_factor_bound(sample.max(3)),
        gate_min: gates.min as u64,
        gate_max: gates.max as u64,
        gate_mean: gates.mean(),
        gate_bound_min: bounds.min as u64,
        gate_bound_max: bounds.max as u64,
        gate_violations: violations,
    })
}

pub fn emit_stats(bits: core::ops::RangeInclusive<u32>) -> Result<Vec<StatsRow>, AnalysisError> {
    let mut an = Analyzer::new();
    bits.map(|b| stats_row(&mut an, b)).collect()
}

/// Samples outcomes from the exact distribution, cached per order and
/// precision.
#[derive(Clone, Debug, Default)]
pub struct AnalyticBackend {
    cache: BTreeMap<(u64, u32), Distribution>,
}

impl AnalyticBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn distribution(&mut self, a: u64, modulus: u64) -> Result<&Distribution, AnalysisError> {
        let r = numtheory::order_brute(a, modulus)?;
        let m = numtheory::precision(modulus);
        if !self.cache.contains_key(&(r, m)) {
            self.cache.insert((r, m), distribution_for_order(r, m)?);
        }
        Ok(&self.cache[&(r, m)])
    }
}

impl OutcomeSource for AnalyticBackend {
    type Error = AnalysisError;

    fn sample_outcome(&mut self, a: u64, modulus: u64, rng: &mut dyn RngCore) -> Result<u64, AnalysisError> {
        Ok(self.distribution(a, modulus)?.sample_one(rng))
    }
}

/// Samples outcomes from the simulated order-finding circuit, cached per
/// `(a, N)`.
#[derive(Clone, Debug, Default)]
pub struct SimulatedBackend {
    options: SimOptions,
    cache: BTreeMap<(u64, u64), Distribution>,
}

impl SimulatedBackend {
    pub fn new(options: SimOptions) -> Self {
        SimulatedBackend {
            options,
            cache: BTreeMap::new(),
        }
    }

    pub fn distribution(&mut self, a: u64, modulus: u64) -> Result<&Distribution, AnalysisError> {
        if !self.cache.contains_key(&(a, modulus)) {
            let d = sim::order_finding_distribution(a, modulus, self.options)?;
            self.cache.insert((a, modulus), d);
        }
        Ok(&self.cache[&(a, modulus)])
    }
}

impl OutcomeSource for SimulatedBackend {
    type Error = AnalysisError;

    fn sample_outcome(&mut self, a: u64, modulus: u64, rng: &mut dyn RngCore) -> Result<u64, AnalysisError> {
        Ok(self.distribution(a, modulus)?.sample_one(rng))
    }
}
