//! The batch commands behind the `shor` binary. Each writes its report to
//! the given sink and returns an error carrying the process exit code.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::RngCore;
use shor_core::analysis::{
    self, certified_of_bound, AnalysisError, AnalyticBackend, SimulatedBackend, SweepLimits,
};
use shor_core::gateir::{self, GateError, ShorParams};
use shor_core::numtheory::{self, Classification, OutcomeSource};
use shor_core::sim::{self, SimError, SimOptions};
use thiserror::Error;

use crate::invariants::{self, InvariantReport};
use crate::qasm::{self, EmitOptions};
use crate::stats;

/// Environment variable supplying the default seed.
pub const SEED_ENV: &str = "SHOR_SEED";
/// Above this modulus `auto` samples from the analytic distribution.
pub const AUTO_SIMULATE_MAX: u64 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("no nontrivial factor of {modulus} found in {trials} trials")]
    NoFactor { modulus: u64, trials: u32 },
    #[error("invalid parameters: {0}")]
    Param(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::NoFactor { .. } => 1,
            CliError::Param(_) => 2,
            CliError::Resource(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Io { .. } => 5,
        }
    }

    fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::Io { path: "<stdout>".into(), source: e }
}

impl From<GateError> for CliError {
    fn from(e: GateError) -> Self {
        CliError::Param(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::TooManyQubits(_) | SimError::SupportOverflow { .. } => CliError::Resource(e.to_string()),
            SimError::Gate(g) => g.into(),
            other => CliError::Param(other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Sim(s) => s.into(),
            AnalysisError::PrecisionTooLarge { .. } => CliError::Resource(e.to_string()),
            other => CliError::Param(other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum BackendChoice {
    /// Simulate for N <= 64, analytic above.
    #[default]
    Auto,
    /// Sparse statevector simulation of the generated circuit.
    Simulate,
    /// Sampling from the closed-form outcome distribution.
    Analytic,
}

impl BackendChoice {
    pub fn resolve(self, modulus: u64) -> BackendChoice {
        match self {
            BackendChoice::Auto if modulus > AUTO_SIMULATE_MAX => BackendChoice::Analytic,
            BackendChoice::Auto => BackendChoice::Simulate,
            other => other,
        }
    }
}

/// Either outcome source behind one type.
pub enum Backend {
    Analytic(AnalyticBackend),
    Simulated(SimulatedBackend),
}

impl Backend {
    pub fn new(choice: BackendChoice, modulus: u64) -> Self {
        match choice.resolve(modulus) {
            BackendChoice::Analytic => Backend::Analytic(AnalyticBackend::new()),
            _ => Backend::Simulated(SimulatedBackend::new(SimOptions::default())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Backend::Analytic(_) => "analytic",
            Backend::Simulated(_) => "simulate",
        }
    }

    pub fn distribution(&mut self, a: u64, modulus: u64) -> Result<&sim::Distribution, AnalysisError> {
        match self {
            Backend::Analytic(b) => b.distribution(a, modulus),
            Backend::Simulated(b) => b.distribution(a, modulus),
        }
    }
}

impl OutcomeSource for Backend {
    type Error = AnalysisError;

    fn sample_outcome(&mut self, a: u64, modulus: u64, rng: &mut dyn RngCore) -> Result<u64, AnalysisError> {
        match self {
            Backend::Analytic(b) => b.sample_outcome(a, modulus, rng),
            Backend::Simulated(b) => b.sample_outcome(a, modulus, rng),
        }
    }
}

/// Summary of a generated circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenSummary {
    pub params: ShorParams,
    pub gates: usize,
    pub bound: u64,
}

/// Writes the order-finding circuit for `(a, N)` to `path`, measuring the
/// estimate register into `c[0..m]` least significant bit first.
pub fn gen(a: u64, modulus: u64, path: &Path, preamble: bool, out: &mut dyn Write) -> Result<GenSummary, CliError> {
    let (circuit, params) = gateir::shor_circuit(a, modulus)?;
    let text = qasm::emit(&circuit, &params.estimate_qubits(), EmitOptions { preamble })
        .map_err(|e| CliError::Param(e.to_string()))?;
    std::fs::write(path, text).map_err(CliError::io(path))?;
    let summary = GenSummary {
        params,
        gates: circuit.len(),
        bound: gateir::gate_count_bound(params.n as u64, params.m as u64),
    };
    writeln!(out, "wrote {}", path.display()).map_err(stdout_err)?;
    writeln!(out, "a = {a}, N = {modulus}").map_err(stdout_err)?;
    writeln!(out, "m = {}, n = {}, ancillas = {}", params.m, params.n, params.s).map_err(stdout_err)?;
    writeln!(out, "qubits = {}", params.total_qubits()).map_err(stdout_err)?;
    writeln!(out, "gates = {}", summary.gates).map_err(stdout_err)?;
    writeln!(out, "gate bound = {}", summary.bound).map_err(stdout_err)?;
    Ok(summary)
}

/// Report of a sampled order-finding run.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderFindReport {
    pub order: u64,
    pub histogram: BTreeMap<u64, u64>,
    pub successes: u64,
    pub shots: u64,
    pub exact: f64,
    pub bound: f64,
}

impl OrderFindReport {
    pub fn success_fraction(&self) -> f64 {
        self.successes as f64 / self.shots as f64
    }
}

/// Most frequent outcomes shown in the histogram.
const HISTOGRAM_ROWS: usize = 64;

/// Samples `shots` measurements of the estimate register and post-processes
/// each one.
pub fn order_find(
    a: u64,
    modulus: u64,
    shots: u64,
    seed: u64,
    choice: BackendChoice,
    out: &mut dyn Write,
) -> Result<OrderFindReport, CliError> {
    let params = ShorParams::new(a, modulus)?;
    if shots == 0 {
        return Err(CliError::Param("shots must be positive".into()));
    }
    let m = params.m as u32;
    let order = numtheory::order_brute(a, modulus).map_err(|e| CliError::Param(e.to_string()))?;
    let mut backend = Backend::new(choice, modulus);
    let dist = backend.distribution(a, modulus)?;
    let exact: f64 = dist
        .iter()
        .filter(|&(u, _)| numtheory::of_post(a, modulus, u, m) == Some(order))
        .map(|(_, p)| p)
        .sum();
    let histogram = sim::sample(dist, shots, seed);
    let mut successes = 0;
    let mut recovered: BTreeMap<Option<u64>, u64> = BTreeMap::new();
    for (&u, &count) in &histogram {
        let r = numtheory::of_post(a, modulus, u, m);
        *recovered.entry(r).or_default() += count;
        if r == Some(order) {
            successes += count;
        }
    }
    let report = OrderFindReport {
        order,
        histogram,
        successes,
        shots,
        exact,
        bound: certified_of_bound(modulus),
    };

    let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(stdout_err);
    w(out, format!("a = {a}, N = {modulus}, m = {m}, backend = {}, shots = {shots}, seed = {seed}", backend.name()))?;
    w(out, format!("order = {order}"))?;
    let mut top: Vec<(u64, u64)> = report.histogram.iter().map(|(&u, &c)| (u, c)).collect();
    if top.len() > HISTOGRAM_ROWS {
        top.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
        top.truncate(HISTOGRAM_ROWS);
        top.sort();
        w(out, format!("outcome histogram ({HISTOGRAM_ROWS} most frequent of {}):", report.histogram.len()))?;
    } else {
        w(out, "outcome histogram:".into())?;
    }
    for (u, c) in top {
        let mark = if numtheory::of_post(a, modulus, u, m) == Some(order) { " *" } else { "" };
        w(out, format!("  {u:>8} {c:>8}{mark}"))?;
    }
    w(out, "recovered orders:".into())?;
    for (r, c) in &recovered {
        let label = r.map_or("none".to_string(), |r| r.to_string());
        w(out, format!("  {label:>8} {c:>8}"))?;
    }
    w(out, format!("success = {:.4}% ({successes}/{shots})", 100.0 * report.success_fraction()))?;
    w(out, format!("exact success = {:.4}%", 100.0 * exact))?;
    w(out, format!("certified bound = {:.4}%", 100.0 * report.bound))?;
    Ok(report)
}

/// Outcome of the factoring pipeline.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorReport {
    pub factor: u64,
    /// Number of quantum-loop trials, 0 when pre-processing decided.
    pub trials: usize,
}

/// Classical pre-processing, then up to `niter` random trials.
pub fn factor(
    modulus: u64,
    niter: u32,
    seed: u64,
    choice: BackendChoice,
    out: &mut dyn Write,
) -> Result<FactorReport, CliError> {
    if !(2..=u32::MAX as u64).contains(&modulus) {
        return Err(CliError::Param(format!("N = {modulus} must lie in [2, 2^32)")));
    }
    let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(stdout_err);
    let class = numtheory::preprocess(modulus);
    match class {
        Classification::Prime => return Err(CliError::Param(format!("N = {modulus} is prime"))),
        Classification::Even | Classification::PrimePower { .. } => {
            let f = class.classical_factor().expect("classical branch has a factor");
            w(out, format!("N = {modulus}: {class:?}, no quantum step"))?;
            w(out, format!("factor = {f}"))?;
            return Ok(FactorReport { factor: f, trials: 0 });
        }
        Classification::CompositeOdd => {}
    }
    let mut backend = Backend::new(choice, modulus);
    w(out, format!("N = {modulus}, niter = {niter}, seed = {seed}, backend = {}", backend.name()))?;
    let run = numtheory::end_to_end(modulus, niter, seed, &mut backend)?;
    for (i, t) in run.trials.iter().enumerate() {
        let show = |v: Option<u64>| v.map_or("-".to_string(), |v| v.to_string());
        w(
            out,
            format!(
                "trial {i}: a = {}, outcome = {}, order = {}, factor = {}",
                t.a,
                show(t.outcome),
                show(t.order),
                show(t.factor)
            ),
        )?;
    }
    match run.factor {
        Some(f) => {
            w(out, format!("factor = {f}"))?;
            Ok(FactorReport { factor: f, trials: run.trials.len() })
        }
        None => Err(CliError::NoFactor { modulus, trials: niter }),
    }
}

/// Limits of the invariant suites run by `verify`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantLimits {
    pub imm_limit: u64,
    pub eigen_limit: u64,
    pub qft_qubits: usize,
}

impl Default for InvariantLimits {
    fn default() -> Self {
        InvariantLimits { imm_limit: 16, eigen_limit: 12, qft_qubits: 6 }
    }
}

/// Runs the lemma sweeps and the invariant suites; fails on any violation.
pub fn verify(limits: &SweepLimits, inv: &InvariantLimits, out: &mut dyn Write) -> Result<(), CliError> {
    let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(stdout_err);
    w(out, format!("{:<24} {:>10} {:>12}  result", "check", "limit", "cases"))?;
    let mut failures = Vec::new();
    for r in analysis::verify_lemma_sweeps(limits) {
        let result = r.counterexample.clone().map_or("ok".to_string(), |c| format!("FAIL: {c}"));
        w(out, format!("{:<24} {:>10} {:>12}  {result}", r.name, r.limit, r.cases))?;
        if !r.satisfied() {
            failures.push(r.name);
        }
    }
    let suites: [(u64, InvariantReport); 4] = [
        (inv.imm_limit, invariants::imm_oracle(inv.imm_limit)),
        (inv.eigen_limit, invariants::eigenpairs(inv.eigen_limit, 1e-8)),
        (inv.qft_qubits as u64, invariants::qft_dft(inv.qft_qubits, 1e-9)),
        (inv.qft_qubits as u64, invariants::qpe_textbook(inv.qft_qubits, 1e-9)),
    ];
    for (limit, r) in suites {
        let result = r.failure.clone().map_or(format!("ok (max error {:.1e})", r.max_error), |c| format!("FAIL: {c}"));
        w(out, format!("{:<24} {:>10} {:>12}  {result}", r.name, limit, r.cases))?;
        if !r.satisfied() {
            failures.push(r.name);
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failures.join(", ")))
    }
}

/// Computes the statistics table for `bits`, printing it and optionally
/// writing CSV to `path`.
pub fn stats_cmd(
    bits: std::ops::RangeInclusive<u32>,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<Vec<shor_core::analysis::StatsRow>, CliError> {
    if *bits.start() < 2 || *bits.end() > 32 || bits.is_empty() {
        return Err(CliError::Param("bit sizes must satisfy 2 <= min <= max <= 32".into()));
    }
    let rows = analysis::emit_stats(bits)?;
    stats::write_table(&rows, &mut *out).map_err(stdout_err)?;
    if let Some(path) = path {
        let file = File::create(path).map_err(CliError::io(path))?;
        stats::write_csv(&rows, BufWriter::new(file)).map_err(|e| CliError::Io {
            path: path.into(),
            source: e.into(),
        })?;
        writeln!(out, "wrote {}", path.display()).map_err(stdout_err)?;
    }
    if let Some(r) = rows.iter().find(|r| !r.bounds_hold()) {
        return Err(CliError::Verification(format!("certified bounds fail at {} bits", r.bits)));
    }
    Ok(rows)
}
