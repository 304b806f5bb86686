//! Runs circuits on any backend and reports samples, exact outcome
//! probabilities, the gate-crossing profile and timings.
//!
//! All three backends sample the same way: measurements are visited in
//! program order and one uniform draw `u` decides each outcome (`0` iff
//! `u < p0`), so a seed fixes the whole sample list.

mod bench;
mod family;

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Op};
use crate::dense;
use crate::error::{Error, MpsError, Result};
use crate::mps::{MpsState, OutcomeSource};
use crate::tensornet::{
    self, bits_string, exact_outcomes, sample_once, split_terminal_measurements, AdaptiveRunner, ConditionalSource,
    JointSampler,
};
use crate::transform::{cost_estimate, d_profile, lower_to_adjacent, reduce, CostEstimate, DProfile, Stage};

pub use bench::{bench, BenchRow, BenchTable};
pub use family::{cluster_line, generate_family, Family, FamilySpec};

pub const SCHEMA_VERSION: u32 = 1;
pub const RNG_ALGORITHM: &str = "chacha20";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Mps,
    Net,
    Dense,
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "mps" => Ok(Backend::Mps),
            "net" => Ok(Backend::Net),
            "dense" => Ok(Backend::Dense),
            other => Err(format!("unknown backend `{other}` (expected mps, net or dense)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub max_chi: usize,
    /// Entries, not open indices.
    pub max_frontier: usize,
    pub max_dense_qubits: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_chi: 4096, max_frontier: tensornet::DEFAULT_MAX_FRONTIER, max_dense_qubits: dense::DEFAULT_DENSE_CAP }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportFlags {
    pub exact_probs: bool,
    pub d_profile: bool,
    pub chi_trace: bool,
    pub timing: bool,
}

impl Default for ReportFlags {
    fn default() -> Self {
        ReportFlags { exact_probs: false, d_profile: true, chi_trace: false, timing: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub backend: Backend,
    pub shots: usize,
    pub seed: u64,
    pub caps: Caps,
    pub report: ReportFlags,
}

impl RunConfig {
    pub fn new(backend: Backend) -> Self {
        RunConfig { backend, shots: 0, seed: 0, caps: Caps::default(), report: ReportFlags::default() }
    }

    pub fn shots(mut self, shots: usize) -> Self {
        self.shots = shots;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn exact(mut self) -> Self {
        self.report.exact_probs = true;
        self
    }

    pub fn chi_trace(mut self) -> Self {
        self.report.chi_trace = true;
        self
    }

    fn check(&self) -> Result<()> {
        let c = &self.caps;
        if c.max_chi == 0 || c.max_frontier == 0 || c.max_dense_qubits == 0 {
            return Err(Error::Config("caps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub raw: DProfile,
    pub reduced: DProfile,
    pub lowered: DProfile,
    /// Stage whose `D` governs cost: raw for adaptive circuits, reduced otherwise.
    pub reported: Stage,
    pub d: usize,
    pub cost_estimate: CostEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub rng_algorithm: String,
    pub backend: Backend,
    pub seed: u64,
    pub n_qubits: usize,
    /// Register names; sample and outcome strings list bits in this order.
    pub registers: Vec<String>,
    pub samples: Vec<String>,
    pub exact_probs: Option<BTreeMap<String, f64>>,
    pub d_profile: Option<ProfileReport>,
    /// Largest Schmidt rank after each instruction of the simulated circuit (mps).
    pub chi_trace: Option<Vec<usize>>,
    /// Largest Schmidt rank seen (mps) or most open frontier indices (net).
    pub peak_width: Option<usize>,
    /// `⟨ψ|ψ⟩` of a measurement-free `linear` circuit (net only).
    pub network_value: Option<f64>,
    pub timings: Option<BTreeMap<String, f64>>,
}

impl RunReport {
    pub fn counts(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for s in &self.samples {
            *out.entry(s.clone()).or_insert(0) += 1;
        }
        out
    }

    /// JSON with timings removed, for determinism checks.
    pub fn without_timings(&self) -> RunReport {
        RunReport { timings: None, ..self.clone() }
    }
}

pub fn profile_report(c: &Circuit) -> ProfileReport {
    let reduced_c = reduce(c);
    let lowered_c = lower_to_adjacent(&reduced_c);
    let raw = d_profile(c, Stage::Raw);
    let reduced = d_profile(&reduced_c, Stage::Reduced);
    let lowered = d_profile(&lowered_c, Stage::Lowered);
    let chosen = if c.is_adaptive() { &raw } else { &reduced };
    ProfileReport {
        reported: chosen.computed_on,
        d: chosen.d_max,
        cost_estimate: cost_estimate(chosen),
        raw,
        reduced,
        lowered,
    }
}

struct Timer {
    enabled: bool,
    phases: BTreeMap<String, f64>,
    at: Instant,
}

impl Timer {
    fn new(enabled: bool) -> Self {
        Timer { enabled, phases: BTreeMap::new(), at: Instant::now() }
    }

    fn lap(&mut self, phase: &str) {
        let now = Instant::now();
        *self.phases.entry(phase.to_string()).or_insert(0.0) += (now - self.at).as_secs_f64();
        self.at = now;
    }

    fn finish(self) -> Option<BTreeMap<String, f64>> {
        self.enabled.then_some(self.phases)
    }
}

/// Runs `c` on the configured backend.
pub fn run(c: &Circuit, cfg: &RunConfig) -> Result<RunReport> {
    cfg.check()?;
    let diags = crate::circuit::validate(c);
    if let Some(d) = diags.into_iter().next() {
        return Err(crate::error::CircuitError::Validation(d.to_string()).into());
    }
    let mut timer = Timer::new(cfg.report.timing);
    let profile = cfg.report.d_profile.then(|| profile_report(c));
    timer.lap("analyze");

    let mut report = RunReport {
        schema_version: SCHEMA_VERSION,
        rng_algorithm: RNG_ALGORITHM.to_string(),
        backend: cfg.backend,
        seed: cfg.seed,
        n_qubits: c.n_qubits,
        registers: c.registers(),
        samples: Vec::new(),
        exact_probs: None,
        d_profile: profile,
        chi_trace: None,
        peak_width: None,
        network_value: None,
        timings: None,
    };

    match cfg.backend {
        Backend::Mps => {
            if c.linear {
                return Err(Error::Config("the mps backend needs unitary gates; run `linear` circuits on net".into()));
            }
            let mut src = MpsConditionals::new(c, cfg.caps.max_chi)?;
            timer.lap("prepare");
            drive(&mut src, cfg, &mut report, &mut timer)?;
            report.peak_width = Some(src.peak_chi);
            if cfg.report.chi_trace {
                report.chi_trace = Some(src.trace.clone());
            }
        }
        Backend::Net => {
            if c.linear {
                if c.has_measurements() || cfg.shots > 0 || cfg.report.exact_probs {
                    return Err(crate::error::NetError::LinearSampling.into());
                }
                let net = tensornet::build_doubled_network(&tensornet::prepare(c)?, &[])?;
                let (v, stats) = tensornet::contract_with_stats(&net, cfg.caps.max_frontier)?;
                timer.lap("contract");
                report.network_value = Some(tensornet::to_real(v)?);
                report.peak_width = Some(stats.peak_open);
            } else if c.is_adaptive() || measures_a_line_twice(c) {
                let mut src = AdaptiveRunner::new(c, cfg.caps.max_frontier)?;
                timer.lap("prepare");
                drive(&mut src, cfg, &mut report, &mut timer)?;
                report.peak_width = Some(src.stats().peak_open);
            } else {
                let (_, lines) = split_terminal_measurements(c)?;
                let mut src = JointSampler::new(c, &lines, cfg.caps.max_frontier)?;
                timer.lap("prepare");
                drive(&mut src, cfg, &mut report, &mut timer)?;
                report.peak_width = Some(src.stats().peak_open);
            }
        }
        Backend::Dense => {
            let mut src = DenseConditionals::new(c, cfg.caps.max_dense_qubits)?;
            timer.lap("prepare");
            drive(&mut src, cfg, &mut report, &mut timer)?;
        }
    }
    report.timings = timer.finish();
    Ok(report)
}

/// Repeated terminal measurements need the folded-prefix runner; the joint
/// sampler takes each line once.
fn measures_a_line_twice(c: &Circuit) -> bool {
    let mut seen = std::collections::BTreeSet::new();
    c.instructions.iter().any(|i| matches!(i.op, Op::Measure { line, .. } if !seen.insert(line)))
}

fn drive<S>(src: &mut S, cfg: &RunConfig, report: &mut RunReport, timer: &mut Timer) -> Result<()>
where
    S: ConditionalSource,
    Error: From<S::Error>,
{
    // the first trajectory always runs, so traces and widths are populated
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    if cfg.shots == 0 {
        src.conditionals(&[])?;
    }
    for _ in 0..cfg.shots {
        let (bits, _) = sample_once(src, &mut rng)?;
        report.samples.push(bits_string(&bits));
    }
    timer.lap("sample");
    if cfg.report.exact_probs {
        let mut table = BTreeMap::new();
        for (bits, p) in exact_outcomes(src)? {
            *table.entry(bits_string(&bits)).or_insert(0.0) += p;
        }
        report.exact_probs = Some(table);
        timer.lap("exact");
    }
    Ok(())
}

/// Exact per-measurement conditionals from the statevector branch table.
struct DenseConditionals {
    /// Joint outcome probabilities over all registers.
    table: BTreeMap<String, f64>,
    m: usize,
}

impl DenseConditionals {
    fn new(c: &Circuit, cap: usize) -> Result<Self> {
        let table = dense::register_distribution(c, cap)?;
        Ok(DenseConditionals { table, m: c.registers().len() })
    }

    fn mass(&self, prefix: &str) -> f64 {
        self.table.range(prefix.to_string()..).take_while(|(k, _)| k.starts_with(prefix)).map(|(_, p)| p).sum()
    }
}

impl ConditionalSource for DenseConditionals {
    type Error = Error;

    fn measurement_count(&self) -> usize {
        self.m
    }

    fn conditionals(&mut self, history: &[u8]) -> Result<(f64, f64)> {
        if history.len() >= self.m {
            return Ok((1.0, 0.0));
        }
        let h = bits_string(history);
        let m0 = self.mass(&format!("{h}0"));
        let m1 = self.mass(&format!("{h}1"));
        let total = m0 + m1;
        if total <= 0.0 {
            return Err(Error::Config(format!("outcome prefix {h} has zero probability")));
        }
        Ok((m0 / total, m1 / total))
    }
}

/// Runs the reduced and lowered circuit on an MPS, branching at measurements.
/// States just before each measurement are cached by outcome history.
struct MpsConditionals {
    circuit: Circuit,
    /// `(instruction index, line)` per measurement of the lowered circuit.
    measures: Vec<(usize, usize)>,
    registers: Vec<String>,
    max_chi: usize,
    pre: HashMap<Vec<u8>, (MpsState, f64, f64)>,
    trace: Vec<usize>,
    /// Outcome history the trace has followed so far; `None` once it stops.
    traced: Option<Vec<u8>>,
    peak_chi: usize,
}

const MPS_CACHE_LIMIT: usize = 1 << 12;

impl MpsConditionals {
    fn new(c: &Circuit, max_chi: usize) -> Result<Self> {
        let lowered = lower_to_adjacent(&reduce(c));
        let measures = lowered
            .instructions
            .iter()
            .enumerate()
            .filter_map(|(i, ins)| match ins.op {
                Op::Measure { line, .. } => Some((i, line)),
                _ => None,
            })
            .collect();
        Ok(MpsConditionals {
            registers: lowered.registers(),
            circuit: lowered,
            measures,
            max_chi,
            pre: HashMap::new(),
            trace: Vec::new(),
            traced: Some(Vec::new()),
            peak_chi: 1,
        })
    }

    fn record(&mut self, s: &MpsState, tracing: bool) {
        let chi = s.max_chi();
        self.peak_chi = self.peak_chi.max(chi);
        if tracing {
            self.trace.push(chi);
        }
    }

    fn check_cap(&self, s: &MpsState) -> Result<()> {
        for (cut, chi) in s.bond_dims().into_iter().enumerate() {
            if chi > self.max_chi {
                return Err(MpsError::ChiCap { cut, chi, cap: self.max_chi }.into());
            }
        }
        Ok(())
    }

    /// State just before measurement `history.len()` (or the final state).
    fn pre_state(&mut self, history: &[u8]) -> Result<(MpsState, f64, f64)> {
        if let Some(v) = self.pre.get(history) {
            return Ok(v.clone());
        }
        let t = history.len();
        let tracing = match &self.traced {
            Some(path) => t == 0 || (path.len() + 1 == t && history.starts_with(path)),
            None => false,
        };
        if !tracing {
            self.traced = None;
        }
        let (mut s, start) = if t == 0 {
            (MpsState::from_product(&self.circuit.input_states())?, 0)
        } else {
            let (prev, _, _) = self.pre_state(&history[..t - 1])?;
            let mut s = prev;
            let (idx, line) = self.measures[t - 1];
            s.measure_in_place(line, OutcomeSource::Fixed(history[t - 1]))?;
            self.record(&s, tracing);
            (s, idx + 1)
        };
        let end = self.measures.get(t).map(|m| m.0).unwrap_or(self.circuit.instructions.len());
        for i in start..end {
            let ins = &self.circuit.instructions[i];
            if let Some(cond) = &ins.condition {
                let written = self.registers[..t].iter().position(|r| *r == cond.register);
                if written.map(|w| history[w] != cond.bit).unwrap_or(true) {
                    continue;
                }
            }
            match &ins.op {
                Op::OneQubit { line, matrix } => s.apply_1q(*line, matrix)?,
                Op::TwoQubit { first, second, matrix } => {
                    s.apply_2q(*first, *second, matrix)?;
                    self.check_cap(&s)?;
                }
                Op::Input { .. } | Op::Measure { .. } => {}
            }
            self.record(&s, tracing);
        }
        let (p0, p1) = match self.measures.get(t) {
            Some(&(_, line)) => s.probabilities(line)?,
            None => (1.0, 0.0),
        };
        if tracing {
            self.traced = Some(history.to_vec());
        }
        if self.pre.len() >= MPS_CACHE_LIMIT {
            self.pre.clear();
        }
        self.pre.insert(history.to_vec(), (s.clone(), p0, p1));
        Ok((s, p0, p1))
    }
}

impl ConditionalSource for MpsConditionals {
    type Error = Error;

    fn measurement_count(&self) -> usize {
        self.measures.len()
    }

    fn conditionals(&mut self, history: &[u8]) -> Result<(f64, f64)> {
        let (_, p0, p1) = self.pre_state(history)?;
        Ok((p0, p1))
    }
}
