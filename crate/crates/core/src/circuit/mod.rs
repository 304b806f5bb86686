//! Circuit intermediate representation.
//!
//! A [`Circuit`] is a flat, time-ordered list of instructions over `n` qubit
//! lines numbered from 0. Two-qubit gate matrices are written in the basis
//! `|q_first q_second⟩` with the first listed line as the most significant
//! bit, whether or not `first < second`.

mod format;
pub mod gates;

use std::collections::HashSet;
use std::fmt;

use num_complex::Complex64 as C64;

use crate::numerics::{is_unitary, ComplexMatrix};

pub use format::{emit_circuit, parse_circuit};

/// Unitarity tolerance applied to gates of non-`linear` circuits.
pub const GATE_UNITARITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    OneQubit { line: usize, matrix: ComplexMatrix },
    TwoQubit { first: usize, second: usize, matrix: ComplexMatrix },
    Measure { line: usize, register: String },
    /// Product-state input `a|0⟩ + b|1⟩` on one line; precedes every gate on that line.
    Input { line: usize, amplitudes: [C64; 2] },
}

impl Op {
    pub fn lines(&self) -> Vec<usize> {
        match *self {
            Op::OneQubit { line, .. } | Op::Measure { line, .. } | Op::Input { line, .. } => vec![line],
            Op::TwoQubit { first, second, .. } => vec![first, second],
        }
    }

    pub fn touches(&self, l: usize) -> bool {
        match *self {
            Op::OneQubit { line, .. } | Op::Measure { line, .. } | Op::Input { line, .. } => line == l,
            Op::TwoQubit { first, second, .. } => first == l || second == l,
        }
    }

    pub fn is_gate(&self) -> bool {
        matches!(self, Op::OneQubit { .. } | Op::TwoQubit { .. })
    }
}

/// Classical control: execute only if `register` holds `bit`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Condition {
    pub register: String,
    pub bit: u8,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instruction {
    pub op: Op,
    pub condition: Option<Condition>,
}

impl Instruction {
    pub fn new(op: Op) -> Self {
        Self { op, condition: None }
    }

    pub fn conditioned(op: Op, register: impl Into<String>, bit: u8) -> Self {
        Self { op, condition: Some(Condition { register: register.into(), bit }) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub instructions: Vec<Instruction>,
    /// Permits non-unitary gate matrices (contraction backend only).
    pub linear: bool,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, instructions: Vec::new(), linear: false }
    }

    pub fn push(&mut self, op: Op) -> &mut Self {
        self.instructions.push(Instruction::new(op));
        self
    }

    pub fn push_conditioned(&mut self, op: Op, register: impl Into<String>, bit: u8) -> &mut Self {
        self.instructions.push(Instruction::conditioned(op, register, bit));
        self
    }

    pub fn gate1(&mut self, line: usize, matrix: ComplexMatrix) -> &mut Self {
        self.push(Op::OneQubit { line, matrix })
    }

    pub fn gate2(&mut self, first: usize, second: usize, matrix: ComplexMatrix) -> &mut Self {
        self.push(Op::TwoQubit { first, second, matrix })
    }

    pub fn h(&mut self, line: usize) -> &mut Self {
        self.gate1(line, gates::h())
    }

    pub fn x(&mut self, line: usize) -> &mut Self {
        self.gate1(line, gates::x())
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> &mut Self {
        self.gate2(control, target, gates::cnot())
    }

    pub fn cz(&mut self, a: usize, b: usize) -> &mut Self {
        self.gate2(a, b, gates::cz())
    }

    pub fn swap(&mut self, a: usize, b: usize) -> &mut Self {
        self.gate2(a, b, gates::swap())
    }

    pub fn measure(&mut self, line: usize, register: impl Into<String>) -> &mut Self {
        self.push(Op::Measure { line, register: register.into() })
    }

    pub fn input(&mut self, line: usize, a: C64, b: C64) -> &mut Self {
        self.push(Op::Input { line, amplitudes: [a, b] })
    }

    /// Appends `measure i -> m{i}` for every line.
    pub fn measure_all(&mut self) -> &mut Self {
        for line in 0..self.n_qubits {
            self.measure(line, format!("m{line}"));
        }
        self
    }

    /// Register names in the order they are first written.
    pub fn registers(&self) -> Vec<String> {
        self.instructions
            .iter()
            .filter_map(|ins| match &ins.op {
                Op::Measure { register, .. } => Some(register.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn has_measurements(&self) -> bool {
        self.instructions.iter().any(|i| matches!(i.op, Op::Measure { .. }))
    }

    /// True when some gate is classically conditioned or follows a measurement.
    pub fn is_adaptive(&self) -> bool {
        let mut seen_measure = false;
        for ins in &self.instructions {
            if ins.condition.is_some() {
                return true;
            }
            match ins.op {
                Op::Measure { .. } => seen_measure = true,
                Op::OneQubit { .. } | Op::TwoQubit { .. } if seen_measure => return true,
                _ => {}
            }
        }
        false
    }

    /// Per-line product input; lines without an `Input` start in `|0⟩`.
    pub fn input_states(&self) -> Vec<[C64; 2]> {
        let mut states = vec![[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]; self.n_qubits];
        for ins in &self.instructions {
            if let Op::Input { line, amplitudes } = ins.op {
                if line < self.n_qubits {
                    states[line] = amplitudes;
                }
            }
        }
        states
    }

    pub fn two_qubit_gate_count(&self) -> usize {
        self.instructions.iter().filter(|i| matches!(i.op, Op::TwoQubit { .. })).count()
    }

    pub fn gate_count(&self) -> usize {
        self.instructions.iter().filter(|i| i.op.is_gate()).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DiagnosticKind {
    LineOutOfRange,
    SameLine,
    NotUnitary,
    BadShape,
    NonFinite,
    UnknownRegister,
    DuplicateRegister,
    InputAfterGate,
    ConditionedMeasurement,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    /// Index into `Circuit::instructions`.
    pub instruction: usize,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "instruction {}: {}", self.instruction, self.message)
    }
}

/// Checks every instruction and circuit invariant; empty means valid.
pub fn validate(c: &Circuit) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut written: HashSet<&str> = HashSet::new();
    let mut gated_lines: HashSet<usize> = HashSet::new();
    let n = c.n_qubits;
    for (idx, ins) in c.instructions.iter().enumerate() {
        let mut diag = |kind, message: String| out.push(Diagnostic { instruction: idx, kind, message });
        if let Some(cond) = &ins.condition {
            if !written.contains(cond.register.as_str()) {
                diag(
                    DiagnosticKind::UnknownRegister,
                    format!("condition references register {} before any measurement writes it", cond.register),
                );
            }
            if matches!(ins.op, Op::Measure { .. } | Op::Input { .. }) {
                diag(DiagnosticKind::ConditionedMeasurement, "only gates may be classically conditioned".into());
            }
        }
        for l in ins.op.lines() {
            if l >= n {
                diag(DiagnosticKind::LineOutOfRange, format!("line {l} out of range for {n} qubits"));
            }
        }
        match &ins.op {
            Op::OneQubit { line, matrix } => {
                check_matrix(matrix, 2, c.linear, &mut diag);
                gated_lines.insert(*line);
            }
            Op::TwoQubit { first, second, matrix } => {
                if first == second {
                    diag(DiagnosticKind::SameLine, format!("two-qubit gate uses line {first} twice"));
                }
                check_matrix(matrix, 4, c.linear, &mut diag);
                gated_lines.insert(*first);
                gated_lines.insert(*second);
            }
            Op::Measure { line, register } => {
                if !written.insert(register.as_str()) {
                    diag(DiagnosticKind::DuplicateRegister, format!("register {register} written twice"));
                }
                gated_lines.insert(*line);
            }
            Op::Input { line, amplitudes } => {
                if gated_lines.contains(line) {
                    diag(DiagnosticKind::InputAfterGate, format!("input on line {line} follows an operation on it"));
                }
                if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    diag(DiagnosticKind::NonFinite, "input amplitudes must be finite".into());
                }
            }
        }
    }
    out
}

fn check_matrix(m: &ComplexMatrix, dim: usize, linear: bool, diag: &mut impl FnMut(DiagnosticKind, String)) {
    if m.rows() != dim || m.cols() != dim {
        diag(DiagnosticKind::BadShape, format!("expected {dim}x{dim} matrix, got {}x{}", m.rows(), m.cols()));
        return;
    }
    if m.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        diag(DiagnosticKind::NonFinite, "gate matrix has non-finite entries".into());
        return;
    }
    if !linear && !is_unitary(m, GATE_UNITARITY_TOL).unwrap_or(false) {
        diag(DiagnosticKind::NotUnitary, "gate matrix is not unitary and the circuit is not flagged linear".into());
    }
}

/// The canonical two-qubit example: Bell pair with both lines measured.
pub fn bell() -> Circuit {
    let mut c = Circuit::new(2);
    c.h(0).cnot(0, 1).measure(0, "m0").measure(1, "m1");
    c
}

/// `(|0…0⟩ + |1…1⟩)/√2` on `n` lines, measured on every line.
pub fn ghz(n: usize) -> Circuit {
    let mut c = Circuit::new(n);
    c.h(0);
    for i in 1..n {
        c.cnot(i - 1, i);
    }
    c.measure_all();
    c
}

/// Teleports `α|0⟩ + β|1⟩` from line 0 to line 2. Registers `m0`, `m1`
/// hold the Bell measurement and `out` the final reading of line 2.
pub fn teleportation(alpha: C64, beta: C64) -> Circuit {
    let mut c = Circuit::new(3);
    c.input(0, alpha, beta);
    c.h(1).cnot(1, 2).cnot(0, 1).h(0);
    c.measure(0, "m0").measure(1, "m1");
    c.push_conditioned(Op::OneQubit { line: 2, matrix: gates::x() }, "m1", 1);
    c.push_conditioned(Op::OneQubit { line: 2, matrix: gates::z() }, "m0", 1);
    c.measure(2, "out");
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn teleportation_is_valid() {
        assert!(validate(&teleportation(C64::new(0.6, 0.0), C64::new(0.0, 0.8))).is_empty());
    }

    #[test]
    fn bell_is_valid() {
        assert!(validate(&bell()).is_empty());
    }

    #[test]
    fn out_of_range_line() {
        let mut c = Circuit::new(3);
        c.h(5);
        let d = validate(&c);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::LineOutOfRange);
    }

    #[test]
    fn linear_flag_permits_non_unitary() {
        let mut c = Circuit::new(1);
        c.gate1(0, ComplexMatrix::from_real_diag(&[1.0, 2.0]));
        let d = validate(&c);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::NotUnitary);
        c.linear = true;
        assert!(validate(&c).is_empty());
    }

    #[test]
    fn condition_needs_earlier_measure() {
        let mut c = Circuit::new(2);
        c.push_conditioned(Op::OneQubit { line: 1, matrix: gates::x() }, "m0", 1);
        c.measure(0, "m0");
        let d = validate(&c);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::UnknownRegister);
    }

    #[test]
    fn duplicate_register_and_late_input() {
        let mut c = Circuit::new(2);
        c.h(0).measure(0, "m").measure(1, "m");
        c.input(0, C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        let kinds: Vec<_> = validate(&c).into_iter().map(|d| d.kind).collect();
        assert_eq!(kinds, vec![DiagnosticKind::DuplicateRegister, DiagnosticKind::InputAfterGate]);
    }

    #[test]
    fn adaptivity() {
        assert!(!bell().is_adaptive());
        let mut c = Circuit::new(2);
        c.measure(0, "m0").x(1);
        assert!(c.is_adaptive());
    }
}
