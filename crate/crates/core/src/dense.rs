//! Brute-force statevector simulation, the exact reference for every other backend.
//!
//! Amplitude index bit `n - 1 - line` holds the value of `line`, so line 0 is
//! the most significant bit.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::circuit::{Circuit, Instruction, Op};
use crate::error::DenseError;
use crate::numerics::{ComplexMatrix, ComplexVector, ZERO};

pub const DEFAULT_DENSE_CAP: usize = 14;
pub const UNITARY_CAP: usize = 10;

/// Branches whose probability falls below this are dropped during enumeration.
pub const BRANCH_CUTOFF: f64 = 1e-14;

/// Probability table keyed by bitstrings (first listed bit leftmost).
pub type Distribution = BTreeMap<String, f64>;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn zero_state(n: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << n];
        amplitudes[0] = C64::new(1.0, 0.0);
        Self { n, amplitudes }
    }

    pub fn product(inputs: &[[C64; 2]]) -> Self {
        let mut amplitudes = vec![C64::new(1.0, 0.0)];
        for pair in inputs {
            amplitudes = amplitudes.iter().flat_map(|a| [a * pair[0], a * pair[1]]).collect();
        }
        Self { n: inputs.len(), amplitudes }
    }

    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Option<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return None;
        }
        Some(Self { n: len.trailing_zeros() as usize, amplitudes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn to_vector(&self) -> ComplexVector {
        ComplexVector(self.amplitudes.clone())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    fn bit(&self, line: usize) -> usize {
        1 << (self.n - 1 - line)
    }

    fn check_line(&self, line: usize) -> Result<(), DenseError> {
        if line >= self.n {
            return Err(DenseError::LineOutOfRange { line, n: self.n });
        }
        Ok(())
    }

    pub fn apply_1q(&mut self, line: usize, m: &ComplexMatrix) -> Result<(), DenseError> {
        self.check_line(line)?;
        let b = self.bit(line);
        let (m00, m01, m10, m11) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        for i in 0..self.amplitudes.len() {
            if i & b == 0 {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i | b];
                self.amplitudes[i] = m00 * a0 + m01 * a1;
                self.amplitudes[i | b] = m10 * a0 + m11 * a1;
            }
        }
        Ok(())
    }

    /// Gate in basis `|q_first q_second⟩`.
    pub fn apply_2q(&mut self, first: usize, second: usize, m: &ComplexMatrix) -> Result<(), DenseError> {
        self.check_line(first)?;
        self.check_line(second)?;
        let bf = self.bit(first);
        let bs = self.bit(second);
        for i in 0..self.amplitudes.len() {
            if i & (bf | bs) != 0 {
                continue;
            }
            let idx = [i, i | bs, i | bf, i | bf | bs];
            let v = idx.map(|k| self.amplitudes[k]);
            for (row, &k) in idx.iter().enumerate() {
                self.amplitudes[k] = (0..4).map(|col| m[(row, col)] * v[col]).sum();
            }
        }
        Ok(())
    }

    /// Probability of reading `1` on `line`.
    pub fn prob_one(&self, line: usize) -> f64 {
        let b = self.bit(line);
        self.amplitudes.iter().enumerate().filter(|(i, _)| i & b != 0).map(|(_, z)| z.norm_sqr()).sum()
    }

    /// Projects `line` onto `bit` and divides by `sqrt(prob)`.
    pub fn collapse(&mut self, line: usize, bit: u8, prob: f64) {
        let b = self.bit(line);
        let scale = 1.0 / prob.sqrt();
        for (i, z) in self.amplitudes.iter_mut().enumerate() {
            if ((i & b != 0) as u8) == bit {
                *z *= scale;
            } else {
                *z = ZERO;
            }
        }
    }

    /// Born distribution over the listed lines.
    pub fn marginal(&self, lines: &[usize]) -> Distribution {
        let mut out = Distribution::new();
        for (i, z) in self.amplitudes.iter().enumerate() {
            let p = z.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let key: String = lines.iter().map(|&l| if i & self.bit(l) != 0 { '1' } else { '0' }).collect();
            *out.entry(key).or_insert(0.0) += p;
        }
        out
    }
}

/// Applies one gate instruction, ignoring any classical condition.
pub fn apply_gate(s: &mut StateVector, instr: &Instruction) -> Result<(), DenseError> {
    match &instr.op {
        Op::OneQubit { line, matrix } => s.apply_1q(*line, matrix),
        Op::TwoQubit { first, second, matrix } => s.apply_2q(*first, *second, matrix),
        Op::Measure { .. } | Op::Input { .. } => Err(DenseError::NotAGate),
    }
}

fn check_cap(n: usize, cap: usize) -> Result<(), DenseError> {
    if n > cap {
        return Err(DenseError::TooManyQubits { n, cap });
    }
    Ok(())
}

/// Final state of a measurement-free circuit from its declared product input.
pub fn simulate(c: &Circuit, cap: usize) -> Result<StateVector, DenseError> {
    check_cap(c.n_qubits, cap)?;
    let mut s = StateVector::product(&c.input_states());
    for (idx, ins) in c.instructions.iter().enumerate() {
        match ins.op {
            Op::Measure { .. } => return Err(DenseError::HasMeasurement(idx)),
            Op::Input { .. } => {}
            _ => apply_gate(&mut s, ins)?,
        }
    }
    Ok(s)
}

/// The `2^n x 2^n` linear map of a measurement-free circuit (inputs ignored).
pub fn overall_unitary(c: &Circuit) -> Result<ComplexMatrix, DenseError> {
    check_cap(c.n_qubits, UNITARY_CAP)?;
    if let Some(idx) = c.instructions.iter().position(|i| matches!(i.op, Op::Measure { .. })) {
        return Err(DenseError::HasMeasurement(idx));
    }
    let dim = 1usize << c.n_qubits;
    let mut u = ComplexMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut amps = vec![ZERO; dim];
        amps[col] = C64::new(1.0, 0.0);
        let mut s = StateVector { n: c.n_qubits, amplitudes: amps };
        for ins in &c.instructions {
            if ins.op.is_gate() {
                apply_gate(&mut s, ins)?;
            }
        }
        for (row, z) in s.amplitudes.iter().enumerate() {
            u[(row, col)] = *z;
        }
    }
    Ok(u)
}

/// One fully resolved measurement history.
#[derive(Clone, Debug)]
pub struct Branch {
    pub prob: f64,
    /// Bits in register order.
    pub bits: Vec<u8>,
    pub state: StateVector,
}

/// Runs `c` exhaustively, splitting at every measurement and resolving
/// classical conditions per branch. Branches below [`BRANCH_CUTOFF`] are dropped.
pub fn enumerate_branches(c: &Circuit, cap: usize) -> Result<Vec<Branch>, DenseError> {
    check_cap(c.n_qubits, cap)?;
    let registers = c.registers();
    let start = Branch { prob: 1.0, bits: Vec::new(), state: StateVector::product(&c.input_states()) };
    let mut branches = vec![start];
    for ins in &c.instructions {
        match &ins.op {
            Op::Input { .. } => {}
            Op::Measure { line, .. } => {
                let mut next = Vec::with_capacity(branches.len() * 2);
                for br in branches {
                    let total = br.state.norm_sqr();
                    let p1 = br.state.prob_one(*line) / total;
                    for (bit, p) in [(0u8, 1.0 - p1), (1u8, p1)] {
                        if p <= BRANCH_CUTOFF {
                            continue;
                        }
                        let mut state = br.state.clone();
                        state.collapse(*line, bit, p * total);
                        let mut bits = br.bits.clone();
                        bits.push(bit);
                        next.push(Branch { prob: br.prob * p, bits, state });
                    }
                }
                branches = next;
            }
            _ => {
                for br in &mut branches {
                    let active = match &ins.condition {
                        None => true,
                        Some(cond) => {
                            let pos = registers.iter().position(|r| *r == cond.register);
                            pos.and_then(|p| br.bits.get(p)).map(|&b| b == cond.bit).unwrap_or(false)
                        }
                    };
                    if active {
                        apply_gate(&mut br.state, ins)?;
                    }
                }
            }
        }
    }
    Ok(branches)
}

/// Exact joint distribution of the listed lines after running `c`, with
/// mid-circuit measurement branches weighted by their probabilities.
pub fn full_distribution(c: &Circuit, lines: &[usize], cap: usize) -> Result<Distribution, DenseError> {
    for &l in lines {
        if l >= c.n_qubits {
            return Err(DenseError::LineOutOfRange { line: l, n: c.n_qubits });
        }
    }
    let mut out = Distribution::new();
    for br in enumerate_branches(c, cap)? {
        for (k, p) in br.state.marginal(lines) {
            *out.entry(k).or_insert(0.0) += br.prob * p;
        }
    }
    Ok(out)
}

/// Exact distribution over measurement registers (bits in register order).
pub fn register_distribution(c: &Circuit, cap: usize) -> Result<Distribution, DenseError> {
    let mut out = Distribution::new();
    for br in enumerate_branches(c, cap)? {
        let key: String = br.bits.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect();
        *out.entry(key).or_insert(0.0) += br.prob;
    }
    Ok(out)
}

/// `⟨ψ|M†M|ψ⟩` where `ψ` is the (possibly unnormalized) output of a
/// measurement-free circuit and `M` applies the given one-qubit operators.
pub fn insertion_value(c: &Circuit, insertions: &[(usize, ComplexMatrix)]) -> Result<f64, DenseError> {
    let mut s = simulate(c, DEFAULT_DENSE_CAP)?;
    for (line, m) in insertions {
        s.apply_1q(*line, m)?;
    }
    Ok(s.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{bell, gates, Circuit};
    use crate::numerics::is_unitary;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn x_on_line_zero() {
        let mut s = StateVector::zero_state(2);
        s.apply_1q(0, &gates::x()).unwrap();
        assert_eq!(s.amplitudes()[2], c(1.0));
    }

    #[test]
    fn cnot_makes_bell() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut s = StateVector::from_amplitudes(vec![c(r), c(0.0), c(r), c(0.0)]).unwrap();
        s.apply_2q(0, 1, &gates::cnot()).unwrap();
        let expect = [c(r), c(0.0), c(0.0), c(r)];
        for (a, b) in s.amplitudes().iter().zip(expect) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn reversed_cnot_orientation() {
        // control on line 1, target on line 0: |01⟩ -> |11⟩
        let mut s = StateVector::from_amplitudes(vec![c(0.0), c(1.0), c(0.0), c(0.0)]).unwrap();
        s.apply_2q(1, 0, &gates::cnot()).unwrap();
        assert_eq!(s.amplitudes()[3], c(1.0));
    }

    #[test]
    fn out_of_range_gate() {
        let mut s = StateVector::zero_state(2);
        assert!(matches!(s.apply_1q(2, &gates::x()), Err(DenseError::LineOutOfRange { .. })));
    }

    fn random_circuit(rng: &mut ChaCha20Rng, n: usize, len: usize) -> Circuit {
        let mut circ = Circuit::new(n);
        for _ in 0..len {
            if rng.random_bool(0.5) {
                circ.gate1(rng.random_range(0..n), gates::random_unitary(2, rng));
            } else {
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                circ.gate2(a, b, gates::random_unitary(4, rng));
            }
        }
        circ
    }

    #[test]
    fn gate_sequence_matches_overall_unitary() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let circ = random_circuit(&mut rng, 4, 30);
        let u = overall_unitary(&circ).unwrap();
        assert!(is_unitary(&u, 1e-9).unwrap());
        let s = simulate(&circ, 14).unwrap();
        let col0: Vec<C64> = (0..16).map(|r| u[(r, 0)]).collect();
        for (a, b) in s.amplitudes().iter().zip(col0) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn norm_is_preserved_over_many_gates() {
        let mut rng = ChaCha20Rng::seed_from_u64(22);
        let circ = random_circuit(&mut rng, 5, 100);
        let s = simulate(&circ, 14).unwrap();
        assert!((s.norm_sqr().sqrt() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn overall_unitary_small_cases() {
        assert_eq!(overall_unitary(&Circuit::new(2)).unwrap(), ComplexMatrix::identity(4));
        let mut circ = Circuit::new(1);
        circ.h(0);
        assert_eq!(overall_unitary(&circ).unwrap(), gates::h());
        assert!(matches!(overall_unitary(&bell()), Err(DenseError::HasMeasurement(2))));
        assert!(matches!(overall_unitary(&Circuit::new(11)), Err(DenseError::TooManyQubits { .. })));
    }

    #[test]
    fn distributions() {
        let d = full_distribution(&bell(), &[0, 1], 14).unwrap();
        assert_eq!(d.len(), 2);
        assert!((d["00"] - 0.5).abs() < 1e-15 && (d["11"] - 0.5).abs() < 1e-15);

        let mut one = Circuit::new(1);
        one.measure(0, "m0");
        assert_eq!(register_distribution(&one, 14).unwrap()["0"], 1.0);

        let mut rng = ChaCha20Rng::seed_from_u64(23);
        let circ = random_circuit(&mut rng, 6, 40);
        let total: f64 = full_distribution(&circ, &[0, 1, 2, 3, 4, 5], 14).unwrap().values().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn adaptive_branches_resolve_conditions() {
        let mut circ = Circuit::new(2);
        circ.x(0).measure(0, "m0");
        circ.push_conditioned(Op::OneQubit { line: 1, matrix: gates::x() }, "m0", 1);
        circ.measure(1, "m1");
        let d = register_distribution(&circ, 14).unwrap();
        assert_eq!(d.len(), 1);
        assert!((d["11"] - 1.0).abs() < 1e-15);
    }
}
