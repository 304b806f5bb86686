//! Circuit rewrites and static analysis.
//!
//! * [`reduce`] folds one-qubit gates into neighbouring two-qubit gates and
//!   fuses back-to-back gates on the same pair of lines.
//! * [`d_profile`] counts, per line, the two-qubit gates that touch or cross it.
//! * [`lower_to_adjacent`] replaces every range-`r` gate by `2r - 1` gates on
//!   neighbouring lines (swaps in, the gate, swaps out).
//! * [`cost_estimate`] turns a profile into the advisory `n · 2^(6D)` estimate.

use serde::{Deserialize, Serialize};

use crate::circuit::{gates, Circuit, Instruction, Op};
use crate::numerics::{kron, matmul, ComplexMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Raw,
    Reduced,
    Lowered,
}

impl std::str::FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(Stage::Raw),
            "reduced" => Ok(Stage::Reduced),
            "lowered" => Ok(Stage::Lowered),
            other => Err(format!("unknown stage `{other}` (expected raw, reduced or lowered)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DProfile {
    pub per_line: Vec<usize>,
    pub d_max: usize,
    pub computed_on: Stage,
}

impl DProfile {
    pub fn n(&self) -> usize {
        self.per_line.len()
    }
}

/// `D_i` = number of two-qubit gates with `min(j,k) <= i <= max(j,k)`.
pub fn d_profile(c: &Circuit, stage: Stage) -> DProfile {
    let mut per_line = vec![0usize; c.n_qubits];
    for ins in &c.instructions {
        if let Op::TwoQubit { first, second, .. } = ins.op {
            let (lo, hi) = (first.min(second), first.max(second));
            for d in per_line.iter_mut().take(hi.min(c.n_qubits.saturating_sub(1)) + 1).skip(lo) {
                *d += 1;
            }
        }
    }
    let d_max = per_line.iter().copied().max().unwrap_or(0);
    DProfile { per_line, d_max, computed_on: stage }
}

/// Two-qubit gates crossing each cut `i | i+1` (length `n - 1`).
pub fn cut_gate_counts(c: &Circuit) -> Vec<usize> {
    let mut cuts = vec![0usize; c.n_qubits.saturating_sub(1)];
    for ins in &c.instructions {
        if let Op::TwoQubit { first, second, .. } = ins.op {
            for cut in first.min(second)..first.max(second) {
                if let Some(x) = cuts.get_mut(cut) {
                    *x += 1;
                }
            }
        }
    }
    cuts
}

/// True when every two-qubit gate acts on neighbouring lines.
pub fn is_lowered(c: &Circuit) -> bool {
    c.instructions.iter().all(|ins| match ins.op {
        Op::TwoQubit { first, second, .. } => first.abs_diff(second) == 1,
        _ => true,
    })
}

/// Reduced form of `c`.
///
/// Within each stretch of unconditioned gates, pending one-qubit gates are
/// multiplied into the next two-qubit gate on their line, or into the previous
/// one when the line has no later two-qubit gate, and kept as a single merged
/// gate when the stretch has no two-qubit gate on that line. Consecutive gates
/// on the same pair of lines are then fused. Measurements, inputs and
/// conditioned instructions are never moved and split the circuit into
/// independently reduced stretches.
pub fn reduce(c: &Circuit) -> Circuit {
    let mut out = Circuit { n_qubits: c.n_qubits, instructions: Vec::new(), linear: c.linear };
    let mut segment: Vec<&Instruction> = Vec::new();
    for ins in &c.instructions {
        if ins.condition.is_none() && ins.op.is_gate() {
            segment.push(ins);
        } else {
            out.instructions.extend(reduce_segment(c.n_qubits, &segment));
            segment.clear();
            out.instructions.push(ins.clone());
        }
    }
    out.instructions.extend(reduce_segment(c.n_qubits, &segment));
    out
}

fn embed(first: Option<&ComplexMatrix>, second: Option<&ComplexMatrix>) -> ComplexMatrix {
    let id = ComplexMatrix::identity(2);
    kron(first.unwrap_or(&id), second.unwrap_or(&id))
}

fn mul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    matmul(a, b).expect("gate matrices are conformable")
}

fn reduce_segment(n: usize, segment: &[&Instruction]) -> Vec<Instruction> {
    if segment.is_empty() {
        return Vec::new();
    }
    let mut pending: Vec<Option<ComplexMatrix>> = vec![None; n];
    let mut last_two: Vec<Option<usize>> = vec![None; n];
    let mut absorbed: Vec<Instruction> = Vec::new();
    for ins in segment {
        match &ins.op {
            Op::OneQubit { line, matrix } => {
                pending[*line] = Some(match pending[*line].take() {
                    Some(p) => mul(matrix, &p),
                    None => matrix.clone(),
                });
            }
            Op::TwoQubit { first, second, matrix } => {
                let pf = pending[*first].take();
                let ps = pending[*second].take();
                let matrix = if pf.is_none() && ps.is_none() {
                    matrix.clone()
                } else {
                    mul(matrix, &embed(pf.as_ref(), ps.as_ref()))
                };
                last_two[*first] = Some(absorbed.len());
                last_two[*second] = Some(absorbed.len());
                absorbed.push(Instruction::new(Op::TwoQubit { first: *first, second: *second, matrix }));
            }
            _ => unreachable!("segments hold gates only"),
        }
    }
    let mut lone = Vec::new();
    for (line, p) in pending.into_iter().enumerate() {
        let Some(p) = p else { continue };
        match last_two[line] {
            Some(idx) => {
                if let Op::TwoQubit { first, matrix, .. } = &mut absorbed[idx].op {
                    let left = if *first == line { embed(Some(&p), None) } else { embed(None, Some(&p)) };
                    *matrix = mul(&left, matrix);
                }
            }
            None => lone.push(Instruction::new(Op::OneQubit { line, matrix: p })),
        }
    }
    absorbed.extend(lone);
    fuse_pairs(n, absorbed)
}

/// Fuses runs of gates on the same unordered line pair with nothing in between
/// on either line. A single pass reaches the fixpoint because fusing never
/// removes an interposed gate.
fn fuse_pairs(n: usize, gates_in: Vec<Instruction>) -> Vec<Instruction> {
    let mut out: Vec<Instruction> = Vec::with_capacity(gates_in.len());
    let mut last_touch: Vec<Option<usize>> = vec![None; n];
    for ins in gates_in {
        if let Op::TwoQubit { first, second, matrix } = &ins.op {
            if let (Some(a), Some(b)) = (last_touch[*first], last_touch[*second]) {
                if a == b {
                    if let Op::TwoQubit { first: pf, matrix: pm, .. } = &mut out[a].op {
                        let aligned = if *pf == *first { matrix.clone() } else { gates::flip_two_qubit(matrix) };
                        *pm = mul(&aligned, pm);
                        continue;
                    }
                }
            }
        }
        let idx = out.len();
        for l in ins.op.lines() {
            last_touch[l] = Some(idx);
        }
        out.push(ins);
    }
    out
}

/// Rewrites every non-adjacent two-qubit gate on lines `a < b` (range `r = b - a`)
/// as `r - 1` swaps walking line `a` down to `b - 1`, the gate on `(b - 1, b)`,
/// and `r - 1` swaps walking it back. Conditions are copied onto every
/// replacement gate.
pub fn lower_to_adjacent(c: &Circuit) -> Circuit {
    let mut out = Circuit { n_qubits: c.n_qubits, instructions: Vec::new(), linear: c.linear };
    for ins in &c.instructions {
        let Op::TwoQubit { first, second, matrix } = &ins.op else {
            out.instructions.push(ins.clone());
            continue;
        };
        let (a, b) = (*first.min(second), *first.max(second));
        if b - a <= 1 {
            out.instructions.push(ins.clone());
            continue;
        }
        let with_cond = |op: Op| Instruction { op, condition: ins.condition.clone() };
        for l in a..b - 1 {
            out.instructions.push(with_cond(Op::TwoQubit { first: l, second: l + 1, matrix: gates::swap() }));
        }
        let (f, s) = if *first == a { (b - 1, b) } else { (b, b - 1) };
        out.instructions.push(with_cond(Op::TwoQubit { first: f, second: s, matrix: matrix.clone() }));
        for l in (a..b - 1).rev() {
            out.instructions.push(with_cond(Op::TwoQubit { first: l, second: l + 1, matrix: gates::swap() }));
        }
    }
    out
}

/// Constants of the advisory estimate `n · c1 · (2^(c2·D))^c3`.
pub const COST_C1: f64 = 1.0;
pub const COST_C2: f64 = 2.0;
pub const COST_C3: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub n: usize,
    pub d: usize,
    /// `c2 · c3 · D`, the power of two multiplying `n · c1`.
    pub bound_exponent: f64,
    /// `log2(n · c1) + bound_exponent`; the estimate itself overflows for large D.
    pub log2_steps: f64,
    pub note: String,
}

impl CostEstimate {
    pub fn steps(&self) -> f64 {
        self.log2_steps.exp2()
    }
}

pub fn cost_estimate(p: &DProfile) -> CostEstimate {
    let n = p.n();
    let d = p.d_max;
    let bound_exponent = COST_C2 * COST_C3 * d as f64;
    let log2_steps = (n.max(1) as f64 * COST_C1).log2() + bound_exponent;
    CostEstimate {
        n,
        d,
        bound_exponent,
        log2_steps,
        note: "advisory: n * (4^D)^3, Schmidt rank <= 4^D per cut with cubic local updates".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Circuit, Condition};
    use crate::dense::overall_unitary;

    fn unitary_close(a: &Circuit, b: &Circuit, tol: f64) -> bool {
        overall_unitary(a).unwrap().max_abs_diff(&overall_unitary(b).unwrap()).unwrap() < tol
    }

    #[test]
    fn hh_absorbed_into_cnot() {
        let mut c = Circuit::new(2);
        c.h(0).h(0).cnot(0, 1);
        let r = reduce(&c);
        assert_eq!(r.instructions.len(), 1);
        assert!(matches!(r.instructions[0].op, Op::TwoQubit { first: 0, second: 1, .. }));
        assert!(unitary_close(&c, &r, 1e-12));
        if let Op::TwoQubit { matrix, .. } = &r.instructions[0].op {
            assert!(matrix.max_abs_diff(&gates::cnot()).unwrap() < 1e-15);
        }
    }

    #[test]
    fn lone_line_keeps_merged_gate() {
        let mut c = Circuit::new(2);
        c.h(0).x(0).h(1).h(1);
        let r = reduce(&c);
        assert_eq!(r.instructions.len(), 2);
        assert!(unitary_close(&c, &r, 1e-12));
        let single_h = {
            let mut c = Circuit::new(1);
            c.h(0);
            c
        };
        assert_eq!(reduce(&single_h), single_h);
    }

    #[test]
    fn trailing_gates_fold_into_previous() {
        let mut c = Circuit::new(3);
        c.cnot(0, 1).h(0).cz(1, 2).x(2).gate1(1, gates::s());
        let r = reduce(&c);
        assert!(r.instructions.iter().all(|i| matches!(i.op, Op::TwoQubit { .. })));
        assert_eq!(r.instructions.len(), 2);
        assert!(unitary_close(&c, &r, 1e-12));
    }

    #[test]
    fn same_pair_fusion_handles_orientation() {
        let mut c = Circuit::new(3);
        c.cnot(0, 1).cnot(1, 0).h(2).cnot(0, 1);
        let r = reduce(&c);
        let twos = r.instructions.iter().filter(|i| matches!(i.op, Op::TwoQubit { .. })).count();
        assert_eq!(twos, 1);
        assert!(unitary_close(&c, &r, 1e-12));
    }

    #[test]
    fn measurement_is_a_barrier() {
        let mut c = Circuit::new(2);
        c.h(0).cnot(0, 1).measure(1, "m1").h(0).cnot(0, 1);
        c.push_conditioned(Op::OneQubit { line: 0, matrix: gates::x() }, "m1", 1);
        c.h(0);
        let r = reduce(&c);
        assert_eq!(r.instructions.len(), 5);
        assert!(matches!(r.instructions[1].op, Op::Measure { .. }));
        assert_eq!(r.instructions[3].condition, Some(Condition { register: "m1".into(), bit: 1 }));
        assert_eq!(reduce(&r), r);
    }

    #[test]
    fn profile_examples() {
        let empty = d_profile(&Circuit::new(4), Stage::Raw);
        assert_eq!(empty.per_line, vec![0; 4]);
        assert_eq!(empty.d_max, 0);

        let mut ladder = Circuit::new(6);
        for i in 0..5 {
            ladder.cnot(i, i + 1);
        }
        assert_eq!(d_profile(&ladder, Stage::Raw).d_max, 2);

        let mut layer = Circuit::new(8);
        for i in 0..4 {
            layer.cz(i, i + 4);
        }
        let p = d_profile(&layer, Stage::Raw);
        // oracle: count gates with j <= i <= k directly
        let brute: Vec<usize> = (0..8).map(|i| (0..4).filter(|&g| g <= i && i <= g + 4).count()).collect();
        assert_eq!(p.per_line, brute);
        assert_eq!(p.per_line[3], 4);
        assert_eq!(p.per_line[4], 4);
    }

    #[test]
    fn lowering_counts() {
        let mut adj = Circuit::new(5);
        adj.cnot(3, 4);
        assert_eq!(lower_to_adjacent(&adj), adj);

        let mut far = Circuit::new(4);
        far.cnot(0, 3);
        let low = lower_to_adjacent(&far);
        assert_eq!(low.instructions.len(), 5);
        assert!(is_lowered(&low));
        assert!(unitary_close(&far, &low, 1e-12));

        let mut back = Circuit::new(5);
        back.cnot(4, 1);
        let low = lower_to_adjacent(&back);
        assert!(unitary_close(&back, &low, 1e-12));
        let per = d_profile(&low, Stage::Lowered);
        assert!(per.per_line.iter().all(|&d| d <= 4));
    }

    #[test]
    fn cost_is_monotone() {
        let mk = |n: usize, d: usize| DProfile { per_line: vec![d; n], d_max: d, computed_on: Stage::Reduced };
        let zero = cost_estimate(&mk(8, 0));
        assert_eq!(zero.bound_exponent, 0.0);
        assert!((zero.steps() - 8.0).abs() < 1e-9);
        assert!((cost_estimate(&mk(16, 0)).steps() - 16.0).abs() < 1e-9);
        assert!(cost_estimate(&mk(8, 3)).log2_steps < cost_estimate(&mk(8, 6)).log2_steps);
    }
}
