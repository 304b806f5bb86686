//! Contraction backend.
//!
//! A measurement-free circuit with adjacent two-qubit gates is turned into a
//! doubled network: the circuit, a one-qubit operator `M_l` on every line, and
//! the mirror image with conjugated data. Fully contracted it gives
//! `⟨ψ|M†M|ψ⟩`. Choosing `M_l = |k⟩⟨k|` yields a probability; dividing earlier
//! projectors by `√p` turns it into a conditional probability.
//!
//! Contraction walks the lines in order. Each node is owned by the lowest line
//! it touches, and processing line `i` absorbs the nodes it owns in chain
//! order. Whatever is left open after line `i` (the legs of gates crossing to
//! line `i + 1`) is the frontier.

use std::borrow::Cow;
use std::collections::{BTreeSet, HashMap};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::circuit::{gates, Circuit, Instruction, Op};
use crate::error::NetError;
use crate::numerics::{ComplexMatrix, ONE, ZERO};
use crate::transform::{lower_to_adjacent, reduce};

/// Frontier entries allowed by default (`2^22` complex numbers, 64 MiB).
pub const DEFAULT_MAX_FRONTIER: usize = 1 << 22;
pub const IMAGINARY_TOL: f64 = 1e-10;
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Outcomes less likely than this are treated as impossible.
pub const PROBABILITY_FLOOR: f64 = 1e-14;
const EXHAUSTIVE_MAX_INDICES: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Forward,
    Adjoint,
}

/// Segment label. Forward ordinals run `0..=m` along a line with `m` gates;
/// the segment through the inserted operator is `(line, m + 1, Forward)`.
/// Derived ordering is the canonical frontier layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct IndexId {
    pub line: usize,
    pub ordinal: usize,
    pub side: Side,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Leg {
    pub index: IndexId,
    pub direction: Direction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Input,
    Gate,
    Insertion,
}

/// Data is row-major over `legs`, first leg most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorNode {
    pub kind: NodeKind,
    pub side: Side,
    pub legs: Vec<Leg>,
    pub data: Vec<C64>,
}

impl TensorNode {
    pub fn lines(&self) -> BTreeSet<usize> {
        self.legs.iter().map(|l| l.index.line).collect()
    }

    fn owner(&self) -> usize {
        self.legs.iter().map(|l| l.index.line).min().unwrap_or(0)
    }

    fn as_tensor(&self) -> Tensor {
        Tensor { legs: self.legs.iter().map(|l| l.index).collect(), data: self.data.clone() }
    }
}

#[derive(Clone, Debug)]
pub struct DoubledNetwork {
    pub n_lines: usize,
    pub nodes: Vec<TensorNode>,
    /// Node ids along each line: input, gates, insertion, then the mirror.
    pub chains: Vec<Vec<usize>>,
    /// `(forward, adjoint)` insertion node ids per line.
    insertions: Vec<(usize, usize)>,
}

/// Tensor over the indices left open between processed and unprocessed lines.
#[derive(Clone, Debug, PartialEq)]
pub struct Frontier {
    pub open_indices: Vec<IndexId>,
    pub data: Vec<C64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ContractionStats {
    /// Most open indices held by any intermediate tensor.
    pub peak_open: usize,
    /// Open indices after each processed line.
    pub boundary_open: Vec<usize>,
}

impl ContractionStats {
    fn merge(&mut self, other: &ContractionStats) {
        self.peak_open = self.peak_open.max(other.peak_open);
        if other.boundary_open.len() > self.boundary_open.len() {
            self.boundary_open.resize(other.boundary_open.len(), 0);
        }
        for (a, b) in self.boundary_open.iter_mut().zip(&other.boundary_open) {
            *a = (*a).max(*b);
        }
    }
}

/// Builds the doubled network of a measurement-free, adjacent-gate circuit.
/// Lines missing from `insertions` get the identity.
pub fn build_doubled_network(c: &Circuit, insertions: &[(usize, ComplexMatrix)]) -> Result<DoubledNetwork, NetError> {
    let n = c.n_qubits;
    let mut inserted: Vec<ComplexMatrix> = vec![ComplexMatrix::identity(2); n];
    for (line, m) in insertions {
        if *line >= n {
            return Err(NetError::LineOutOfRange { line: *line, n });
        }
        if m.rows() != 2 || m.cols() != 2 {
            return Err(NetError::Malformed(format!("insertion on line {line} is {}x{}", m.rows(), m.cols())));
        }
        inserted[*line] = m.clone();
    }

    let idx = |line, ordinal| IndexId { line, ordinal, side: Side::Forward };
    let leg = |index, direction| Leg { index, direction };
    let mut seg = vec![0usize; n];
    let mut inputs = Vec::with_capacity(n);
    for (line, amps) in c.input_states().into_iter().enumerate() {
        inputs.push(TensorNode {
            kind: NodeKind::Input,
            side: Side::Forward,
            legs: vec![leg(idx(line, 0), Direction::Out)],
            data: amps.to_vec(),
        });
    }
    let mut ops = Vec::new();
    for (index, ins) in c.instructions.iter().enumerate() {
        if ins.condition.is_some() {
            return Err(NetError::ConditionedInNetwork { index });
        }
        match &ins.op {
            Op::Input { .. } => {}
            Op::Measure { .. } => return Err(NetError::MeasurementInNetwork { index }),
            Op::OneQubit { line, matrix } => {
                let l = *line;
                if l >= n {
                    return Err(NetError::LineOutOfRange { line: l, n });
                }
                ops.push(TensorNode {
                    kind: NodeKind::Gate,
                    side: Side::Forward,
                    legs: vec![leg(idx(l, seg[l] + 1), Direction::Out), leg(idx(l, seg[l]), Direction::In)],
                    data: matrix.as_slice().to_vec(),
                });
                seg[l] += 1;
            }
            Op::TwoQubit { first, second, matrix } => {
                let (a, b) = (*first, *second);
                if a >= n || b >= n {
                    return Err(NetError::LineOutOfRange { line: a.max(b), n });
                }
                if a.abs_diff(b) != 1 {
                    return Err(NetError::NonAdjacentGate { index, j: a, k: b });
                }
                ops.push(TensorNode {
                    kind: NodeKind::Gate,
                    side: Side::Forward,
                    legs: vec![
                        leg(idx(a, seg[a] + 1), Direction::Out),
                        leg(idx(b, seg[b] + 1), Direction::Out),
                        leg(idx(a, seg[a]), Direction::In),
                        leg(idx(b, seg[b]), Direction::In),
                    ],
                    data: matrix.as_slice().to_vec(),
                });
                seg[a] += 1;
                seg[b] += 1;
            }
        }
    }
    let centers: Vec<TensorNode> = (0..n)
        .map(|l| TensorNode {
            kind: NodeKind::Insertion,
            side: Side::Forward,
            legs: vec![leg(idx(l, seg[l] + 1), Direction::Out), leg(idx(l, seg[l]), Direction::In)],
            data: inserted[l].as_slice().to_vec(),
        })
        .collect();

    let mirror = |node: &TensorNode| {
        let legs = node
            .legs
            .iter()
            .map(|lg| {
                let center = node.kind == NodeKind::Insertion && lg.direction == Direction::Out;
                let side = if center { Side::Forward } else { Side::Adjoint };
                let direction = match lg.direction {
                    Direction::In => Direction::Out,
                    Direction::Out => Direction::In,
                };
                Leg { index: IndexId { side, ..lg.index }, direction }
            })
            .collect();
        TensorNode { kind: node.kind, side: Side::Adjoint, legs, data: node.data.iter().map(|z| z.conj()).collect() }
    };

    let mut nodes = Vec::with_capacity(2 * (inputs.len() + ops.len() + centers.len()));
    nodes.extend(inputs.iter().cloned());
    nodes.extend(ops.iter().cloned());
    let fwd_center = nodes.len();
    nodes.extend(centers.iter().cloned());
    let adj_center = nodes.len();
    nodes.extend(centers.iter().map(mirror));
    nodes.extend(ops.iter().rev().map(mirror));
    nodes.extend(inputs.iter().map(mirror));

    let mut chains = vec![Vec::new(); n];
    for (id, node) in nodes.iter().enumerate() {
        for line in node.lines() {
            chains[line].push(id);
        }
    }
    let insertions = (0..n).map(|l| (fwd_center + l, adj_center + l)).collect();
    Ok(DoubledNetwork { n_lines: n, nodes, chains, insertions })
}

impl DoubledNetwork {
    /// Same network with the operator on `line` replaced.
    pub fn with_insertion(&self, line: usize, m: &ComplexMatrix) -> Result<Self, NetError> {
        if line >= self.n_lines {
            return Err(NetError::LineOutOfRange { line, n: self.n_lines });
        }
        let mut out = self.clone();
        out.set_insertion(line, m);
        Ok(out)
    }

    fn set_insertion(&mut self, line: usize, m: &ComplexMatrix) {
        let (f, a) = self.insertions[line];
        self.nodes[f].data = m.as_slice().to_vec();
        self.nodes[a].data = m.as_slice().iter().map(|z| z.conj()).collect();
    }

    /// Distinct indices in the network.
    pub fn index_count(&self) -> usize {
        self.nodes.iter().flat_map(|n| n.legs.iter().map(|l| l.index)).collect::<BTreeSet<_>>().len()
    }

    /// Every index must appear exactly once as `Out` and once as `In`, and
    /// node data must match its arity.
    pub fn check(&self) -> Result<(), NetError> {
        let mut seen: HashMap<IndexId, (usize, usize)> = HashMap::new();
        for (id, node) in self.nodes.iter().enumerate() {
            if node.data.len() != 1 << node.legs.len() {
                return Err(NetError::Malformed(format!("node {id} has {} entries for {} legs", node.data.len(), node.legs.len())));
            }
            for lg in &node.legs {
                let e = seen.entry(lg.index).or_default();
                match lg.direction {
                    Direction::Out => e.0 += 1,
                    Direction::In => e.1 += 1,
                }
            }
        }
        for (index, (outs, ins)) in seen {
            if outs != 1 || ins != 1 {
                return Err(NetError::Malformed(format!("{index:?} appears {outs} times as out and {ins} as in")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Tensor {
    legs: Vec<IndexId>,
    data: Vec<C64>,
}

impl Tensor {
    fn scalar(v: C64) -> Self {
        Tensor { legs: Vec::new(), data: vec![v] }
    }

    fn into_frontier(self) -> Frontier {
        let mut order = self.legs.clone();
        order.sort();
        let data = permute(&self, &order).into_owned();
        Frontier { open_indices: order, data }
    }

    fn from_frontier(f: Frontier) -> Self {
        Tensor { legs: f.open_indices, data: f.data }
    }
}

/// Reorders `t`'s data to the leg order `order` (a permutation of `t.legs`).
fn permute<'a>(t: &'a Tensor, order: &[IndexId]) -> Cow<'a, [C64]> {
    if t.legs == order {
        return Cow::Borrowed(&t.data);
    }
    let r = order.len();
    // bit position (from the least significant end) of each new leg in the old layout
    let old_pos: Vec<usize> = order
        .iter()
        .map(|id| r - 1 - t.legs.iter().position(|x| x == id).expect("permutation of legs"))
        .collect();
    let lo_bits = r / 2;
    let hi_bits = r - lo_bits;
    let table = |bits: usize, offset: usize| -> Vec<usize> {
        (0..1usize << bits)
            .map(|v| {
                (0..bits).fold(0usize, |acc, b| {
                    // bit b of v is new position offset + b from the low end
                    if v >> b & 1 == 1 {
                        acc | 1 << old_pos[r - 1 - (offset + b)]
                    } else {
                        acc
                    }
                })
            })
            .collect()
    };
    let lo = table(lo_bits, 0);
    let hi = table(hi_bits, lo_bits);
    let mask = (1usize << lo_bits) - 1;
    let mut out = Vec::with_capacity(t.data.len());
    for new in 0..t.data.len() {
        out.push(t.data[hi[new >> lo_bits] | lo[new & mask]]);
    }
    Cow::Owned(out)
}

/// Contracts `a` with `b`, summing every index they share.
fn contract(a: &Tensor, b: &Tensor, line: usize, cap: usize) -> Result<Tensor, NetError> {
    let shared: Vec<IndexId> = a.legs.iter().filter(|x| b.legs.contains(x)).copied().collect();
    let a_keep: Vec<IndexId> = a.legs.iter().filter(|x| !shared.contains(x)).copied().collect();
    let b_keep: Vec<IndexId> = b.legs.iter().filter(|x| !shared.contains(x)).copied().collect();
    let open = a_keep.len() + b_keep.len();
    if open >= usize::BITS as usize || 1usize << open > cap {
        return Err(NetError::FrontierCap { line, open, cap });
    }
    let a_order: Vec<IndexId> = a_keep.iter().chain(&shared).copied().collect();
    let b_order: Vec<IndexId> = shared.iter().chain(&b_keep).copied().collect();
    let ad = permute(a, &a_order);
    let bd = permute(b, &b_order);
    let (rows, inner, cols) = (1usize << a_keep.len(), 1usize << shared.len(), 1usize << b_keep.len());
    let mut out = vec![ZERO; rows * cols];
    for i in 0..rows {
        let arow = &ad[i * inner..(i + 1) * inner];
        let orow = &mut out[i * cols..(i + 1) * cols];
        for (s, &x) in arow.iter().enumerate() {
            if x == ZERO {
                continue;
            }
            for (o, &y) in orow.iter_mut().zip(&bd[s * cols..(s + 1) * cols]) {
                *o += x * y;
            }
        }
    }
    Ok(Tensor { legs: a_keep.into_iter().chain(b_keep).collect(), data: out })
}

/// Absorbs the nodes owned by `line` into `t`, in chain order.
fn absorb_line(net: &DoubledNetwork, t: Tensor, line: usize, cap: usize, stats: &mut ContractionStats) -> Result<Tensor, NetError> {
    let mut t = t;
    for &id in &net.chains[line] {
        let node = &net.nodes[id];
        if node.owner() != line {
            continue;
        }
        t = contract(&t, &node.as_tensor(), line, cap)?;
        stats.peak_open = stats.peak_open.max(t.legs.len());
    }
    Ok(t)
}

/// Incremental left-to-right contraction, one line per [`LineSweep::step`].
pub struct LineSweep<'a> {
    net: &'a DoubledNetwork,
    tensor: Tensor,
    next_line: usize,
    cap: usize,
    stats: ContractionStats,
}

impl<'a> LineSweep<'a> {
    pub fn new(net: &'a DoubledNetwork, cap: usize) -> Self {
        LineSweep { net, tensor: Tensor::scalar(ONE), next_line: 0, cap, stats: ContractionStats::default() }
    }

    /// Processes the next line and returns the frontier it leaves behind,
    /// or `None` once every line is done.
    pub fn step(&mut self) -> Result<Option<Frontier>, NetError> {
        if self.next_line >= self.net.n_lines {
            return Ok(None);
        }
        let t = std::mem::replace(&mut self.tensor, Tensor::scalar(ONE));
        let t = absorb_line(self.net, t, self.next_line, self.cap, &mut self.stats)?;
        let f = t.into_frontier();
        self.stats.boundary_open.push(f.open_indices.len());
        self.tensor = Tensor::from_frontier(f.clone());
        self.next_line += 1;
        Ok(Some(f))
    }

    pub fn finish(mut self) -> Result<(C64, ContractionStats), NetError> {
        while self.step()?.is_some() {}
        if !self.tensor.legs.is_empty() {
            return Err(NetError::Malformed(format!("{} indices left open", self.tensor.legs.len())));
        }
        Ok((self.tensor.data[0], self.stats))
    }
}

pub fn contract_line_by_line(net: &DoubledNetwork, cap: usize) -> Result<C64, NetError> {
    contract_with_stats(net, cap).map(|(v, _)| v)
}

pub fn contract_with_stats(net: &DoubledNetwork, cap: usize) -> Result<(C64, ContractionStats), NetError> {
    let mut stats = ContractionStats::default();
    let mut t = Tensor::scalar(ONE);
    for line in 0..net.n_lines {
        t = absorb_line(net, t, line, cap, &mut stats)?;
        stats.boundary_open.push(t.legs.len());
    }
    if !t.legs.is_empty() {
        return Err(NetError::Malformed(format!("{} indices left open", t.legs.len())));
    }
    Ok((t.data[0], stats))
}

/// Reference value: sums the product of all node entries over every
/// assignment of every index. Exponential; for small networks only.
pub fn contract_exhaustive(net: &DoubledNetwork) -> Result<C64, NetError> {
    let indices: Vec<IndexId> =
        net.nodes.iter().flat_map(|n| n.legs.iter().map(|l| l.index)).collect::<BTreeSet<_>>().into_iter().collect();
    if indices.len() > EXHAUSTIVE_MAX_INDICES {
        return Err(NetError::Malformed(format!("{} indices is too many for an exhaustive sum", indices.len())));
    }
    let pos: HashMap<IndexId, usize> = indices.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let node_pos: Vec<Vec<usize>> = net.nodes.iter().map(|n| n.legs.iter().map(|l| pos[&l.index]).collect()).collect();
    let mut total = ZERO;
    for assignment in 0..1usize << indices.len() {
        let mut term = ONE;
        for (node, legs) in net.nodes.iter().zip(&node_pos) {
            let entry = legs.iter().fold(0usize, |acc, &p| acc << 1 | (assignment >> p & 1));
            term *= node.data[entry];
            if term == ZERO {
                break;
            }
        }
        total += term;
    }
    Ok(total)
}

/// Real part of a contraction whose value must be real.
pub fn to_real(v: C64) -> Result<f64, NetError> {
    if v.im.abs() > IMAGINARY_TOL * v.re.abs().max(1.0) {
        return Err(NetError::ImaginaryResidue(v.im.abs()));
    }
    Ok(v.re)
}

/// Real part of a probability-valued contraction, clamped to `[0, 1]`.
pub fn to_probability(v: C64) -> Result<f64, NetError> {
    if v.im.abs() > IMAGINARY_TOL {
        return Err(NetError::ImaginaryResidue(v.im.abs()));
    }
    Ok(v.re.clamp(0.0, 1.0))
}

/// Reduce then lower a measurement-free circuit.
pub fn prepare(c: &Circuit) -> Result<Circuit, NetError> {
    for (index, ins) in c.instructions.iter().enumerate() {
        if ins.condition.is_some() {
            return Err(NetError::ConditionedInNetwork { index });
        }
        if matches!(ins.op, Op::Measure { .. }) {
            return Err(NetError::MeasurementInNetwork { index });
        }
    }
    Ok(lower_to_adjacent(&reduce(c)))
}

/// `Π(bit) / √p`.
pub fn collapse_operator(bit: u8, p: f64) -> ComplexMatrix {
    gates::projector(bit).scale(C64::new(1.0 / p.sqrt(), 0.0))
}

fn check_fixed(n: usize, line: usize, fixed: &[(usize, u8, f64)]) -> Result<(), NetError> {
    if line >= n {
        return Err(NetError::LineOutOfRange { line, n });
    }
    let mut seen = BTreeSet::from([line]);
    for &(l, bit, p) in fixed {
        if l >= n {
            return Err(NetError::LineOutOfRange { line: l, n });
        }
        if !seen.insert(l) {
            return Err(NetError::DuplicateLine(l));
        }
        if p.is_nan() || p < PROBABILITY_FLOOR {
            return Err(NetError::ZeroProbabilityCondition { line: l, bit, prob: p });
        }
    }
    Ok(())
}

/// Probability of reading `k` on `line` given earlier outcomes `(line, bit, prob)`.
pub fn prob_outcome(c: &Circuit, line: usize, k: u8, fixed: &[(usize, u8, f64)], cap: usize) -> Result<f64, NetError> {
    check_fixed(c.n_qubits, line, fixed)?;
    let prepared = prepare(c)?;
    let mut ins: Vec<(usize, ComplexMatrix)> = fixed.iter().map(|&(l, b, p)| (l, collapse_operator(b, p))).collect();
    ins.push((line, gates::projector(k)));
    let net = build_doubled_network(&prepared, &ins)?;
    to_probability(contract_line_by_line(&net, cap)?)
}

/// Measurement-free part of a circuit whose measurements all come after
/// every gate on their line; also returns the measured lines in order.
pub fn split_terminal_measurements(c: &Circuit) -> Result<(Circuit, Vec<usize>), NetError> {
    let mut gates_only = Circuit::new(c.n_qubits);
    gates_only.linear = c.linear;
    let mut measured = Vec::new();
    for (index, ins) in c.instructions.iter().enumerate() {
        if ins.condition.is_some() {
            return Err(NetError::ConditionedInNetwork { index });
        }
        match &ins.op {
            Op::Measure { line, .. } => measured.push(*line),
            op => {
                if op.lines().iter().any(|l| measured.contains(l)) {
                    return Err(NetError::MeasurementInNetwork { index });
                }
                gates_only.instructions.push(ins.clone());
            }
        }
    }
    Ok((gates_only, measured))
}

/// Anything that yields the conditional outcome distribution of the next
/// measurement given the outcomes so far.
pub trait ConditionalSource {
    type Error;
    fn measurement_count(&self) -> usize;
    /// `(p0, p1)` of measurement `history.len()` given `history`.
    fn conditionals(&mut self, history: &[u8]) -> Result<(f64, f64), Self::Error>;
}

fn normalized(line: usize, p0: f64, p1: f64) -> Result<(f64, f64), NetError> {
    let sum = p0 + p1;
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(NetError::Unnormalized { line, sum });
    }
    Ok((p0, p1))
}

/// Outcome probabilities of the prefix `history` under `src`, one factor per step.
pub fn history_probs<S: ConditionalSource + ?Sized>(src: &mut S, history: &[u8]) -> Result<Vec<f64>, S::Error> {
    let mut out = Vec::with_capacity(history.len());
    for t in 0..history.len() {
        let (p0, p1) = src.conditionals(&history[..t])?;
        out.push(if history[t] == 0 { p0 } else { p1 });
    }
    Ok(out)
}

/// Chain-rule evaluation of a fixed list of measured lines on one circuit.
/// Left frontiers along the current prefix and identity right environments
/// are cached between queries.
pub struct JointSampler {
    net: DoubledNetwork,
    lines: Vec<usize>,
    cap: usize,
    memo: HashMap<Vec<u8>, (f64, f64)>,
    /// Per line `k`: key of insertions on lines `< k` and the tensor after them.
    left: Vec<Option<(Vec<(usize, u8, u64)>, Tensor)>>,
    right: Option<Vec<Tensor>>,
    stats: ContractionStats,
}

impl JointSampler {
    /// `c` must be measurement-free (or have only terminal measurements,
    /// which are ignored) and unitary.
    pub fn new(c: &Circuit, lines: &[usize], cap: usize) -> Result<Self, NetError> {
        if c.linear {
            return Err(NetError::LinearSampling);
        }
        let (gates_only, _) = split_terminal_measurements(c)?;
        let mut seen = BTreeSet::new();
        for &l in lines {
            if l >= c.n_qubits {
                return Err(NetError::LineOutOfRange { line: l, n: c.n_qubits });
            }
            if !seen.insert(l) {
                return Err(NetError::DuplicateLine(l));
            }
        }
        let net = build_doubled_network(&prepare(&gates_only)?, &[])?;
        let n = net.n_lines;
        Ok(JointSampler {
            net,
            lines: lines.to_vec(),
            cap,
            memo: HashMap::new(),
            left: vec![None; n + 1],
            right: None,
            stats: ContractionStats::default(),
        })
    }

    fn right_envs(&mut self) -> Result<&Vec<Tensor>, NetError> {
        if self.right.is_none() {
            let n = self.net.n_lines;
            let mut envs = vec![Tensor::scalar(ONE); n + 1];
            for k in (0..n).rev() {
                let t = absorb_line(&self.net, envs[k + 1].clone(), k, self.cap, &mut self.stats)?;
                envs[k] = t;
            }
            self.right = Some(envs);
        }
        Ok(self.right.as_ref().expect("filled"))
    }

    /// Tensor after lines `0..k` with the given collapse operators in place.
    fn left_env(&mut self, k: usize, fixed: &[(usize, u8, f64)]) -> Result<Tensor, NetError> {
        let key: Vec<(usize, u8, u64)> =
            fixed.iter().filter(|f| f.0 < k).map(|&(l, b, p)| (l, b, p.to_bits())).collect::<BTreeSet<_>>().into_iter().collect();
        if let Some((cached, t)) = &self.left[k] {
            if *cached == key {
                return Ok(t.clone());
            }
        }
        let t = if k == 0 {
            Tensor::scalar(ONE)
        } else {
            let prev = self.left_env(k - 1, fixed)?;
            let mut net = self.net.clone();
            if let Some(&(l, b, p)) = fixed.iter().find(|f| f.0 == k - 1) {
                net.set_insertion(l, &collapse_operator(b, p));
            }
            let t = absorb_line(&net, prev, k - 1, self.cap, &mut self.stats)?;
            let f = t.into_frontier();
            Tensor::from_frontier(f)
        };
        self.left[k] = Some((key, t.clone()));
        Ok(t)
    }

    fn evaluate(&mut self, line: usize, fixed: &[(usize, u8, f64)]) -> Result<(f64, f64), NetError> {
        let mut p = [0.0; 2];
        if fixed.iter().all(|f| f.0 < line) {
            let left = self.left_env(line, fixed)?;
            let right = self.right_envs()?[line + 1].clone();
            for (bit, slot) in p.iter_mut().enumerate() {
                let mut net = self.net.clone();
                net.set_insertion(line, &gates::projector(bit as u8));
                let t = absorb_line(&net, left.clone(), line, self.cap, &mut self.stats)?;
                let v = contract(&t, &right, line, self.cap)?;
                if !v.legs.is_empty() {
                    return Err(NetError::Malformed("environments do not close".into()));
                }
                *slot = to_probability(v.data[0])?;
            }
        } else {
            let mut net = self.net.clone();
            for &(l, b, pr) in fixed {
                net.set_insertion(l, &collapse_operator(b, pr));
            }
            for (bit, slot) in p.iter_mut().enumerate() {
                net.set_insertion(line, &gates::projector(bit as u8));
                let (v, s) = contract_with_stats(&net, self.cap)?;
                self.stats.merge(&s);
                *slot = to_probability(v)?;
            }
        }
        normalized(line, p[0], p[1])
    }
}

impl JointSampler {
    pub fn stats(&self) -> &ContractionStats {
        &self.stats
    }
}

impl ConditionalSource for JointSampler {
    type Error = NetError;

    fn measurement_count(&self) -> usize {
        self.lines.len()
    }

    fn conditionals(&mut self, history: &[u8]) -> Result<(f64, f64), NetError> {
        if history.len() >= self.measurement_count() {
            return Ok((1.0, 0.0));
        }
        if let Some(&v) = self.memo.get(history) {
            return Ok(v);
        }
        let probs = history_probs(self, history)?;
        let fixed: Vec<(usize, u8, f64)> =
            history.iter().zip(&probs).enumerate().map(|(t, (&b, &p))| (self.lines[t], b, p)).collect();
        let line = self.lines[history.len()];
        check_fixed(self.net.n_lines, line, &fixed)?;
        let v = self.evaluate(line, &fixed)?;
        self.memo.insert(history.to_vec(), v);
        Ok(v)
    }
}

/// Measurement-by-measurement evaluation of a circuit with mid-circuit
/// measurements and classically conditioned gates.
pub struct AdaptiveRunner {
    circuit: Circuit,
    /// `(instruction index, line, register)` per measurement.
    measurements: Vec<(usize, usize, String)>,
    cap: usize,
    memo: HashMap<Vec<u8>, (f64, f64)>,
    stats: ContractionStats,
}

impl AdaptiveRunner {
    pub fn new(c: &Circuit, cap: usize) -> Result<Self, NetError> {
        if c.linear {
            return Err(NetError::LinearSampling);
        }
        let measurements = c
            .instructions
            .iter()
            .enumerate()
            .filter_map(|(i, ins)| match &ins.op {
                Op::Measure { line, register } => Some((i, *line, register.clone())),
                _ => None,
            })
            .collect();
        Ok(AdaptiveRunner { circuit: c.clone(), measurements, cap, memo: HashMap::new(), stats: ContractionStats::default() })
    }

    pub fn measurement(&self, t: usize) -> (usize, usize, &str) {
        let (i, l, r) = &self.measurements[t];
        (*i, *l, r)
    }

    /// The instructions before measurement `history.len()` (or all of them),
    /// with earlier measurements replaced by `Π/√p` and conditions resolved.
    pub fn folded_prefix(&mut self, history: &[u8]) -> Result<Circuit, NetError> {
        let probs = history_probs(self, history)?;
        self.fold(history, &probs)
    }

    fn fold(&self, history: &[u8], probs: &[f64]) -> Result<Circuit, NetError> {
        let end = self.measurements.get(history.len()).map(|m| m.0).unwrap_or(self.circuit.instructions.len());
        let mut out = Circuit::new(self.circuit.n_qubits);
        out.linear = true;
        let mut t = 0;
        for ins in &self.circuit.instructions[..end] {
            if let Op::Measure { line, .. } = ins.op {
                out.instructions.push(Instruction::new(Op::OneQubit { line, matrix: collapse_operator(history[t], probs[t]) }));
                t += 1;
                continue;
            }
            if let Some(cond) = &ins.condition {
                let written = self.measurements[..t].iter().position(|m| m.2 == cond.register);
                let active = written.map(|w| history[w] == cond.bit).unwrap_or(false);
                if !active {
                    continue;
                }
            }
            out.instructions.push(Instruction::new(ins.op.clone()));
        }
        Ok(out)
    }
}

impl AdaptiveRunner {
    pub fn stats(&self) -> &ContractionStats {
        &self.stats
    }
}

impl ConditionalSource for AdaptiveRunner {
    type Error = NetError;

    fn measurement_count(&self) -> usize {
        self.measurements.len()
    }

    fn conditionals(&mut self, history: &[u8]) -> Result<(f64, f64), NetError> {
        if history.len() >= self.measurement_count() {
            return Ok((1.0, 0.0));
        }
        if let Some(&v) = self.memo.get(history) {
            return Ok(v);
        }
        let probs = history_probs(self, history)?;
        for (t, (&b, &p)) in history.iter().zip(&probs).enumerate() {
            if p < PROBABILITY_FLOOR {
                return Err(NetError::ZeroProbabilityCondition { line: self.measurements[t].1, bit: b, prob: p });
            }
        }
        let prefix = self.fold(history, &probs)?;
        let line = self.measurements[history.len()].1;
        let net = build_doubled_network(&prepare(&prefix)?, &[])?;
        let mut p = [0.0; 2];
        for (bit, slot) in p.iter_mut().enumerate() {
            let (v, s) = contract_with_stats(&net.with_insertion(line, &gates::projector(bit as u8))?, self.cap)?;
            self.stats.merge(&s);
            *slot = to_probability(v)?;
        }
        let v = normalized(line, p[0], p[1])?;
        self.memo.insert(history.to_vec(), v);
        Ok(v)
    }
}

/// One full pass through the measurements of `src`, drawing a uniform
/// `u` per step: outcome 0 iff `u < p0`. Returns the bits and the
/// conditional probability of each.
pub fn sample_once<S: ConditionalSource + ?Sized, R: Rng + ?Sized>(
    src: &mut S,
    rng: &mut R,
) -> Result<(Vec<u8>, Vec<f64>), S::Error> {
    let m = src.measurement_count();
    let mut bits = Vec::with_capacity(m);
    let mut probs = Vec::with_capacity(m);
    for _ in 0..m {
        let (p0, p1) = src.conditionals(&bits)?;
        let u: f64 = rng.random();
        let bit = u8::from(u >= p0);
        probs.push(if bit == 0 { p0 } else { p1 });
        bits.push(bit);
    }
    Ok((bits, probs))
}

/// Every outcome sequence with probability above [`PROBABILITY_FLOOR`]
/// per step, with its joint probability.
pub fn exact_outcomes<S: ConditionalSource + ?Sized>(src: &mut S) -> Result<Vec<(Vec<u8>, f64)>, S::Error> {
    let m = src.measurement_count();
    let mut out = Vec::new();
    let mut stack = vec![(Vec::new(), 1.0)];
    while let Some((hist, prob)) = stack.pop() {
        if hist.len() == m {
            out.push((hist, prob));
            continue;
        }
        let (p0, p1) = src.conditionals(&hist)?;
        for (bit, p) in [(1u8, p1), (0u8, p0)] {
            if p > PROBABILITY_FLOOR {
                let mut h = hist.clone();
                h.push(bit);
                stack.push((h, prob * p));
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointSample {
    pub lines: Vec<usize>,
    pub bits: String,
    pub probability: f64,
}

/// One chain-rule sample of `lines` (in that order), deterministic in `seed`.
pub fn sample_joint(c: &Circuit, lines: &[usize], seed: u64, cap: usize) -> Result<JointSample, NetError> {
    let mut sampler = JointSampler::new(c, lines, cap)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (bits, probs) = sample_once(&mut sampler, &mut rng)?;
    Ok(JointSample { lines: lines.to_vec(), bits: bits_string(&bits), probability: probs.iter().product() })
}

pub fn bits_string(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasurementRecord {
    pub instruction: usize,
    pub line: usize,
    pub register: String,
    pub outcome: u8,
    pub p0: f64,
    pub p1: f64,
}

#[derive(Clone, Debug)]
pub struct Transcript {
    pub outcomes: Vec<MeasurementRecord>,
    /// Whole circuit with measurements replaced by their realized `Π/√p`.
    pub final_circuit: Circuit,
    cap: usize,
}

impl Transcript {
    pub fn bits(&self) -> String {
        bits_string(&self.outcomes.iter().map(|m| m.outcome).collect::<Vec<_>>())
    }

    pub fn probability(&self) -> f64 {
        self.outcomes.iter().map(|m| if m.outcome == 0 { m.p0 } else { m.p1 }).product()
    }

    /// `(p0, p1)` for `line` in the post-measurement state.
    pub fn final_line_probabilities(&self, line: usize) -> Result<(f64, f64), NetError> {
        let net = build_doubled_network(&prepare(&self.final_circuit)?, &[])?;
        let mut p = [0.0; 2];
        for (bit, slot) in p.iter_mut().enumerate() {
            *slot = to_probability(contract_line_by_line(&net.with_insertion(line, &gates::projector(bit as u8))?, self.cap)?)?;
        }
        normalized(line, p[0], p[1])
    }
}

/// Runs `c` measurement by measurement, sampling each outcome from its
/// contracted conditional distribution.
pub fn run_adaptive(c: &Circuit, seed: u64, cap: usize) -> Result<Transcript, NetError> {
    let mut runner = AdaptiveRunner::new(c, cap)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (bits, _) = sample_once(&mut runner, &mut rng)?;
    let mut outcomes = Vec::with_capacity(bits.len());
    for t in 0..bits.len() {
        let (p0, p1) = runner.conditionals(&bits[..t])?;
        let (instruction, line, register) = runner.measurement(t);
        outcomes.push(MeasurementRecord { instruction, line, register: register.to_string(), outcome: bits[t], p0, p1 });
    }
    let final_circuit = runner.folded_prefix(&bits)?;
    Ok(Transcript { outcomes, final_circuit, cap })
}
