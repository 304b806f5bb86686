//! Exact open-boundary matrix product states in Schmidt canonical form.
//!
//! Every site tensor `B[i]` has shape `(left, 2, right)` and is right
//! normalized: `Σ_s B^s B^s† = I`. The Schmidt coefficients across each cut
//! `i | i+1` are stored alongside. Together they give
//!
//! ```text
//!   |ψ⟩ = Σ B[0]^{s0} B[1]^{s1} … B[n-1]^{s(n-1)} |s0 s1 … s(n-1)⟩
//! ```
//!
//! with `Λ[i-1] · B[i]` holding the left Schmidt vectors of cut `i-1`
//! contracted into site `i`. One-qubit gates touch a single site, adjacent
//! two-qubit gates re-split the pair with one SVD, and measurements re-sweep
//! the chain. No truncation beyond round-off happens anywhere.

use num_complex::Complex64 as C64;

use crate::error::MpsError;
use crate::numerics::{is_unitary, matmul, rank_of, svd, ComplexMatrix, ComplexVector, RANK_TOLERANCE, ZERO};

/// Singular values below this fraction of the largest are dropped when a cut
/// is re-split. Exact simulation otherwise.
pub const DISCARD_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_EXPORT_CAP: usize = 20;
const UNITARY_TOL: f64 = 1e-8;
const NORM_TOL: f64 = 1e-10;
const MEASURE_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
struct Site {
    left: usize,
    right: usize,
    /// Row-major `(left, phys, right)`.
    data: Vec<C64>,
}

impl Site {
    fn from_matrix(left: usize, right: usize, m: ComplexMatrix) -> Self {
        debug_assert_eq!(m.rows() * m.cols(), left * 2 * right);
        Site { left, right, data: m.into_vec() }
    }

    /// Rows `(l, s)`, columns `r`.
    fn as_tall(&self) -> ComplexMatrix {
        ComplexMatrix::from_vec(self.left * 2, self.right, self.data.clone()).expect("site shape")
    }

    /// Rows `l`, columns `(s, r)`.
    fn as_wide(&self) -> ComplexMatrix {
        ComplexMatrix::from_vec(self.left, 2 * self.right, self.data.clone()).expect("site shape")
    }

    fn at(&self, l: usize, s: usize, r: usize) -> C64 {
        self.data[(l * 2 + s) * self.right + r]
    }
}

/// How `measure` picks the outcome.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OutcomeSource {
    /// Force this outcome (must have nonzero probability).
    Fixed(u8),
    /// Uniform draw in `[0, 1)`; outcome 0 iff `u < p0`.
    Draw(f64),
}

#[derive(Clone, Debug)]
pub struct MeasurementResult {
    pub probabilities: (f64, f64),
    pub outcome: u8,
    pub collapsed: MpsState,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpsState {
    sites: Vec<Site>,
    /// `weights[i]` are the Schmidt coefficients across cut `i | i+1`, descending.
    weights: Vec<Vec<f64>>,
}

impl MpsState {
    /// Product state, one normalized `(a, b)` pair per site.
    pub fn from_product(pairs: &[[C64; 2]]) -> Result<Self, MpsError> {
        let mut sites = Vec::with_capacity(pairs.len());
        for pair in pairs {
            let norm = (pair[0].norm_sqr() + pair[1].norm_sqr()).sqrt();
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(MpsError::NotNormalized(norm));
            }
            sites.push(Site { left: 1, right: 1, data: vec![pair[0], pair[1]] });
        }
        let weights = vec![vec![1.0]; pairs.len().saturating_sub(1)];
        Ok(Self { sites, weights })
    }

    pub fn zero_state(n: usize) -> Self {
        Self::from_product(&vec![[C64::new(1.0, 0.0), ZERO]; n]).expect("|0> is normalized")
    }

    /// Canonical form of a normalized `2^n` amplitude vector (line 0 most significant).
    pub fn from_statevector(v: &ComplexVector) -> Result<Self, MpsError> {
        let dim = v.dim();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(MpsError::NotPowerOfTwo(dim));
        }
        let norm = v.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(MpsError::NotNormalized(norm));
        }
        let n = dim.trailing_zeros() as usize;
        let mut sites: Vec<Option<Site>> = vec![None; n];
        // `rest` has rows = leading bits, cols = (s_j, bond to the right)
        let mut right = 1;
        let mut rest = ComplexMatrix::from_vec(dim / 2, 2, v.0.clone())?;
        for j in (1..n).rev() {
            let f = svd(&rest)?;
            let k = rank_of(&f.singular_values, DISCARD_TOLERANCE).max(1);
            let vd = first_rows(&f.v_dagger, k);
            sites[j] = Some(Site::from_matrix(k, right, vd));
            let us = scale_cols(&first_cols(&f.u, k), &f.singular_values[..k]);
            let rows = us.rows();
            rest = ComplexMatrix::from_vec(rows / 2, 2 * k, us.into_vec())?;
            right = k;
        }
        sites[0] = Some(Site::from_matrix(1, right, rest));
        let mut state = Self { sites: sites.into_iter().map(|s| s.expect("filled")).collect(), weights: Vec::new() };
        state.restore_weights()?;
        Ok(state)
    }

    pub fn n(&self) -> usize {
        self.sites.len()
    }

    /// Schmidt coefficients across cut `i | i+1` as stored.
    pub fn bond_weights(&self, cut: usize) -> &[f64] {
        &self.weights[cut]
    }

    /// Schmidt rank per cut: coefficients above `RANK_TOLERANCE` times the largest.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.weights.iter().map(|w| rank_of(w, RANK_TOLERANCE)).collect()
    }

    /// Stored bond sizes (may exceed `bond_dims` by round-off-level coefficients).
    pub fn stored_dims(&self) -> Vec<usize> {
        self.weights.iter().map(Vec::len).collect()
    }

    pub fn max_chi(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub fn schmidt_rank(&self, cut: usize) -> Result<usize, MpsError> {
        if cut + 1 >= self.n() {
            return Err(MpsError::CutOutOfRange { cut, n: self.n() });
        }
        Ok(rank_of(&self.weights[cut], RANK_TOLERANCE))
    }

    pub fn to_statevector(&self) -> Result<ComplexVector, MpsError> {
        self.to_statevector_capped(DEFAULT_EXPORT_CAP)
    }

    pub fn to_statevector_capped(&self, cap: usize) -> Result<ComplexVector, MpsError> {
        if self.n() > cap {
            return Err(MpsError::TooManySites { n: self.n(), cap });
        }
        // acc: rows = prefix bitstrings, cols = right bond
        let mut acc = ComplexMatrix::identity(1);
        for site in &self.sites {
            let prod = matmul(&acc, &site.as_wide())?;
            acc = ComplexMatrix::from_vec(prod.rows() * 2, site.right, prod.into_vec())?;
        }
        Ok(ComplexVector(acc.into_vec()))
    }

    fn check_line(&self, line: usize) -> Result<(), MpsError> {
        if line >= self.n() {
            return Err(MpsError::LineOutOfRange { line, n: self.n() });
        }
        Ok(())
    }

    /// One-qubit gate: rotates the physical index of one site; no bond changes.
    pub fn apply_1q(&mut self, line: usize, u: &ComplexMatrix) -> Result<(), MpsError> {
        self.check_line(line)?;
        check_gate(u, 2)?;
        let site = &mut self.sites[line];
        let r = site.right;
        for l in 0..site.left {
            for c in 0..r {
                let a0 = site.data[(l * 2) * r + c];
                let a1 = site.data[(l * 2 + 1) * r + c];
                site.data[(l * 2) * r + c] = u[(0, 0)] * a0 + u[(0, 1)] * a1;
                site.data[(l * 2 + 1) * r + c] = u[(1, 0)] * a0 + u[(1, 1)] * a1;
            }
        }
        Ok(())
    }

    /// Two-qubit gate on `(left_line, left_line + 1)` in basis `|q_left q_right⟩`.
    pub fn apply_2q_adjacent(&mut self, left_line: usize, u: &ComplexMatrix) -> Result<(), MpsError> {
        if left_line + 1 >= self.n() {
            return Err(MpsError::LineOutOfRange { line: left_line + 1, n: self.n() });
        }
        check_gate(u, 4)?;
        let i = left_line;
        let (a, b) = (&self.sites[i], &self.sites[i + 1]);
        let (l, rr) = (a.left, b.right);
        // theta rows (l, s1), cols (s2, r)
        let theta = matmul(&a.as_tall(), &b.as_wide())?;
        let mut gated = ComplexMatrix::zeros(2 * l, 2 * rr);
        for li in 0..l {
            for r in 0..rr {
                let v = [
                    theta[(li * 2, r)],
                    theta[(li * 2, rr + r)],
                    theta[(li * 2 + 1, r)],
                    theta[(li * 2 + 1, rr + r)],
                ];
                for t1 in 0..2 {
                    for t2 in 0..2 {
                        let row = u.row(t1 * 2 + t2);
                        gated[(li * 2 + t1, t2 * rr + r)] = row.iter().zip(&v).map(|(x, y)| x * y).sum();
                    }
                }
            }
        }
        let left_weights = self.left_weights(i);
        let mut weighted = gated.clone();
        for li in 0..l {
            for c in 0..2 * rr {
                weighted[(li * 2, c)] *= left_weights[li];
                weighted[(li * 2 + 1, c)] *= left_weights[li];
            }
        }
        let f = svd(&weighted)?;
        let k = rank_of(&f.singular_values, DISCARD_TOLERANCE).max(1);
        let vd = first_rows(&f.v_dagger, k);
        let new_left = matmul(&gated, &vd.adjoint())?;
        let mut w = f.singular_values[..k].to_vec();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut new_left = new_left;
        if norm > 0.0 && (norm - 1.0).abs() > f64::EPSILON {
            w.iter_mut().for_each(|x| *x /= norm);
            new_left = new_left.scale(C64::new(1.0 / norm, 0.0));
        }
        self.sites[i] = Site::from_matrix(l, k, new_left);
        self.sites[i + 1] = Site::from_matrix(k, rr, vd);
        self.weights[i] = w;
        Ok(())
    }

    /// Two-qubit gate on arbitrary distinct lines, basis `|q_j q_k⟩`. Non-adjacent
    /// pairs are brought together with adjacent swaps and restored afterwards.
    pub fn apply_2q(&mut self, j: usize, k: usize, u: &ComplexMatrix) -> Result<(), MpsError> {
        self.check_line(j)?;
        self.check_line(k)?;
        if j == k {
            return Err(MpsError::SameLine(j));
        }
        check_gate(u, 4)?;
        let (a, b) = (j.min(k), j.max(k));
        let swap = crate::circuit::gates::swap();
        for l in a..b - 1 {
            self.apply_2q_adjacent(l, &swap)?;
        }
        if j < k {
            self.apply_2q_adjacent(b - 1, u)?;
        } else {
            self.apply_2q_adjacent(b - 1, &crate::circuit::gates::flip_two_qubit(u))?;
        }
        for l in (a..b - 1).rev() {
            self.apply_2q_adjacent(l, &swap)?;
        }
        Ok(())
    }

    /// Born probabilities `(p0, p1)` for a standard-basis measurement of `line`.
    pub fn probabilities(&self, line: usize) -> Result<(f64, f64), MpsError> {
        self.check_line(line)?;
        let lw = self.left_weights(line);
        let site = &self.sites[line];
        let mut p = [0.0; 2];
        for (l, &w) in lw.iter().enumerate() {
            for (s, ps) in p.iter_mut().enumerate() {
                for r in 0..site.right {
                    *ps += w * w * site.at(l, s, r).norm_sqr();
                }
            }
        }
        Ok((p[0], p[1]))
    }

    /// Measures `line`, leaving `self` collapsed onto the realized outcome.
    pub fn measure_in_place(&mut self, line: usize, source: OutcomeSource) -> Result<(u8, (f64, f64)), MpsError> {
        let (p0, p1) = self.probabilities(line)?;
        if p0 < MEASURE_FLOOR && p1 < MEASURE_FLOOR {
            return Err(MpsError::InconsistentMeasurement { line, p0, p1 });
        }
        let outcome = match source {
            OutcomeSource::Fixed(bit) => bit,
            OutcomeSource::Draw(u) => u8::from(u >= p0),
        };
        let p = if outcome == 0 { p0 } else { p1 };
        if p < MEASURE_FLOOR {
            return Err(MpsError::InconsistentMeasurement { line, p0, p1 });
        }
        let scale = 1.0 / p.sqrt();
        let site = &mut self.sites[line];
        let r = site.right;
        for l in 0..site.left {
            for s in 0..2 {
                for c in 0..r {
                    let z = &mut site.data[(l * 2 + s) * r + c];
                    *z = if s == outcome as usize { *z * scale } else { ZERO };
                }
            }
        }
        self.sweep_left_from(line)?;
        self.restore_weights()?;
        Ok((outcome, (p0, p1)))
    }

    pub fn measure(&self, line: usize, source: OutcomeSource) -> Result<MeasurementResult, MpsError> {
        let mut collapsed = self.clone();
        let (outcome, probabilities) = collapsed.measure_in_place(line, source)?;
        Ok(MeasurementResult { probabilities, outcome, collapsed })
    }

    /// Largest deviation from the canonical-form identities: right
    /// normalization of every site, and the left environment of every cut
    /// equal to `diag(Λ²)`.
    pub fn canonical_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for site in &self.sites {
            let wide = site.as_wide();
            let gram = matmul(&wide, &wide.adjoint()).expect("conformable");
            worst = worst.max(gram.max_abs_diff(&ComplexMatrix::identity(site.left)).unwrap_or(f64::INFINITY));
        }
        let mut env = ComplexMatrix::identity(1);
        for (cut, site) in self.sites.iter().take(self.n().saturating_sub(1)).enumerate() {
            let mut next = ComplexMatrix::zeros(site.right, site.right);
            for b in 0..site.right {
                for bp in 0..site.right {
                    let mut acc = ZERO;
                    for a in 0..site.left {
                        for ap in 0..site.left {
                            let e = env[(a, ap)];
                            if e == ZERO {
                                continue;
                            }
                            for s in 0..2 {
                                acc += e * site.at(a, s, b) * site.at(ap, s, bp).conj();
                            }
                        }
                    }
                    next[(b, bp)] = acc;
                }
            }
            let lam: Vec<f64> = self.weights[cut].iter().map(|x| x * x).collect();
            if lam.len() != site.right {
                return f64::INFINITY;
            }
            worst = worst.max(next.max_abs_diff(&ComplexMatrix::from_real_diag(&lam)).unwrap_or(f64::INFINITY));
            env = next;
        }
        worst
    }

    fn left_weights(&self, site: usize) -> Vec<f64> {
        if site == 0 {
            vec![1.0]
        } else {
            self.weights[site - 1].clone()
        }
    }

    /// Makes sites `1..=from` right normalized by pushing the remainder left.
    fn sweep_left_from(&mut self, from: usize) -> Result<(), MpsError> {
        for j in (1..=from).rev() {
            let site = &self.sites[j];
            let (l, r) = (site.left, site.right);
            let f = svd(&site.as_wide())?;
            let k = rank_of(&f.singular_values, DISCARD_TOLERANCE).max(1);
            let us = scale_cols(&first_cols(&f.u, k), &f.singular_values[..k]);
            self.sites[j] = Site::from_matrix(k, r, first_rows(&f.v_dagger, k));
            let prev = &self.sites[j - 1];
            let merged = matmul(&prev.as_tall(), &us)?;
            debug_assert_eq!(us.rows(), l);
            self.sites[j - 1] = Site::from_matrix(prev.left, k, merged);
        }
        Ok(())
    }

    /// Recomputes every cut's Schmidt coefficients left to right, assuming
    /// sites `1..n` are right normalized. Bond bases are rotated onto the
    /// Schmidt bases as it goes.
    fn restore_weights(&mut self) -> Result<(), MpsError> {
        let n = self.n();
        let mut weights = Vec::with_capacity(n.saturating_sub(1));
        let mut carry: Option<ComplexMatrix> = None;
        let mut lam_prev = vec![1.0];
        for c in 0..n {
            if let Some(vd) = carry.take() {
                let site = &self.sites[c];
                let rotated = matmul(&vd, &site.as_wide())?;
                self.sites[c] = Site::from_matrix(vd.rows(), site.right, rotated);
            }
            if c + 1 == n {
                break;
            }
            let site = &self.sites[c];
            let (l, r) = (site.left, site.right);
            let mut theta = site.as_tall();
            for li in 0..l {
                for col in 0..r {
                    theta[(li * 2, col)] *= lam_prev[li];
                    theta[(li * 2 + 1, col)] *= lam_prev[li];
                }
            }
            let f = svd(&theta)?;
            let k = rank_of(&f.singular_values, DISCARD_TOLERANCE).max(1);
            let vd = first_rows(&f.v_dagger, k);
            let rotated = matmul(&site.as_tall(), &vd.adjoint())?;
            self.sites[c] = Site::from_matrix(l, k, rotated);
            let w = f.singular_values[..k].to_vec();
            lam_prev = w.clone();
            weights.push(w);
            carry = Some(vd);
        }
        self.weights = weights;
        Ok(())
    }
}

fn check_gate(u: &ComplexMatrix, dim: usize) -> Result<(), MpsError> {
    if u.rows() != dim || u.cols() != dim {
        return Err(MpsError::GateShape { expected: dim, rows: u.rows(), cols: u.cols() });
    }
    if !is_unitary(u, UNITARY_TOL)? {
        return Err(MpsError::NotUnitary);
    }
    Ok(())
}

fn first_rows(m: &ComplexMatrix, k: usize) -> ComplexMatrix {
    let data = m.as_slice()[..k * m.cols()].to_vec();
    ComplexMatrix::from_vec(k, m.cols(), data).expect("row slice")
}

fn first_cols(m: &ComplexMatrix, k: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(m.rows(), k);
    for r in 0..m.rows() {
        for c in 0..k {
            out[(r, c)] = m[(r, c)];
        }
    }
    out
}

fn scale_cols(m: &ComplexMatrix, s: &[f64]) -> ComplexMatrix {
    let mut out = m.clone();
    for r in 0..m.rows() {
        for (c, &x) in s.iter().enumerate() {
            out[(r, c)] *= x;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::gates;
    use crate::dense::StateVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    const R: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn random_state(rng: &mut ChaCha20Rng, n: usize) -> ComplexVector {
        let v: Vec<C64> = (0..1 << n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        ComplexVector(v.into_iter().map(|z| z / norm).collect())
    }

    fn bell() -> MpsState {
        let mut s = MpsState::zero_state(2);
        s.apply_1q(0, &gates::h()).unwrap();
        s.apply_2q_adjacent(0, &gates::cnot()).unwrap();
        s
    }

    #[test]
    fn product_states() {
        let s = MpsState::zero_state(3);
        assert_eq!(s.bond_dims(), vec![1, 1]);
        let plus = MpsState::from_product(&[[c(R), c(R)], [c(1.0), ZERO]]).unwrap();
        let v = plus.to_statevector().unwrap();
        let expect = [c(R), ZERO, c(R), ZERO];
        for (a, b) in v.0.iter().zip(expect) {
            assert!((a - b).norm() < 1e-15);
        }
        let v = MpsState::from_product(&[[c(1.0), ZERO], [ZERO, c(1.0)]]).unwrap().to_statevector().unwrap();
        assert_eq!(v.0, vec![ZERO, c(1.0), ZERO, ZERO]);
        assert!(matches!(MpsState::from_product(&[[c(1.0), c(1.0)]]), Err(MpsError::NotNormalized(_))));
    }

    #[test]
    fn bell_from_statevector() {
        let s = MpsState::from_statevector(&ComplexVector(vec![c(R), ZERO, ZERO, c(R)])).unwrap();
        assert_eq!(s.bond_dims(), vec![2]);
        for w in s.bond_weights(0) {
            assert!((w - R).abs() < 1e-14);
        }
        let s = MpsState::from_statevector(&ComplexVector(vec![c(1.0), ZERO, ZERO, ZERO, ZERO, ZERO, ZERO, ZERO])).unwrap();
        assert_eq!(s.bond_dims(), vec![1, 1]);
        assert!(matches!(MpsState::from_statevector(&ComplexVector(vec![c(1.0); 3])), Err(MpsError::NotPowerOfTwo(3))));
        assert!(matches!(MpsState::from_statevector(&ComplexVector(vec![c(1.0); 4])), Err(MpsError::NotNormalized(_))));
    }

    #[test]
    fn bell_by_gates() {
        let s = bell();
        assert_eq!(s.bond_dims(), vec![2]);
        let v = s.to_statevector().unwrap();
        assert!(v.distance_up_to_phase(&ComplexVector(vec![c(R), ZERO, ZERO, c(R)])) < 1e-14);
        assert!(s.canonical_residual() < 1e-12);
    }

    #[test]
    fn roundtrip_random_states() {
        let mut rng = ChaCha20Rng::seed_from_u64(41);
        for n in 1..=8 {
            let v = random_state(&mut rng, n);
            if n == 1 {
                assert!(MpsState::from_statevector(&v).is_ok());
                continue;
            }
            let s = MpsState::from_statevector(&v).unwrap();
            assert!(s.to_statevector().unwrap().distance_up_to_phase(&v) < 1e-10);
            assert!(s.canonical_residual() < 1e-10);
        }
    }

    #[test]
    fn identity_gate_is_noop() {
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        let mut s = MpsState::from_statevector(&random_state(&mut rng, 4)).unwrap();
        let before = s.clone();
        s.apply_1q(2, &ComplexMatrix::identity(2)).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn h_on_single_site() {
        let mut s = MpsState::zero_state(1);
        s.apply_1q(0, &gates::h()).unwrap();
        let v = s.to_statevector().unwrap();
        assert!((v.0[0] - c(R)).norm() < 1e-15 && (v.0[1] - c(R)).norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_gates_and_lines() {
        let mut s = MpsState::zero_state(3);
        assert!(matches!(s.apply_1q(3, &gates::h()), Err(MpsError::LineOutOfRange { .. })));
        assert!(matches!(s.apply_1q(0, &ComplexMatrix::from_real_diag(&[1.0, 2.0])), Err(MpsError::NotUnitary)));
        assert!(matches!(s.apply_2q_adjacent(2, &gates::cnot()), Err(MpsError::LineOutOfRange { .. })));
        assert!(matches!(s.apply_2q(1, 1, &gates::cnot()), Err(MpsError::SameLine(1))));
        assert!(matches!(s.schmidt_rank(2), Err(MpsError::CutOutOfRange { .. })));
    }

    #[test]
    fn swap_between_bell_pairs_is_tight() {
        let mut s = MpsState::zero_state(4);
        for a in [0, 2] {
            s.apply_1q(a, &gates::h()).unwrap();
            s.apply_2q_adjacent(a, &gates::cnot()).unwrap();
        }
        assert_eq!(s.bond_dims(), vec![2, 1, 2]);
        s.apply_2q_adjacent(1, &gates::swap()).unwrap();
        assert_eq!(s.schmidt_rank(1).unwrap(), 4);
    }

    #[test]
    fn long_range_cnot_on_basis_state() {
        let mut s = MpsState::from_product(&[[ZERO, c(1.0)], [c(1.0), ZERO], [c(1.0), ZERO], [c(1.0), ZERO]]).unwrap();
        s.apply_2q(0, 3, &gates::cnot()).unwrap();
        let v = s.to_statevector().unwrap();
        assert!((v.0[0b1001] - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn matches_dense_on_random_gates() {
        let mut rng = ChaCha20Rng::seed_from_u64(43);
        let n = 7;
        let mut s = MpsState::zero_state(n);
        let mut d = StateVector::zero_state(n);
        for _ in 0..40 {
            if rng.random_bool(0.4) {
                let l = rng.random_range(0..n);
                let u = gates::random_unitary(2, &mut rng);
                let dims = s.bond_dims();
                s.apply_1q(l, &u).unwrap();
                assert_eq!(s.bond_dims(), dims);
                d.apply_1q(l, &u).unwrap();
            } else {
                let a = rng.random_range(0..n);
                let b = (a + rng.random_range(1..n)) % n;
                let u = gates::random_unitary(4, &mut rng);
                s.apply_2q(a, b, &u).unwrap();
                d.apply_2q(a, b, &u).unwrap();
            }
            assert!(s.canonical_residual() < 1e-8);
        }
        assert!(s.to_statevector().unwrap().distance_up_to_phase(&d.to_vector()) < 1e-10);
    }

    #[test]
    fn measurements() {
        let mut plus = MpsState::zero_state(1);
        plus.apply_1q(0, &gates::h()).unwrap();
        let (p0, p1) = plus.probabilities(0).unwrap();
        assert!((p0 - 0.5).abs() < 1e-15 && (p1 - 0.5).abs() < 1e-15);

        let zero = MpsState::zero_state(1);
        let m = zero.measure(0, OutcomeSource::Draw(0.7)).unwrap();
        assert_eq!(m.outcome, 0);
        assert_eq!(m.probabilities, (1.0, 0.0));
        assert!(matches!(zero.measure(0, OutcomeSource::Fixed(1)), Err(MpsError::InconsistentMeasurement { .. })));

        let mut ghz = MpsState::zero_state(3);
        ghz.apply_1q(0, &gates::h()).unwrap();
        ghz.apply_2q_adjacent(0, &gates::cnot()).unwrap();
        ghz.apply_2q_adjacent(1, &gates::cnot()).unwrap();
        let m = ghz.measure(1, OutcomeSource::Fixed(0)).unwrap();
        assert!((m.probabilities.0 - 0.5).abs() < 1e-14);
        let v = m.collapsed.to_statevector().unwrap();
        assert!((v.0[0].norm() - 1.0).abs() < 1e-12);
        assert_eq!(m.collapsed.bond_dims(), vec![1, 1]);
        assert!(m.collapsed.canonical_residual() < 1e-12);
    }
}
