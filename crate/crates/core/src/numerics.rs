//! Dense complex linear algebra shared by every backend.
//!
//! Matrices are row-major. Kronecker products put the first factor's index in
//! the most significant position, matching the bit ordering used for qubit
//! lines everywhere else in the crate (line 0 is the most significant bit).

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64 as C64;

use crate::error::NumericsError;

/// Singular values at or below this fraction of the largest one are treated as
/// zero when counting Schmidt ranks.
pub const RANK_TOLERANCE: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 120;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::DimensionMismatch {
                op: "from_vec",
                left: (rows, cols),
                right: (data.len(), 1),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(NumericsError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * factor).collect() }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, NumericsError> {
        matmul(self, other)
    }

    pub fn kron(&self, other: &Self) -> Self {
        kron(self, other)
    }

    /// Largest entrywise modulus of `self - other`; `None` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> Option<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return None;
        }
        Some(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>, NumericsError> {
        if v.len() != self.cols {
            return Err(NumericsError::DimensionMismatch {
                op: "apply",
                left: (self.rows, self.cols),
                right: (v.len(), 1),
            });
        }
        Ok((0..self.rows)
            .map(|r| self.data[r * self.cols..(r + 1) * self.cols].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub(crate) fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Amplitude list, e.g. a statevector in the standard basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector(pub Vec<C64>);

impl ComplexVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    /// Max entrywise distance after aligning the global phase of `other` to `self`.
    pub fn distance_up_to_phase(&self, other: &Self) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        let overlap: C64 = other.0.iter().zip(&self.0).map(|(b, a)| b.conj() * a).sum();
        let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b * phase).norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: ComplexMatrix,
    /// Descending, nonnegative.
    pub singular_values: Vec<f64>,
    pub v_dagger: ComplexMatrix,
}

impl SvdResult {
    /// Number of singular values above `RANK_TOLERANCE` times the largest.
    pub fn rank(&self) -> usize {
        rank_of(&self.singular_values, RANK_TOLERANCE)
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let k = self.singular_values.len();
        let mut us = self.u.clone();
        for r in 0..us.rows() {
            for c in 0..k {
                us[(r, c)] *= self.singular_values[c];
            }
        }
        matmul(&us, &self.v_dagger).expect("svd factors are conformable")
    }
}

/// Counts entries of a descending spectrum above `rel_tol` times its first entry.
pub fn rank_of(singular_values: &[f64], rel_tol: f64) -> usize {
    match singular_values.first() {
        Some(&top) if top > 0.0 => singular_values.iter().take_while(|&&s| s > rel_tol * top).count(),
        _ => 0,
    }
}

pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, NumericsError> {
    if a.cols != b.rows {
        return Err(NumericsError::DimensionMismatch {
            op: "matmul",
            left: (a.rows, a.cols),
            right: (b.rows, b.cols),
        });
    }
    let mut out = ComplexMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            if aik == ZERO {
                continue;
            }
            let b_row = &b.data[k * b.cols..(k + 1) * b.cols];
            for (o, bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            let x = a[(ar, ac)];
            for br in 0..b.rows {
                for bc in 0..b.cols {
                    out[(ar * b.rows + br, ac * b.cols + bc)] = x * b[(br, bc)];
                }
            }
        }
    }
    out
}

/// True iff `‖a†a − I‖_max ≤ tol`.
pub fn is_unitary(a: &ComplexMatrix, tol: f64) -> Result<bool, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::NotSquare { rows: a.rows, cols: a.cols });
    }
    let gram = matmul(&a.adjoint(), a)?;
    let dev = gram.max_abs_diff(&ComplexMatrix::identity(a.rows)).unwrap_or(f64::INFINITY);
    Ok(dev <= tol)
}

/// Thin singular value decomposition by one-sided (Hestenes) Jacobi rotations.
///
/// For an `m x n` input with `k = min(m, n)` the factors are `u: m x k`,
/// `k` singular values in descending order, and `v_dagger: k x n`. Columns of
/// `u` belonging to zero singular values are completed to an orthonormal set,
/// so `u†u = I` holds unconditionally.
pub fn svd(a: &ComplexMatrix) -> Result<SvdResult, NumericsError> {
    if a.rows < a.cols {
        let t = svd(&a.adjoint())?;
        return Ok(SvdResult { u: t.v_dagger.adjoint(), singular_values: t.singular_values, v_dagger: t.u.adjoint() });
    }
    let m = a.rows;
    let n = a.cols;
    // Column-major working copies so rotations touch contiguous memory.
    let mut cols: Vec<Vec<C64>> = (0..n).map(|c| (0..m).map(|r| a[(r, c)]).collect()).collect();
    let mut vcols: Vec<Vec<C64>> = (0..n)
        .map(|c| {
            let mut e = vec![ZERO; n];
            e[c] = ONE;
            e
        })
        .collect();

    // Columns this small are round-off; rotating them never settles.
    let negligible = a.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * 1e-30;
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < JACOBI_MAX_SWEEPS {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = ZERO;
                    for (x, y) in cp.iter().zip(cq) {
                        alpha += x.norm_sqr();
                        beta += y.norm_sqr();
                        gamma += x.conj() * y;
                    }
                    (alpha, beta, gamma)
                };
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() || alpha.min(beta) <= negligible {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let conj_phase = phase.conj();
                rotate_pair(&mut cols, p, q, c, s, conj_phase);
                rotate_pair(&mut vcols, p, q, c, s, conj_phase);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        let off = off_diagonal_ratio(&cols);
        return Err(NumericsError::SvdNoConvergence { sweeps, rows: m, cols: n, residual: off });
    }

    let mut order: Vec<(usize, f64)> =
        cols.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).enumerate().collect();
    order.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));

    let mut u_cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut singular_values = Vec::with_capacity(n);
    let mut v_dagger = ComplexMatrix::zeros(n, n);
    let mut pending_zero = Vec::new();
    for (slot, &(src, sigma)) in order.iter().enumerate() {
        let vc = &vcols[src];
        for (j, z) in vc.iter().enumerate() {
            v_dagger[(slot, j)] = z.conj();
        }
        if sigma * sigma > negligible && sigma > f64::MIN_POSITIVE {
            u_cols.push(cols[src].iter().map(|z| z / sigma).collect());
            singular_values.push(sigma);
        } else {
            u_cols.push(vec![ZERO; m]);
            singular_values.push(0.0);
            pending_zero.push(slot);
        }
    }
    complete_orthonormal(&mut u_cols, &pending_zero);

    let mut u = ComplexMatrix::zeros(m, n);
    for (c, col) in u_cols.iter().enumerate() {
        for (r, z) in col.iter().enumerate() {
            u[(r, c)] = *z;
        }
    }
    Ok(SvdResult { u, singular_values, v_dagger })
}

fn rotate_pair(cols: &mut [Vec<C64>], p: usize, q: usize, c: f64, s: f64, conj_phase: C64) {
    let (head, tail) = cols.split_at_mut(q);
    let cp = &mut head[p];
    let cq = &mut tail[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let w = *y * conj_phase;
        let nx = *x * c - w * s;
        let ny = *x * s + w * c;
        *x = nx;
        *y = ny;
    }
}

fn off_diagonal_ratio(cols: &[Vec<C64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for p in 0..cols.len() {
        for q in (p + 1)..cols.len() {
            let a: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
            let b: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
            let g: C64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x.conj() * y).sum();
            if a > 0.0 && b > 0.0 {
                worst = worst.max(g.norm() / (a * b).sqrt());
            }
        }
    }
    worst
}

/// Fills the listed (zeroed) columns with unit vectors orthogonal to all others.
fn complete_orthonormal(cols: &mut [Vec<C64>], slots: &[usize]) {
    if slots.is_empty() {
        return;
    }
    let m = cols[0].len();
    let mut candidate = 0;
    for &slot in slots {
        loop {
            assert!(candidate < m, "cannot complete more than m orthonormal columns");
            let mut v = vec![ZERO; m];
            v[candidate] = ONE;
            candidate += 1;
            // Two Gram-Schmidt passes for numerical orthogonality.
            for _ in 0..2 {
                for (j, other) in cols.iter().enumerate() {
                    if j == slot {
                        continue;
                    }
                    let proj: C64 = other.iter().zip(&v).map(|(o, x)| o.conj() * x).sum();
                    for (x, o) in v.iter_mut().zip(other) {
                        *x -= proj * o;
                    }
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-6 {
                cols[slot] = v.into_iter().map(|z| z / norm).collect();
                break;
            }
        }
    }
}
