//! Named gate matrices and Haar-random unitaries.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::numerics::{ComplexMatrix, ONE, ZERO};

fn mat(rows: usize, entries: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_vec(rows, rows, entries.to_vec()).expect("library gates are well formed")
}

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn h() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    mat(2, &[r(s), r(s), r(s), r(-s)])
}

pub fn x() -> ComplexMatrix {
    mat(2, &[ZERO, ONE, ONE, ZERO])
}

pub fn y() -> ComplexMatrix {
    mat(2, &[ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO])
}

pub fn z() -> ComplexMatrix {
    mat(2, &[ONE, ZERO, ZERO, r(-1.0)])
}

pub fn s() -> ComplexMatrix {
    mat(2, &[ONE, ZERO, ZERO, C64::new(0.0, 1.0)])
}

pub fn t() -> ComplexMatrix {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    mat(2, &[ONE, ZERO, ZERO, C64::new(a, a)])
}

/// Control is the first (most significant) line.
pub fn cnot() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 3)] = ONE;
    m[(3, 2)] = ONE;
    m
}

pub fn cz() -> ComplexMatrix {
    ComplexMatrix::from_real_diag(&[1.0, 1.0, 1.0, -1.0])
}

pub fn swap() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    m[(0, 0)] = ONE;
    m[(1, 2)] = ONE;
    m[(2, 1)] = ONE;
    m[(3, 3)] = ONE;
    m
}

/// Projector onto the standard basis state `|bit⟩`.
pub fn projector(bit: u8) -> ComplexMatrix {
    if bit == 0 {
        ComplexMatrix::from_real_diag(&[1.0, 0.0])
    } else {
        ComplexMatrix::from_real_diag(&[0.0, 1.0])
    }
}

pub const ONE_QUBIT_NAMES: [&str; 6] = ["h", "x", "y", "z", "s", "t"];
pub const TWO_QUBIT_NAMES: [&str; 3] = ["cnot", "cz", "swap"];

pub fn by_name(name: &str) -> Option<ComplexMatrix> {
    Some(match name {
        "h" => h(),
        "x" => x(),
        "y" => y(),
        "z" => z(),
        "s" => s(),
        "t" => t(),
        "cnot" => cnot(),
        "cz" => cz(),
        "swap" => swap(),
        _ => return None,
    })
}

/// Library name whose matrix equals `m` exactly, if any.
pub fn name_of(m: &ComplexMatrix) -> Option<&'static str> {
    let names: &[&'static str] = match m.rows() {
        2 => &ONE_QUBIT_NAMES,
        4 => &TWO_QUBIT_NAMES,
        _ => return None,
    };
    names.iter().copied().find(|name| by_name(name).as_ref() == Some(m))
}

/// Haar-distributed unitary via Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<C64> =
            (0..dim).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
        for _ in 0..2 {
            for c in &cols {
                let proj: C64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, a) in v.iter_mut().zip(c) {
                    *x -= proj * a;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    let mut m = ComplexMatrix::zeros(dim, dim);
    for (c, col) in cols.iter().enumerate() {
        for (row, z) in col.iter().enumerate() {
            m[(row, c)] = *z;
        }
    }
    m
}

/// Reorders a 4x4 gate given in basis `|a b⟩` into basis `|b a⟩`.
pub fn flip_two_qubit(m: &ComplexMatrix) -> ComplexMatrix {
    let perm = |i: usize| ((i & 1) << 1) | (i >> 1);
    let mut out = ComplexMatrix::zeros(4, 4);
    for row in 0..4 {
        for col in 0..4 {
            out[(perm(row), perm(col))] = m[(row, col)];
        }
    }
    out
}
