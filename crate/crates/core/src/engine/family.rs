//! Benchmark circuit families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{gates, Circuit};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Random two-qubit unitaries on `(0,1), (1,2), …, (n-2,n-1)`.
    Ladder,
    /// One random gate on `(i, i + n/2)` for each `i < n/2`.
    CrossingLayer,
    /// `M x N` cluster state, column-major lines.
    Cluster,
    /// Random unitaries on uniformly drawn line pairs.
    Random,
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "ladder" => Ok(Family::Ladder),
            "crossing" | "crossing_layer" => Ok(Family::CrossingLayer),
            "cluster" => Ok(Family::Cluster),
            "random" => Ok(Family::Random),
            other => Err(format!("unknown family `{other}` (expected ladder, crossing, cluster or random)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: Family,
    /// Line count; for clusters, the column height `N`.
    pub n: usize,
    /// Cluster column count `M`.
    pub m: Option<usize>,
    /// Gate count for `random` (default `4n`).
    pub gates: Option<usize>,
    pub seed: u64,
}

impl FamilySpec {
    pub fn new(family: Family, n: usize) -> Self {
        FamilySpec { family, n, m: None, gates: None, seed: 0 }
    }

    pub fn cluster(m: usize, n: usize) -> Self {
        FamilySpec { family: Family::Cluster, n, m: Some(m), gates: None, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_gates(mut self, gates: usize) -> Self {
        self.gates = Some(gates);
        self
    }

    /// Total qubit count of the generated circuit.
    pub fn qubits(&self) -> usize {
        match self.family {
            Family::Cluster => self.n * self.m.unwrap_or(1),
            _ => self.n,
        }
    }
}

/// Line of grid site `(col, row)` in a cluster of height `n`.
pub fn cluster_line(col: usize, row: usize, n: usize) -> usize {
    col * n + row
}

pub fn generate_family(spec: &FamilySpec) -> Result<Circuit> {
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let bad = |msg: String| Err(Error::Config(msg));
    match spec.family {
        Family::Ladder => {
            if n < 2 {
                return bad(format!("ladder needs at least 2 lines, got {n}"));
            }
            let mut c = Circuit::new(n);
            for i in 0..n - 1 {
                c.gate2(i, i + 1, gates::random_unitary(4, &mut rng));
            }
            Ok(c)
        }
        Family::CrossingLayer => {
            if n < 2 || n % 2 != 0 {
                return bad(format!("crossing layer needs an even line count of at least 2, got {n}"));
            }
            let mut c = Circuit::new(n);
            for i in 0..n / 2 {
                c.gate2(i, i + n / 2, gates::random_unitary(4, &mut rng));
            }
            Ok(c)
        }
        Family::Cluster => {
            let m = spec.m.unwrap_or(0);
            if m == 0 || n == 0 {
                return bad(format!("cluster needs positive dimensions, got {m}x{n}"));
            }
            let mut c = Circuit::new(m * n);
            for q in 0..m * n {
                c.h(q);
            }
            for col in 0..m {
                for row in 0..n {
                    let here = cluster_line(col, row, n);
                    if row + 1 < n {
                        c.cz(here, cluster_line(col, row + 1, n));
                    }
                    if col + 1 < m {
                        c.cz(here, cluster_line(col + 1, row, n));
                    }
                }
            }
            Ok(c)
        }
        Family::Random => {
            if n < 2 {
                return bad(format!("random family needs at least 2 lines, got {n}"));
            }
            let count = spec.gates.unwrap_or(4 * n);
            let mut c = Circuit::new(n);
            for _ in 0..count {
                let a = rng.random_range(0..n);
                let b = (a + rng.random_range(1..n)) % n;
                c.gate2(a, b, gates::random_unitary(4, &mut rng));
            }
            Ok(c)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{validate, Op};
    use crate::transform::{d_profile, Stage};

    #[test]
    fn ladder_profile() {
        let c = generate_family(&FamilySpec::new(Family::Ladder, 5)).unwrap();
        assert_eq!(c.two_qubit_gate_count(), 4);
        assert_eq!(d_profile(&c, Stage::Raw).d_max, 2);
        assert!(validate(&c).is_empty());
    }

    #[test]
    fn crossing_layer_profile() {
        let c = generate_family(&FamilySpec::new(Family::CrossingLayer, 8)).unwrap();
        assert_eq!(d_profile(&c, Stage::Raw).per_line[3], 4);
        assert!(generate_family(&FamilySpec::new(Family::CrossingLayer, 7)).is_err());
    }

    #[test]
    fn cluster_ranges() {
        let n = 2;
        let c = generate_family(&FamilySpec::cluster(4, n)).unwrap();
        assert_eq!(c.n_qubits, 8);
        for ins in &c.instructions {
            if let Op::TwoQubit { first, second, .. } = ins.op {
                assert!([1, n].contains(&first.abs_diff(second)));
            }
        }
        // 4 columns of 2: 4 vertical + 6 horizontal edges
        assert_eq!(c.two_qubit_gate_count(), 10);
        assert!(d_profile(&c, Stage::Raw).d_max <= 3 * n + 2);
        assert!(validate(&c).is_empty());
    }

    #[test]
    fn random_is_seeded() {
        let spec = FamilySpec::new(Family::Random, 6).with_seed(3).with_gates(10);
        let a = generate_family(&spec).unwrap();
        let b = generate_family(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.two_qubit_gate_count(), 10);
        assert!(validate(&a).is_empty());
    }
}
