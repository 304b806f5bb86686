//! Timing table over generated circuits.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{family::generate_family, run, FamilySpec, RunConfig, RNG_ALGORITHM, SCHEMA_VERSION};
use crate::transform::{d_profile, lower_to_adjacent, reduce, Stage};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub spec: FamilySpec,
    pub n_qubits: usize,
    pub gate_count: usize,
    pub d_raw: usize,
    pub d_reduced: usize,
    pub d_lowered: usize,
    pub seconds: f64,
    /// Peak Schmidt rank (mps) or peak open frontier indices (net).
    pub peak_width: Option<usize>,
    /// `"ok"` or the error that stopped the run.
    pub status: String,
    pub exit_code: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub schema_version: u32,
    pub rng_algorithm: String,
    pub backend: super::Backend,
    pub rows: Vec<BenchRow>,
}

/// Runs every spec with `cfg` and records wall-clock time and peak width.
/// Failures (caps, bad parameters) are recorded in the row, not returned.
pub fn bench(specs: &[FamilySpec], cfg: &RunConfig) -> BenchTable {
    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        let circuit = match generate_family(spec) {
            Ok(c) => c,
            Err(e) => {
                rows.push(BenchRow {
                    spec: spec.clone(),
                    n_qubits: spec.qubits(),
                    gate_count: 0,
                    d_raw: 0,
                    d_reduced: 0,
                    d_lowered: 0,
                    seconds: 0.0,
                    peak_width: None,
                    status: e.to_string(),
                    exit_code: e.exit_code(),
                });
                continue;
            }
        };
        let reduced = reduce(&circuit);
        let d_raw = d_profile(&circuit, Stage::Raw).d_max;
        let d_reduced = d_profile(&reduced, Stage::Reduced).d_max;
        let d_lowered = d_profile(&lower_to_adjacent(&reduced), Stage::Lowered).d_max;
        let mut row_cfg = cfg.clone();
        row_cfg.report.d_profile = false;
        let start = Instant::now();
        let outcome = run(&circuit, &row_cfg);
        let seconds = start.elapsed().as_secs_f64();
        let (peak_width, status, exit_code) = match outcome {
            Ok(r) => (r.peak_width, "ok".to_string(), 0),
            Err(e) => (None, e.to_string(), e.exit_code()),
        };
        rows.push(BenchRow {
            spec: spec.clone(),
            n_qubits: circuit.n_qubits,
            gate_count: circuit.gate_count(),
            d_raw,
            d_reduced,
            d_lowered,
            seconds,
            peak_width,
            status,
            exit_code,
        });
    }
    BenchTable { schema_version: SCHEMA_VERSION, rng_algorithm: RNG_ALGORITHM.to_string(), backend: cfg.backend, rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Backend, Family};

    #[test]
    fn ladder_chi_within_four() {
        let specs: Vec<FamilySpec> = [8, 64, 512].iter().map(|&n| FamilySpec::new(Family::Ladder, n)).collect();
        let table = bench(&specs, &RunConfig::new(Backend::Mps));
        for row in &table.rows {
            assert_eq!(row.status, "ok");
            assert!(row.peak_width.unwrap() <= 4);
            assert_eq!(row.d_reduced, 2);
        }
    }

    #[test]
    fn empty_and_failing_rows() {
        let specs = vec![FamilySpec::new(Family::Random, 4).with_gates(0), FamilySpec::new(Family::CrossingLayer, 5)];
        let table = bench(&specs, &RunConfig::new(Backend::Mps));
        assert_eq!(table.rows[0].status, "ok");
        assert_eq!(table.rows[0].d_raw, 0);
        assert!(table.rows[0].seconds < 1.0);
        assert_ne!(table.rows[1].status, "ok");
        assert_eq!(table.rows[1].exit_code, 2);
    }

    #[test]
    fn crossing_layer_trips_chi_cap() {
        let mut cfg = RunConfig::new(Backend::Mps);
        cfg.caps.max_chi = 64;
        let table = bench(&[FamilySpec::new(Family::CrossingLayer, 24)], &cfg);
        assert_eq!(table.rows[0].exit_code, 3, "{}", table.rows[0].status);
        let dense = bench(
            &[FamilySpec::new(Family::CrossingLayer, 8), FamilySpec::new(Family::CrossingLayer, 12)],
            &RunConfig::new(Backend::Dense),
        );
        assert!(dense.rows.iter().all(|r| r.status == "ok"));
    }
}
