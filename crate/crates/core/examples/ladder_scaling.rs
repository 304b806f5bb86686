//! Nearest-neighbour ladders grow linearly in n with bounded Schmidt rank;
//! a crossing layer of the same size does not.

use tnqsim::engine::{bench, Backend, Family, FamilySpec, RunConfig};

fn main() {
    let ladders: Vec<_> = [16, 64, 256, 1024].iter().map(|&n| FamilySpec::new(Family::Ladder, n)).collect();
    let mut cfg = RunConfig::new(Backend::Mps);
    let table = bench(&ladders, &cfg);
    for row in &table.rows {
        println!("ladder n={:5} D={} chi={:?} {:.4}s", row.n_qubits, row.d_reduced, row.peak_width, row.seconds);
    }

    cfg.caps.max_chi = 64;
    let crossing = bench(&[FamilySpec::new(Family::CrossingLayer, 16), FamilySpec::new(Family::CrossingLayer, 24)], &cfg);
    for row in &crossing.rows {
        println!("crossing n={:3} D={} -> {} (exit {})", row.n_qubits, row.d_reduced, row.status, row.exit_code);
    }
}
