//! Reduce, lower and profile a circuit with a long-range gate.

use tnqsim::{cost_estimate, d_profile, emit_circuit, lower_to_adjacent, parse_circuit, reduce, Stage};

const SOURCE: &str = "\
qubits 5
h 0
t 0
cnot 0 4     # range 4
cz 1 2
cz 1 2       # cancels with the one above after fusion
s 3
swap 2 3
";

fn main() -> tnqsim::Result<()> {
    let raw = parse_circuit(SOURCE)?;
    let reduced = reduce(&raw);
    let lowered = lower_to_adjacent(&reduced);
    for (stage, c) in [(Stage::Raw, &raw), (Stage::Reduced, &reduced), (Stage::Lowered, &lowered)] {
        let p = d_profile(c, stage);
        let est = cost_estimate(&p);
        println!(
            "{stage:?}: {} gates, D_i = {:?}, D = {}, log2 steps ~ {:.1}",
            c.gate_count(),
            p.per_line,
            p.d_max,
            est.log2_steps
        );
    }
    println!("\nlowered circuit:\n{}", emit_circuit(&lowered));
    Ok(())
}
